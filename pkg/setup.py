"""Build script: compiles the QP kernels when Cython and a C compiler are
available; the package falls back to the pure-numpy kernels otherwise."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "fedsim._qp_cy",
                ["src/fedsim/_qp_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
