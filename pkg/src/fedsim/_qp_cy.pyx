# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the box-constrained simplex projection and the
projected-gradient min-norm solve.

Semantics match the pure-numpy twins in ``_qp_py`` (same update rule,
same termination tests); only the arithmetic reduction order differs,
so results agree to float rounding rather than bit for bit.
"""

import numpy as np

from libc.math cimport fabs

DEF MAX_BISECT = 128
DEF SUM_TOL = 1e-12


cdef void _project(const double[::1] v, const double[::1] lo, const double[::1] hi,
                   double[::1] out) noexcept nogil:
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t i
    cdef double t_lo = v[0] - hi[0]
    cdef double t_hi = v[0] - lo[0]
    cdef double mid, s, x
    cdef int it
    for i in range(1, m):
        if v[i] - hi[i] < t_lo:
            t_lo = v[i] - hi[i]
        if v[i] - lo[i] > t_hi:
            t_hi = v[i] - lo[i]
    for it in range(MAX_BISECT):
        mid = 0.5 * (t_lo + t_hi)
        s = 0.0
        for i in range(m):
            x = v[i] - mid
            if x < lo[i]:
                x = lo[i]
            elif x > hi[i]:
                x = hi[i]
            out[i] = x
            s += x
        if fabs(s - 1.0) <= SUM_TOL:
            break
        if s > 1.0:
            t_lo = mid
        else:
            t_hi = mid


cdef double _quad(const double[:, ::1] G, const double[::1] lam) noexcept nogil:
    cdef Py_ssize_t m = G.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0
    cdef double row
    for i in range(m):
        row = 0.0
        for j in range(m):
            row += G[i, j] * lam[j]
        total += lam[i] * row
    return total


def project_kernel(v, lo, hi):
    out = np.empty_like(v)
    _project(v, lo, hi, out)
    return out


def min_norm_kernel(G, lam0, lo, hi, double tol, long max_iters):
    cdef const double[:, ::1] Gv = G
    cdef Py_ssize_t m = Gv.shape[0]
    lam_arr = np.array(lam0, dtype=np.float64, copy=True)
    best_arr = lam_arr.copy()
    v_arr = np.empty(m, dtype=np.float64)
    new_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] lam = lam_arr
    cdef double[::1] best = best_arr
    cdef double[::1] v = v_arr
    cdef double[::1] new = new_arr
    cdef const double[::1] lov = lo
    cdef const double[::1] hiv = hi
    cdef Py_ssize_t i, j
    cdef double trace = 0.0
    for i in range(m):
        trace += Gv[i, i]
    cdef double step = 1.0 / (2.0 * trace + 1e-12)
    cdef double best_obj = _quad(Gv, lam)
    cdef double obj, delta, g, d
    cdef long iters = 0
    cdef bint converged = 0
    with nogil:
        while iters < max_iters:
            iters += 1
            for i in range(m):
                g = 0.0
                for j in range(m):
                    g += Gv[i, j] * lam[j]
                v[i] = lam[i] - step * 2.0 * g
            _project(v, lov, hiv, new)
            delta = 0.0
            for i in range(m):
                d = fabs(new[i] - lam[i])
                if d > delta:
                    delta = d
                lam[i] = new[i]
            obj = _quad(Gv, lam)
            if obj < best_obj:
                best_obj = obj
                for i in range(m):
                    best[i] = lam[i]
            if delta <= tol:
                converged = 1
                break
    return best_arr, int(iters), bool(converged)
