"""Exception types shared across the package."""


class FedsimError(Exception):
    """Base class for all fedsim errors."""


class DimensionError(FedsimError, ValueError):
    """Operands have incompatible shapes or parameter dimensions."""


class ArgumentError(FedsimError, ValueError):
    """An argument violates an operation's preconditions."""


class FormatError(FedsimError, ValueError):
    """A data file or config document could not be parsed."""


class InfeasibleError(FedsimError, RuntimeError):
    """A constraint set turned out to be empty."""


class UnsupportedError(FedsimError, RuntimeError):
    """The requested operation is not defined for these inputs."""


class NonFiniteError(FedsimError, ArithmeticError):
    """A numeric result contains NaN or Inf."""
