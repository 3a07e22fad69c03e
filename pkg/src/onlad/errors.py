"""Exception hierarchy shared across the package."""


class OnladError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(OnladError, ValueError):
    """Operand shapes do not satisfy an operation's contract."""


class SingularMatrixError(OnladError, ArithmeticError):
    """A pivot fell below the singularity threshold during inversion."""


class NotInitializedError(OnladError, RuntimeError):
    """The model was used before its output weight was computed."""


class InitTooSmallError(OnladError, ValueError):
    """Fewer initial samples than hidden nodes; H0^T H0 cannot be inverted."""


class DatasetError(OnladError, ValueError):
    """Malformed or unusable input data."""


class PacketError(OnladError, ValueError):
    """A packet word or trace line could not be encoded or decoded."""
