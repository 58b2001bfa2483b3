"""Exception and warning types raised across the package."""


class SqBlockadeError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(SqBlockadeError, ValueError):
    pass


class TruncationError(SqBlockadeError):
    """The truncated Fock space is too small for the requested state."""


class ConstraintViolationError(SqBlockadeError, ValueError):
    """Reservoir parameters violate |M| <= sqrt(n(n+1)) or a sign constraint."""


class DegenerateSteadyStateError(SqBlockadeError):
    pass


class ConvergenceError(SqBlockadeError):
    pass


class EmptyCavityError(SqBlockadeError, ZeroDivisionError):
    """Mean photon number is below the division guard."""


class OrderExceedsTruncationError(SqBlockadeError, ValueError):
    pass


class NotHermitianError(SqBlockadeError, ValueError):
    pass


class ConfigError(SqBlockadeError, ValueError):
    pass


class TruncationWarning(UserWarning):
    pass
