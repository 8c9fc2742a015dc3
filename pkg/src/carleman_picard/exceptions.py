"""Exception types raised by the reconstruction pipeline."""


class CarlemanPicardError(Exception):
    """Base class for every error raised by this package."""


class NonPositiveDefinite(CarlemanPicardError):
    """The moment Gram matrix could not be factorized."""


class StabilityViolation(CarlemanPicardError, ValueError):
    """Explicit time stepping requested with dt/dx**2 above the stability limit."""


class NonFiniteField(CarlemanPicardError, FloatingPointError):
    """The forward field blew up."""


class GridMismatch(CarlemanPicardError, ValueError):
    """A requested boundary line does not coincide with a grid line."""


class InvalidInitialCondition(CarlemanPicardError, ValueError):
    """The initial value p must be strictly positive."""


class SingularSystem(CarlemanPicardError, ArithmeticError):
    """Banded Cholesky factorization of the normal equations failed."""


class MaxItersExceeded(CarlemanPicardError):
    """The Picard loop hit ``max_iters`` without meeting the stopping rule.

    The partial result is attached so callers can still write artifacts.
    """

    def __init__(self, message, profile=None, trace=None):
        super().__init__(message)
        self.profile = profile
        self.trace = trace


class CalibrationFailed(CarlemanPicardError):
    """No positive constant satisfies the weighted estimate on the calibration set."""


class MissingArtifact(CarlemanPicardError, FileNotFoundError):
    """A run directory lacks a file needed for post-processing."""


class ConfigError(CarlemanPicardError, ValueError):
    """A run configuration violates a documented precondition."""
