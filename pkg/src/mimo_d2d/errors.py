"""Exception types shared across the package."""


class MimoD2dError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(MimoD2dError):
    """Invalid scenario configuration or unsupported parameter combination."""


class DomainError(MimoD2dError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularMatrixError(MimoD2dError):
    """Gram matrix too ill-conditioned to invert reliably."""

    def __init__(self, message: str, condition_estimate: float | None = None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class NumericalError(MimoD2dError):
    """A numerical procedure failed to converge or produced an invalid value."""


class StatisticalError(MimoD2dError):
    """Not enough samples to compute the requested statistic."""

    def __init__(self, message: str, required: int | None = None, got: int | None = None):
        super().__init__(message)
        self.required = required
        self.got = got
