"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class AdmissibilityError(ValueError):
    """Kernel/exponent pair violates the integrability condition."""


class QuadratureError(RuntimeError):
    """Node doubling failed to certify the requested tolerance."""


class GridMismatchError(ValueError):
    """Two radial profiles live on different grids."""


class EvalRangeError(ValueError):
    """Evaluation point beyond the represented range of a profile."""


class CoverageError(ValueError):
    """Rescaling asked for arguments outside the modeled region."""


class StepRejectedError(RuntimeError):
    """Embedded error estimate of a single step exceeded the tolerance."""

    def __init__(self, message, error_ratio):
        super().__init__(message)
        self.error_ratio = error_ratio


class ToleranceError(RuntimeError):
    """A certified tail or error bound cannot be brought below tolerance."""


class ConfigError(ValueError):
    """Experiment configuration is malformed."""
