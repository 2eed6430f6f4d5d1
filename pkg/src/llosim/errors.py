"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConfigurationError(ValueError):
    """A schedule, grid, controller or run configuration is inconsistent.

    ``field`` names the offending configuration entry when known, so the CLI
    can report it.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class EstimatorError(ValueError):
    """Covariance blocks cannot produce a predictor (singular or no correlation)."""
