"""Exception types shared across the package."""


class CodazziError(ValueError):
    pass


class DomainError(CodazziError):
    """A stencil or sample point leaves the chart's non-periodic range."""


class ConfigurationError(CodazziError):
    """Scheme or scenario parameters that cannot be honoured."""


class DegenerateMetricError(CodazziError):
    def __init__(self, smallest_eigenvalue, message=None):
        self.smallest_eigenvalue = float(smallest_eigenvalue)
        super().__init__(message or f"metric is not positive definite "
                                    f"(smallest eigenvalue {self.smallest_eigenvalue:.3e})")


class DimensionError(CodazziError):
    pass


class AssumptionViolation(CodazziError):
    """A structural hypothesis (adapted chart, fiber-constancy, ...) fails at a sample point."""
