"""Exception types shared across the package.

The CLI maps ConfigError to exit code 2 and DependencyError to exit code 3;
everything else is an ordinary failure.
"""


class GprdaError(Exception):
    """Base class for package errors."""


class ConfigError(GprdaError):
    """Invalid or inconsistent configuration."""


class DependencyError(GprdaError):
    """A required upstream artifact (file) is missing."""


class StabilityError(GprdaError):
    """FDTD configuration violates the stability limit."""


class ShapeError(GprdaError):
    """Tensor or architecture shapes do not conform."""


class DegenerateInputError(GprdaError):
    """Input is degenerate for the requested operation (e.g. all-zero trace)."""


class PruningError(GprdaError):
    """Dataset pruning produced an empty subset."""


class UndefinedMetricError(GprdaError):
    """Metric is mathematically undefined for the given series."""
