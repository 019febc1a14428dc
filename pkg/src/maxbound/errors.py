"""Exception types shared across the package."""


class MaxboundError(Exception):
    """Base class for all package errors."""


class DimensionError(MaxboundError):
    """Field extents or kinds do not match the operation."""


class ParameterError(MaxboundError):
    """A scalar or trajectory parameter is outside its admissible range."""


class StabilityError(MaxboundError):
    """Time step violates the CFL stability limit."""


class UnsupportedCaseError(MaxboundError):
    """Catalog key unknown or case used outside its supported regime."""


class GridMismatchError(MaxboundError):
    """Snapshot or trajectory does not match the configured grid."""


class PreconditionError(MaxboundError):
    """A theorem-specific regularity precondition is not met."""


class ConfigError(MaxboundError):
    """Configuration file failed schema validation."""

    def __init__(self, message, path=""):
        super().__init__(message)
        self.path = path
