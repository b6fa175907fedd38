"""Exception types shared across the package."""


class CellIdError(Exception):
    """Base class for package errors."""


class InvalidParameterError(CellIdError, ValueError):
    """Parameters violate a hard physical invariant."""


class InvalidStateError(CellIdError, ValueError):
    """A simulated state left the physically valid range."""


class StabilityError(CellIdError, ValueError):
    """The sampling period violates the explicit-update stability bound."""


class DatasetError(CellIdError, ValueError):
    """A trace file or in-memory dataset is malformed."""


class ConfigError(CellIdError, ValueError):
    """A configuration file is missing or fails schema validation."""


class OptimizerError(CellIdError, RuntimeError):
    """An optimizer cannot start or proceed."""
