"""Exception types raised across the package."""


class PenvfError(Exception):
    """Base class for all package errors."""


class ParseError(PenvfError, ValueError):
    """Malformed input file."""


class SizeError(PenvfError, ValueError):
    """A sample count or split size is out of range."""


class FoldCountError(PenvfError, ValueError):
    """Invalid number of folds for the given sample."""


class ShapeError(PenvfError, ValueError):
    """Dimension mismatch between arrays."""


class ConfigError(PenvfError, ValueError):
    """Invalid experiment or grid configuration."""


class SelectionError(PenvfError, RuntimeError):
    """Every grid point failed during model selection."""


class ResolutionError(PenvfError, LookupError):
    """A dataset name could not be resolved to data on disk."""
