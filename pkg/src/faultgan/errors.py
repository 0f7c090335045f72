"""Exception taxonomy shared across the package.

CLI exit codes map onto this hierarchy: UsageError (and subclasses) exit 1,
DataFormatError exits 2, NumericalError exits 3.
"""


class FaultganError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(FaultganError):
    """The caller violated an API or CLI contract."""


class ConfigError(UsageError):
    """A configuration file or option is invalid or missing."""


class DimensionError(UsageError):
    """Tensor or array shapes are incompatible with the operation."""


class DataFormatError(FaultganError):
    """An input file is empty, truncated, or otherwise unparseable."""


class NumericalError(FaultganError):
    """A computation produced NaN or Inf and was aborted."""
