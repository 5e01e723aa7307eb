"""Exception hierarchy shared by every arhq module.

The CLI maps these onto exit codes: configuration and parameter problems
(the user asked for something invalid) exit 2, everything else exits 1.
"""


class ArhqError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ArhqError):
    """Shapes of the involved matrices are inconsistent."""


class DataError(ArhqError):
    """Input data violates an invariant (non-finite entries, asymmetry, ...)."""


class ParameterError(ArhqError):
    """A numeric parameter is out of its valid range."""


class ConfigError(ArhqError):
    """The JSON configuration violates the documented schema."""


class FormatError(ArhqError):
    """A tensor file is malformed; the message carries the byte offset."""


class CalibrationError(ArhqError):
    """No calibration rows were accumulated before finalizing a metric."""
