"""Exception hierarchy for flowattn.

Every operation raises one of the variants below so callers (and the CLI)
can tell a missing file from a corrupt one, or a bad ``.flo`` magic from a
truncated payload. Variants also inherit from the closest builtin
(``FileNotFoundError``, ``ValueError``, ``OSError``) so generic handlers
keep working.

License:
    Apache 2.0
"""

from __future__ import annotations


class FlowAttnError(Exception):
    """Base class for all flowattn errors."""


class InputNotFoundError(FlowAttnError, FileNotFoundError):
    """Raised when an input file or directory does not exist."""


class ChannelCountError(FlowAttnError, ValueError):
    """Raised when a raster has the wrong number of channels."""


class CorruptImageError(FlowAttnError, ValueError):
    """Raised when a raster cannot be decoded."""


class UnwritablePathError(FlowAttnError, OSError):
    """Raised when an output file cannot be written."""


class ShapeMismatchError(FlowAttnError, ValueError):
    """Raised when operands disagree in shape."""


class InvalidParameterError(FlowAttnError, ValueError):
    """Raised when a scalar parameter is outside its domain."""


class FloFormatError(FlowAttnError, ValueError):
    """Base class for Middlebury ``.flo`` decoding failures."""


class BadMagicError(FloFormatError):
    """The file does not start with the ``PIEH`` magic float."""


class TruncatedFloError(FloFormatError):
    """The payload is shorter than the header promises."""


class FloDimensionError(FloFormatError):
    """The header declares non-positive or implausibly large dimensions."""


class TensorDumpError(FlowAttnError, ValueError):
    """Raised when an attention dump file is malformed."""


class ConfigError(FlowAttnError, ValueError):
    """Raised when a run configuration cannot be loaded or validated."""


__all__ = [
    "BadMagicError",
    "ChannelCountError",
    "ConfigError",
    "CorruptImageError",
    "FloDimensionError",
    "FloFormatError",
    "FlowAttnError",
    "InputNotFoundError",
    "InvalidParameterError",
    "ShapeMismatchError",
    "TensorDumpError",
    "TruncatedFloError",
    "UnwritablePathError",
]
