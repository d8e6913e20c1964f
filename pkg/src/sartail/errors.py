"""Exception hierarchy shared by all pipeline stages.

Everything raised intentionally by this package derives from
:class:`SartailError`, so callers (and the CLI) can separate contract
violations (exit code 1) from plain I/O failures (``OSError``, exit code 2).
"""


class SartailError(Exception):
    """Base class for all pipeline contract errors."""


class FormatError(SartailError):
    """A file is structurally invalid: bad magic, truncation, wrong layout."""


class ValidationError(SartailError):
    """Parsed data violates a domain invariant (labels, finiteness, counts)."""


class DimensionError(SartailError):
    """Image/window/vector dimensions are incompatible."""


class DegenerateError(SartailError):
    """The input is too small or too uniform for the operation to be defined."""


class TargetError(SartailError):
    """A requested per-class sample target cannot be satisfied."""


class ConfigError(SartailError):
    """A configuration value is out of its allowed range."""


class MissingPairError(SartailError):
    """Channel composition could not match files across input directories."""
