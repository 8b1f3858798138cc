"""Exception types shared across the toolkit."""


class DifxError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgument(DifxError, ValueError):
    pass


class DimensionMismatch(DifxError, ValueError):
    pass


class NoSignalError(DifxError):
    """The difference carries no usable signal (photographer not detectable)."""


class FormatError(DifxError, ValueError):
    """Malformed or unsupported image file."""
