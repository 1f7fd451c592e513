"""Exception types raised across the package."""


class LonLabError(Exception):
    """Base class for all package errors."""


class ParameterError(LonLabError, ValueError):
    """An argument is outside its admissible range."""


class CapacityError(LonLabError):
    """The request exceeds the exhaustive-enumeration cap."""


class ParseError(LonLabError, ValueError):
    """A serialized document is malformed.

    The offending field is available as ``field``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConsistencyError(LonLabError):
    """Two objects that must describe the same landscape do not."""
