from __future__ import annotations


class IsacError(Exception):
    """Base class for every error raised by the isac package."""


class InvalidParameterError(IsacError, ValueError):
    pass


class InvalidModeError(IsacError, ValueError):
    pass


class DimensionMismatchError(IsacError, ValueError):
    pass


class MalformedProgramError(IsacError, ValueError):
    """A conic program references undeclared variables or has inconsistent shapes."""


class NumericalFailureError(IsacError):
    pass


class OracleSizeError(IsacError):
    pass


class ConfigError(IsacError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message
