"""Exception hierarchy shared by every iqpverify module."""

from __future__ import annotations

__all__ = [
    "IqpError",
    "DimensionError",
    "CapacityError",
    "ValidationError",
    "AngleError",
    "ParseError",
    "ConstructionError",
    "ProtocolError",
]


class IqpError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(IqpError):
    """Operands have incompatible lengths or shapes."""


class CapacityError(IqpError):
    """Requested computation exceeds a documented size cap."""


class ValidationError(IqpError):
    """A value violates a structural invariant (zero row, range, ...)."""


class AngleError(IqpError):
    """An angle does not satisfy a backend's precondition."""


class ParseError(IqpError):
    """A text document is malformed.  Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConstructionError(IqpError):
    """Challenge construction failed.  ``best`` holds the best attempts seen."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ProtocolError(IqpError):
    """A wire-protocol failure.  ``code`` is the machine-readable reason."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail
