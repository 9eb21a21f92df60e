"""
Custom exceptions for the video captioning engine.
Provides structured error handling with specific exception types and the
process exit code each family maps to.
"""

from __future__ import annotations

from typing import Any, Dict, Optional, Sequence


class VidCapError(Exception):
    """Base exception class for all captioning engine errors."""

    exit_code: int = 1

    def __init__(self, message: str, error_code: str = None, details: Dict[str, Any] = None):
        self.message = message
        self.error_code = error_code or "UNKNOWN_ERROR"
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for logging/serialization."""
        return {
            "error_type": self.__class__.__name__,
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
            "exit_code": self.exit_code,
        }


# Usage Exceptions
class UsageError(VidCapError):
    """Raised when an operation is called with arguments outside its contract."""

    exit_code = 1

    def __init__(self, message: str, details: Dict[str, Any] = None):
        super().__init__(message, "USAGE_ERROR", details)


class DimensionError(UsageError):
    """Raised when tensor shapes do not line up."""

    def __init__(self, op: str, *shapes: Sequence[int], reason: str = "shape mismatch",
                 details: Dict[str, Any] = None):
        rendered = " vs ".join(str(tuple(s)) for s in shapes)
        message = f"{op}: {reason}" + (f" ({rendered})" if rendered else "")
        error_details = {"op": op, "shapes": [tuple(s) for s in shapes]}
        if details:
            error_details.update(details)
        VidCapError.__init__(self, message, "DIMENSION_ERROR", error_details)


# Data Exceptions
class DataError(VidCapError):
    """Raised when input data (manifests, caption files) is malformed."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None,
                 details: Dict[str, Any] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        error_details = {"path": path, "line": line}
        if details:
            error_details.update(details)
        super().__init__(where + message, "DATA_ERROR", error_details)


class FormatError(DataError):
    """Raised when a binary file (features, checkpoint) fails validation."""

    def __init__(self, message: str, path: Optional[str] = None, byte_offset: Optional[int] = None,
                 details: Dict[str, Any] = None):
        self.byte_offset = byte_offset
        if byte_offset is not None:
            message = f"{message} at byte offset {byte_offset}"
        error_details = {"byte_offset": byte_offset}
        if details:
            error_details.update(details)
        super().__init__(message, path=path, details=error_details)
        self.error_code = "FORMAT_ERROR"


# Numeric Exceptions
class NumericFailure(VidCapError):
    """Raised when a forward or backward value becomes NaN or infinite."""

    exit_code = 3

    def __init__(self, op: str, message: str = "non-finite value", details: Dict[str, Any] = None):
        self.op = op
        self.reason = message
        error_details = {"op": op}
        if details:
            error_details.update(details)
        super().__init__(f"{op}: {message}", "NUMERIC_FAILURE", error_details)


def get_error_message(error: Exception) -> str:
    """Get user-friendly error message from exception."""
    if isinstance(error, VidCapError):
        return f"{error.error_code}: {error.message}"
    return f"UNEXPECTED_ERROR: {error}"


def exit_code_for(error: Exception) -> int:
    """Map an exception onto the command-line exit code contract."""
    if isinstance(error, VidCapError):
        return error.exit_code
    return 1
