"""Exception hierarchy for trace construction, generation, and serialization."""

from __future__ import annotations


class VmpTraceError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(VmpTraceError, ValueError):
    """A model object or argument violates a construction invariant."""


class ConfigError(VmpTraceError, ValueError):
    """A generator configuration is malformed or infeasible."""


class FormatError(VmpTraceError):
    """A trace document violates the line format or document structure."""


class ParseError(FormatError):
    """A single line of a trace document could not be parsed.

    Carries the 1-based line number when known.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class IntegrityError(VmpTraceError):
    """A parsed document is internally inconsistent, or an operation was
    asked to work on a structurally invalid trace."""


class TraceIOError(VmpTraceError):
    """Reading from or writing to a trace source or sink failed.

    Carries the byte offset reached before the failure when known.
    """

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (at byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset
