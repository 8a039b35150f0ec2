"""
Exception hierarchy for otb-morph.

Every error carries a stable machine code so the CLI can report failures
as one parsable line. All errors derive from ``ValueError`` so callers that
only know the standard library still catch them.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional


class OTBMorphError(ValueError):
    """Base class for all otb-morph errors."""

    code: str = "internal"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message
        self.transcript: Any = None


class IncompatibleLandmarksError(OTBMorphError):
    code = "incompatible-landmarks"


class DegenerateInputError(OTBMorphError):
    code = "degenerate-input"


class DuplicatePointError(OTBMorphError):
    code = "duplicate-point"

    def __init__(self, message: str, indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.indices = indices


class IncompatibleImagesError(OTBMorphError):
    code = "incompatible-images"


class InvalidImageError(OTBMorphError):
    code = "invalid-image"


class IncompatibleEmbeddingsError(OTBMorphError):
    code = "incompatible-embeddings"


class ConfigurationError(OTBMorphError):
    """Invalid configuration; ``problems`` lists every offending field."""

    code = "configuration"

    def __init__(self, message: str, problems: Optional[list[str]] = None):
        self.problems = list(problems or [])
        if self.problems:
            message = f"{message}: " + "; ".join(self.problems)
        super().__init__(message)


class ADKindError(OTBMorphError):
    code = "wrong-ad-kind"


class ADReuseError(OTBMorphError):
    code = "ad-reuse"


class EnrollmentUnavailableError(OTBMorphError):
    code = "enrollment-unavailable"


class PoolExhaustedError(OTBMorphError):
    code = "pool-exhausted"


class ProtocolStateError(OTBMorphError):
    code = "protocol-state"


class ProtocolViolationError(OTBMorphError):
    code = "protocol-violation"


class OracleExhaustedError(OTBMorphError):
    code = "oracle-exhausted"


class InsufficientDataError(OTBMorphError):
    code = "insufficient-data"


class ParseError(OTBMorphError):
    """A file could not be parsed; carries path and line or byte context."""

    code = "parse"

    def __init__(
        self,
        message: str,
        path: str | Path | None = None,
        line: Optional[int] = None,
        offset: Optional[int] = None,
    ):
        self.path = str(path) if path is not None else None
        self.line = line
        self.offset = offset
        location = self.path or "<input>"
        if line is not None:
            location = f"{location}:{line}"
        elif offset is not None:
            location = f"{location}@byte {offset}"
        super().__init__(f"{location}: {message}")


class ArtifactError(OTBMorphError):
    """Writing or reading an output artifact failed."""

    code = "artifact"

    def __init__(self, message: str, path: str | Path | None = None):
        self.path = str(path) if path is not None else None
        if self.path:
            message = f"{self.path}: {message}"
        super().__init__(message)


def error_code(exc: BaseException) -> str:
    """Machine code for any exception raised inside the tool."""
    if isinstance(exc, OTBMorphError):
        return exc.code
    if isinstance(exc, FileNotFoundError):
        return "file-not-found"
    if isinstance(exc, OSError):
        return "io"
    return "internal"
