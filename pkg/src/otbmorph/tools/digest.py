"""Content digests for traces and transcripts."""

from __future__ import annotations

import hashlib

import numpy as np

DIGEST_LENGTH = 16


def array_digest(values: np.ndarray, *extra: str) -> str:
    """Hex digest of an array's float64 bytes plus optional context strings."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(values, dtype=np.float64).tobytes())
    for item in extra:
        h.update(b"\x00")
        h.update(item.encode("utf-8"))
    return h.hexdigest()[:DIGEST_LENGTH]


def text_digest(*parts: str) -> str:
    h = hashlib.sha256()
    for item in parts:
        h.update(item.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:DIGEST_LENGTH]
