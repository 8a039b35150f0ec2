"""
JSON and JSON-lines writers.

Floats are written with ``repr`` precision so every value reads back
bit-identically.
"""

from __future__ import annotations

import json
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .atomic import atomic_write_text


class JSONEncoder(json.JSONEncoder):
    """JSON encoder for numpy values, enums and Path objects."""

    def default(self, obj: Any) -> Any:
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, Path):
            return str(obj)
        return super().default(obj)


def dumps(data: Any, indent: int | None = 2) -> str:
    return json.dumps(data, cls=JSONEncoder, indent=indent, allow_nan=False)


def write_json(data: Any, path: str | Path) -> Path:
    """Write ``data`` as indented JSON, atomically."""
    return atomic_write_text(path, dumps(data) + "\n")


def write_jsonl(records: Iterable[dict[str, Any]], path: str | Path) -> Path:
    """Write one compact JSON object per line, atomically."""
    text = "".join(dumps(record, indent=None) + "\n" for record in records)
    return atomic_write_text(path, text)
