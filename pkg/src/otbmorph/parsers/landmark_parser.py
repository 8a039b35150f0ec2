"""
Landmark file reader.

Format::

    schema face21 21
    12.50 30.25
    ...

A header line ``schema <id> <count>`` followed by exactly ``count`` lines of
``x y`` decimal pixel coordinates. Blank lines and ``#`` comments are
ignored.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from otbmorph.errors import ParseError
from otbmorph.morph.landmarks import LandmarkSet

logger = logging.getLogger(__name__)


class LandmarkParser:
    """Parser for ``schema <id> <count>`` landmark files."""

    def parse(self, file_path: str | Path) -> LandmarkSet:
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"Landmark file not found: {path}")
        with open(path, "r") as f:
            return self.parse_lines(f.read().splitlines(), path)

    def parse_lines(self, lines: list[str], path: str | Path | None = None) -> LandmarkSet:
        schema_id = None
        expected = 0
        points: list[tuple[float, float]] = []

        for line_no, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if schema_id is None:
                if len(parts) != 3 or parts[0] != "schema":
                    raise ParseError("expected header 'schema <id> <count>'", path, line=line_no)
                try:
                    expected = int(parts[2])
                except ValueError:
                    raise ParseError(f"invalid point count {parts[2]!r}", path, line=line_no) from None
                if expected < 1:
                    raise ParseError("point count must be positive", path, line=line_no)
                schema_id = parts[1]
                continue
            if len(parts) != 2:
                raise ParseError(f"expected 'x y', got {line!r}", path, line=line_no)
            try:
                x, y = float(parts[0]), float(parts[1])
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {line!r}", path, line=line_no) from None
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ParseError("coordinates must be finite", path, line=line_no)
            points.append((x, y))
            if len(points) > expected:
                raise ParseError(
                    f"more points than the declared count {expected}", path, line=line_no
                )

        if schema_id is None:
            raise ParseError("missing 'schema <id> <count>' header", path, line=1)
        if len(points) != expected:
            raise ParseError(
                f"declared {expected} points but found {len(points)}", path, line=len(lines)
            )
        logger.debug("Read %d landmarks (%s) from %s", expected, schema_id, path)
        return LandmarkSet(np.array(points), schema_id)
