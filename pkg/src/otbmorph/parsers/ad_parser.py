"""
Reader for auxiliary-data records written by ``writers.ad_writer``.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from otbmorph.errors import ConfigurationError, ParseError
from otbmorph.features.world import Presentation
from otbmorph.tools.types import ADKind
from otbmorph.transforms.auxiliary import AuxiliaryData

from .image_parser import ImageParser
from .landmark_parser import LandmarkParser

logger = logging.getLogger(__name__)


class ADParser:
    """Parser for AD JSON records; random faces are loaded from their sidecars."""

    def parse(self, file_path: str | Path) -> AuxiliaryData:
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"AD file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", path, line=exc.lineno) from exc
        if not isinstance(data, dict):
            raise ParseError("AD record must be a JSON object", path)
        return self.parse_dict(data, path.parent, path)

    def parse_dict(self, data: dict[str, Any], base_dir: Path = Path("."), path: Path | None = None) -> AuxiliaryData:
        try:
            kind = ADKind(data.get("kind"))
            ad_id = str(data["ad_id"])
        except (KeyError, ValueError) as exc:
            raise ParseError(f"missing or invalid AD field: {exc}", path) from None
        try:
            if kind is ADKind.NONE:
                return AuxiliaryData(ad_id, kind)
            if kind is ADKind.NOISE_KEY:
                return AuxiliaryData.noise_key(ad_id, data.get("seed"))
            if kind is ADKind.IMPLODE_KEY:
                return AuxiliaryData.implode_key(ad_id, data.get("strength"))
        except (TypeError, ConfigurationError) as exc:
            raise ParseError(f"invalid {kind.value} record: {exc}", path) from None

        face_name, landmark_name = data.get("face_path"), data.get("landmark_path")
        if not face_name or not landmark_name:
            raise ParseError("random_face records need face_path and landmark_path", path)
        image = ImageParser().parse(base_dir / face_name)
        landmarks = LandmarkParser().parse(base_dir / landmark_name)
        return AuxiliaryData.random_face(ad_id, Presentation(image, landmarks))
