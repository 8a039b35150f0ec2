"""
Auxiliary-data records.

One JSON object per AD: ``{ad_id, kind, seed}`` for noise keys,
``{ad_id, kind, strength}`` for implode keys and
``{ad_id, kind, face_path, landmark_path}`` for random faces, whose image
and landmarks are written next to the record (8-bit quantized image).
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

from otbmorph.tools.types import ADKind
from otbmorph.transforms.auxiliary import AuxiliaryData

from .image_writer import write_image, write_landmarks
from .json_writer import write_json

logger = logging.getLogger(__name__)

AD_SCHEMA = "otb-morph-ad/1"


def ad_record(ad: AuxiliaryData, face_path: str | None = None, landmark_path: str | None = None) -> dict[str, Any]:
    record: dict[str, Any] = {"schema": AD_SCHEMA, "ad_id": ad.ad_id, "kind": ad.kind.value}
    if ad.kind is ADKind.NOISE_KEY:
        record["seed"] = ad.seed
    elif ad.kind is ADKind.IMPLODE_KEY:
        record["strength"] = ad.strength
    elif ad.kind is ADKind.RANDOM_FACE:
        record["face_path"] = face_path
        record["landmark_path"] = landmark_path
    return record


def write_ad(ad: AuxiliaryData, path: str | Path) -> Path:
    """
    Write ``ad`` as ``<path>`` (JSON); random faces add ``<stem>.pgm|.ppm``
    and ``<stem>.lm`` alongside, referenced by relative file name.
    """
    path = Path(path)
    face_path = landmark_path = None
    if ad.kind is ADKind.RANDOM_FACE:
        assert ad.face is not None
        suffix = ".pgm" if ad.face.image.channels == 1 else ".ppm"
        image_file = path.with_suffix(suffix)
        landmark_file = path.with_suffix(".lm")
        write_image(ad.face.image, image_file)
        write_landmarks(ad.face.landmarks, landmark_file)
        face_path, landmark_path = image_file.name, landmark_file.name
    write_json(ad_record(ad, face_path, landmark_path), path)
    logger.debug("Wrote %s AD %s to %s", ad.kind.value, ad.ad_id, path)
    return path
