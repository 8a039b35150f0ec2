"""
Writers for face images (binary PGM/PPM via Pillow) and landmark files.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image

from otbmorph.morph.image import FaceImage
from otbmorph.morph.landmarks import LandmarkSet

from .atomic import atomic_path, atomic_write_text

logger = logging.getLogger(__name__)


def to_bytes(image: FaceImage) -> np.ndarray:
    """Quantize [0, 1] intensities to 8-bit."""
    return np.round(image.data * 255.0).astype(np.uint8)


def write_image(image: FaceImage, path: str | Path) -> Path:
    """Write a grey image as P5 PGM or a colour image as P6 PPM."""
    pixels = to_bytes(image)
    if image.channels == 1:
        pil = Image.fromarray(pixels[:, :, 0])
    else:
        pil = Image.fromarray(pixels)
    with atomic_path(path) as tmp:
        pil.save(tmp, format="PPM")
    logger.debug("Wrote %dx%d image to %s", image.width, image.height, path)
    return Path(path)


def format_landmarks(landmarks: LandmarkSet) -> str:
    lines = [f"schema {landmarks.schema_id} {len(landmarks)}"]
    lines.extend(f"{x!r} {y!r}" for x, y in landmarks.points.tolist())
    return "\n".join(lines) + "\n"


def write_landmarks(landmarks: LandmarkSet, path: str | Path) -> Path:
    """Write landmarks with shortest round-trip float formatting."""
    return atomic_write_text(path, format_landmarks(landmarks))
