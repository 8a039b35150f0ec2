"""
Portable grey/pixel-map reader.

Reads binary PGM (P5) and PPM (P6) files with maxval 255 through Pillow
and maps 8-bit values linearly onto [0, 1].
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from otbmorph.errors import ParseError
from otbmorph.morph.image import FaceImage

logger = logging.getLogger(__name__)

SUPPORTED_MAGIC = {b"P5": "L", b"P6": "RGB"}


class ImageParser:
    """
    Parser for binary PGM/PPM images.

    Example:
        image = ImageParser().parse("face_a.pgm")
    """

    def parse(self, file_path: str | Path) -> FaceImage:
        """
        Parse an image file.

        Args:
            file_path: Path to a .pgm or .ppm file

        Returns:
            FaceImage with 1 or 3 channels

        Raises:
            FileNotFoundError: the file does not exist
            ParseError: unsupported format or truncated pixel data
        """
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"Image file not found: {path}")

        raw = path.read_bytes()
        magic = raw[:2]
        if magic not in SUPPORTED_MAGIC:
            raise ParseError(f"expected binary PGM/PPM magic P5 or P6, got {magic!r}", path, offset=0)

        try:
            with Image.open(path) as img:
                img.load()
                mode = img.mode
                pixels = np.asarray(img, dtype=np.float64)
        except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
            raise ParseError(f"unreadable pixel data ({exc}); file is {len(raw)} bytes", path) from exc
        if mode != SUPPORTED_MAGIC[magic]:
            raise ParseError(
                f"unsupported pixel format (mode {mode}); only maxval 255 is supported",
                path,
                offset=0,
            )

        logger.debug("Read %s image %s", mode, path)
        return FaceImage(pixels / 255.0)
