"""
Landmark sets and border augmentation.

Coordinates are in pixels with pixel centres at integer positions, so a
valid point of a W x H image satisfies 0 <= x <= W-1 and 0 <= y <= H-1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from otbmorph.errors import ConfigurationError, IncompatibleLandmarksError, InvalidImageError

from .image import FaceImage

logger = logging.getLogger(__name__)

BORDER_SUFFIX = "+border"


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Ordered 2-D fiducial points under a named landmark convention."""

    points: np.ndarray
    schema_id: str

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise IncompatibleLandmarksError(
                f"Landmark points must have shape (n, 2), got {np.shape(self.points)}"
            )
        if not np.all(np.isfinite(pts)):
            raise IncompatibleLandmarksError("Landmark points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LandmarkSet):
            return NotImplemented
        return self.schema_id == other.schema_id and bool(
            np.array_equal(self.points, other.points)
        )

    __hash__ = None  # type: ignore[assignment]

    def is_compatible(self, other: LandmarkSet) -> bool:
        return self.schema_id == other.schema_id and len(self) == len(other)

    def within(self, width: int, height: int) -> bool:
        x, y = self.points[:, 0], self.points[:, 1]
        return bool(np.all((x >= 0) & (x <= width - 1) & (y >= 0) & (y <= height - 1)))

    def check_bounds(self, image: FaceImage) -> None:
        if not self.within(image.width, image.height):
            raise IncompatibleLandmarksError(
                f"Landmarks ({self.schema_id}) fall outside the "
                f"{image.width}x{image.height} image"
            )

    def translated(self, dx: float, dy: float) -> LandmarkSet:
        return LandmarkSet(self.points + np.array([dx, dy]), self.schema_id)

    @property
    def has_border(self) -> bool:
        return self.schema_id.endswith(BORDER_SUFFIX)


def check_compatible(a: LandmarkSet, b: LandmarkSet) -> None:
    if not a.is_compatible(b):
        raise IncompatibleLandmarksError(
            f"Landmark sets are not morph-compatible: {a.schema_id}[{len(a)}] "
            f"vs {b.schema_id}[{len(b)}]"
        )


def border_points(width: int, height: int) -> np.ndarray:
    """Four corners followed by the four edge midpoints."""
    right, bottom = float(width - 1), float(height - 1)
    cx, cy = right / 2.0, bottom / 2.0
    return np.array(
        [
            [0.0, 0.0],
            [right, 0.0],
            [0.0, bottom],
            [right, bottom],
            [cx, 0.0],
            [cx, bottom],
            [0.0, cy],
            [right, cy],
        ]
    )


def augment_border(landmarks: LandmarkSet, width: int, height: int) -> LandmarkSet:
    """Append the 8 frame points so triangulations cover the whole image."""
    if landmarks.has_border:
        return landmarks
    if width < 2 or height < 2:
        raise InvalidImageError(f"Border augmentation needs at least 2x2 pixels, got {width}x{height}")
    pts = np.vstack([landmarks.points, border_points(width, height)])
    return LandmarkSet(pts, landmarks.schema_id + BORDER_SUFFIX)


def _parabola_offset(left: float, centre: float, right: float) -> float:
    curvature = left - 2.0 * centre + right
    if curvature <= 0.0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))


def measure_landmarks(image: FaceImage, approx: LandmarkSet, radius: int = 2) -> LandmarkSet:
    """
    Re-measure dark fiducial dots near approximate positions.

    For each point the darkest pixel within distance ``radius`` is located and
    refined to sub-pixel precision with a separable parabola fit.

    Args:
        image: Image carrying dark dots at the landmark positions
        approx: Approximate positions to search around
        radius: Search radius in pixels, at least 1

    Returns:
        Measured landmarks under the same schema
    """
    if radius < 1:
        raise ConfigurationError("Invalid search radius", [f"radius: must be >= 1, got {radius}"])
    plane = image.gray()
    height, width = plane.shape
    measured = np.empty_like(approx.points)
    for i, (x, y) in enumerate(approx.points):
        x0 = int(max(0, np.floor(x) - radius))
        x1 = int(min(width - 1, np.ceil(x) + radius))
        y0 = int(max(0, np.floor(y) - radius))
        y1 = int(min(height - 1, np.ceil(y) + radius))
        wy, wx = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
        inside = (wx - x) ** 2 + (wy - y) ** 2 <= radius * radius
        window = np.where(inside, plane[y0 : y1 + 1, x0 : x1 + 1], np.inf)
        iy, ix = np.unravel_index(int(np.argmin(window)), window.shape)
        px, py = x0 + int(ix), y0 + int(iy)
        dx = dy = 0.0
        if 0 < px < width - 1:
            dx = _parabola_offset(plane[py, px - 1], plane[py, px], plane[py, px + 1])
        if 0 < py < height - 1:
            dy = _parabola_offset(plane[py - 1, px], plane[py, px], plane[py + 1, px])
        measured[i] = (px + dx, py + dy)
    logger.debug(
        "Re-measured %d landmarks, mean shift %.3f px",
        len(approx),
        float(np.mean(np.linalg.norm(measured - approx.points, axis=1))),
    )
    return LandmarkSet(measured, approx.schema_id)
