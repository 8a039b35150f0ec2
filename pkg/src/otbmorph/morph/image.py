"""
Raster face images.

A FaceImage wraps a float64 array of shape (height, width, channels) with
intensities in [0, 1]. Instances are treated as immutable: operations
return new images and the wrapped array is marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from otbmorph.errors import IncompatibleImagesError, InvalidImageError


@dataclass(frozen=True, eq=False)
class FaceImage:
    """Row-major image with 1 (grey) or 3 (RGB) channels."""

    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, np.newaxis]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise InvalidImageError(
                f"Image data must have shape (height, width, 1|3), got {np.shape(self.data)}"
            )
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidImageError(f"Image must be non-empty, got {data.shape[:2]}")
        if not np.all(np.isfinite(data)):
            raise InvalidImageError("Image contains non-finite intensities")
        if data.min() < 0.0 or data.max() > 1.0:
            raise InvalidImageError(
                f"Intensities must lie in [0, 1], got [{data.min():.6g}, {data.max():.6g}]"
            )
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    def gray(self) -> np.ndarray:
        """Luminance plane as (height, width); channel mean for colour images."""
        if self.channels == 1:
            return self.data[:, :, 0]
        return self.data.mean(axis=2)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FaceImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def uniform(cls, height: int, width: int, value: float, channels: int = 1) -> FaceImage:
        return cls(np.full((height, width, channels), float(value)))

    @classmethod
    def from_array(cls, values: np.ndarray, clip: bool = False) -> FaceImage:
        """Build an image from raw values, optionally clipping into [0, 1]."""
        arr = np.asarray(values, dtype=np.float64)
        if clip:
            arr = np.clip(arr, 0.0, 1.0)
        return cls(arr)


def check_same_geometry(a: FaceImage, b: FaceImage) -> None:
    if a.shape != b.shape:
        raise IncompatibleImagesError(f"Image shapes differ: {a.shape} vs {b.shape}")
