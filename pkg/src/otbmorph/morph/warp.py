"""
Piecewise-affine warping.

The destination mesh is rasterized once into a per-pixel triangle label and
barycentric weights (``TriangleRaster``). Source coordinates for any source
landmark configuration are then a weighted sum of the triangle's source
vertices, and all channels are resampled in one pass with bilinear,
clamp-to-edge interpolation (``scipy.ndimage.map_coordinates``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import map_coordinates

from otbmorph.errors import IncompatibleLandmarksError
from otbmorph.tools.types import BorderPolicy

from .delaunay import Triangulation
from .image import FaceImage
from .landmarks import LandmarkSet, check_compatible

logger = logging.getLogger(__name__)

BARYCENTRIC_EPS = 1e-9
DEGENERATE_RTOL = 1e-12
CLIP_TOL = 1e-12


@dataclass
class WarpDiagnostics:
    """Counters accumulated while warping."""

    degenerate_triangles: int = 0
    unassigned_pixels: int = 0
    out_of_bounds_samples: int = 0
    clipped_values: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "degenerate_triangles": self.degenerate_triangles,
            "unassigned_pixels": self.unassigned_pixels,
            "out_of_bounds_samples": self.out_of_bounds_samples,
            "clipped_values": self.clipped_values,
        }


class TriangleRaster:
    """Per-pixel triangle membership and barycentric weights of a destination mesh."""

    def __init__(
        self,
        labels: np.ndarray,
        weights: np.ndarray,
        triangles: np.ndarray,
        height: int,
        width: int,
        degenerate: int = 0,
    ):
        self.labels = labels
        self.weights = weights
        self.triangles = triangles
        self.height = height
        self.width = width
        self.degenerate = degenerate

    @property
    def assigned(self) -> np.ndarray:
        return self.labels >= 0

    @classmethod
    def build(
        cls, dst_points: np.ndarray, triangles: np.ndarray, height: int, width: int
    ) -> TriangleRaster:
        """
        Rasterize ``triangles`` over ``dst_points`` onto a height x width grid.

        Pixels on a shared edge go to the first covering triangle in order.
        Triangles with (numerically) zero area are skipped and counted.
        """
        n_pixels = height * width
        labels = np.full(n_pixels, -1, dtype=np.int64)
        weights = np.zeros((n_pixels, 3), dtype=np.float64)
        extent = max(float(np.ptp(dst_points[:, 0])), float(np.ptp(dst_points[:, 1])), 1.0)
        degenerate = 0

        for t, (i, j, k) in enumerate(triangles):
            x0, y0 = dst_points[i]
            ax, ay = dst_points[j] - dst_points[i]
            bx, by = dst_points[k] - dst_points[i]
            det = ax * by - bx * ay
            if abs(det) <= DEGENERATE_RTOL * extent * extent:
                degenerate += 1
                continue
            corners = dst_points[[i, j, k]]
            xmin = max(0, int(np.floor(corners[:, 0].min())))
            xmax = min(width - 1, int(np.ceil(corners[:, 0].max())))
            ymin = max(0, int(np.floor(corners[:, 1].min())))
            ymax = min(height - 1, int(np.ceil(corners[:, 1].max())))
            if xmin > xmax or ymin > ymax:
                continue
            gx, gy = np.meshgrid(
                np.arange(xmin, xmax + 1, dtype=np.float64),
                np.arange(ymin, ymax + 1, dtype=np.float64),
            )
            px, py = gx.ravel() - x0, gy.ravel() - y0
            l1 = (px * by - bx * py) / det
            l2 = (ax * py - px * ay) / det
            l0 = 1.0 - l1 - l2
            index = (gy.ravel().astype(np.int64) * width) + gx.ravel().astype(np.int64)
            inside = (
                (l0 >= -BARYCENTRIC_EPS)
                & (l1 >= -BARYCENTRIC_EPS)
                & (l2 >= -BARYCENTRIC_EPS)
                & (labels[index] < 0)
            )
            hit = index[inside]
            labels[hit] = t
            weights[hit] = np.column_stack([l0[inside], l1[inside], l2[inside]])

        if degenerate:
            logger.warning("Skipped %d degenerate destination triangles", degenerate)
        return cls(labels, weights, np.asarray(triangles), height, width, degenerate)

    def source_coordinates(self, src_points: np.ndarray) -> np.ndarray:
        """
        Source (row, col) sample positions for every destination pixel.

        Unassigned pixels map to themselves.
        """
        rows, cols = np.divmod(np.arange(self.height * self.width, dtype=np.int64), self.width)
        coords = np.vstack([rows.astype(np.float64), cols.astype(np.float64)])
        mask = self.assigned
        vertex_ids = self.triangles[self.labels[mask]]
        corners = src_points[vertex_ids]
        w = self.weights[mask]
        xy = (
            w[:, 0:1] * corners[:, 0, :]
            + w[:, 1:2] * corners[:, 1, :]
            + w[:, 2:3] * corners[:, 2, :]
        )
        coords[0, mask] = xy[:, 1]
        coords[1, mask] = xy[:, 0]
        return coords

    def resample(
        self,
        data: np.ndarray,
        src_points: np.ndarray,
        border_policy: BorderPolicy = BorderPolicy.IDENTITY,
        fill_value: float = 0.0,
        diagnostics: Optional[WarpDiagnostics] = None,
    ) -> np.ndarray:
        """Warp a (height, width, channels) array; values are not clipped."""
        coords = self.source_coordinates(src_points)
        unassigned = ~self.assigned
        if diagnostics is not None:
            diagnostics.degenerate_triangles += self.degenerate
            diagnostics.unassigned_pixels += int(np.count_nonzero(unassigned))
            outside = (
                (coords[0] < -BARYCENTRIC_EPS)
                | (coords[0] > self.height - 1 + BARYCENTRIC_EPS)
                | (coords[1] < -BARYCENTRIC_EPS)
                | (coords[1] > self.width - 1 + BARYCENTRIC_EPS)
            )
            diagnostics.out_of_bounds_samples += int(np.count_nonzero(outside))

        out = np.empty_like(data, dtype=np.float64)
        for c in range(data.shape[2]):
            plane = map_coordinates(data[:, :, c], coords, order=1, mode="nearest")
            if border_policy is BorderPolicy.CONSTANT:
                plane[unassigned] = fill_value
            out[:, :, c] = plane.reshape(self.height, self.width)
        return out


def clip_unit(values: np.ndarray, diagnostics: Optional[WarpDiagnostics] = None) -> np.ndarray:
    if diagnostics is not None:
        excess = (values < -CLIP_TOL) | (values > 1.0 + CLIP_TOL)
        diagnostics.clipped_values += int(np.count_nonzero(excess))
    return np.clip(values, 0.0, 1.0)


def warp_values(
    data: np.ndarray,
    src_points: np.ndarray,
    dst_points: np.ndarray,
    triangles: np.ndarray,
    border_policy: BorderPolicy = BorderPolicy.IDENTITY,
    fill_value: float = 0.0,
    diagnostics: Optional[WarpDiagnostics] = None,
) -> np.ndarray:
    """Warp an unconstrained float array (used for textures and fields)."""
    values = np.asarray(data, dtype=np.float64)
    squeeze = values.ndim == 2
    if squeeze:
        values = values[:, :, np.newaxis]
    if np.array_equal(src_points, dst_points):
        out = values.copy()
    else:
        raster = TriangleRaster.build(dst_points, triangles, values.shape[0], values.shape[1])
        out = raster.resample(values, src_points, border_policy, fill_value, diagnostics)
    return out[:, :, 0] if squeeze else out


def warp_piecewise_affine(
    img: FaceImage,
    src: LandmarkSet,
    dst: LandmarkSet,
    tri: Triangulation,
    border_policy: BorderPolicy = BorderPolicy.IDENTITY,
    fill_value: float = 0.0,
    diagnostics: Optional[WarpDiagnostics] = None,
) -> FaceImage:
    """
    Warp ``img`` so that ``src`` landmarks move onto ``dst``.

    Each destination triangle is filled by sampling the image under the
    affine map from the destination triangle to the matching source triangle.

    Args:
        img: Image to warp
        src: Landmarks in ``img``
        dst: Target landmarks; ``tri`` must be built over these
        tri: Triangulation sharing vertex indices with ``src`` and ``dst``
        border_policy: Fill for pixels no valid triangle covers
        fill_value: Constant used by ``BorderPolicy.CONSTANT``
        diagnostics: Optional counters to accumulate into

    Returns:
        Warped image with the input's dimensions
    """
    check_compatible(src, dst)
    if len(tri.vertices) != len(dst):
        raise IncompatibleLandmarksError(
            f"Triangulation has {len(tri.vertices)} vertices but landmarks have {len(dst)}"
        )
    if np.array_equal(src.points, dst.points):
        return img
    warped = warp_values(
        img.data, src.points, dst.points, tri.triangles, border_policy, fill_value, diagnostics
    )
    return FaceImage(clip_unit(warped, diagnostics))
