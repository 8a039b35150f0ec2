"""
Landmark-based face morphing.

A morph averages the two landmark sets, triangulates the average once
(border points included), warps both images onto it and blends them:

    m     = (1 - alpha) * la + alpha * lb
    tri   = delaunay(m + border)
    out   = (1 - alpha) * warp(a, la -> m) + alpha * warp(b, lb -> m)

The contributor with weight >= 0.5 is always evaluated second so that its
partner's weight ``1 - w`` is exact in floating point; together with the
commutative two-term sums this makes morph(a, b, alpha) and
morph(b, a, 1 - alpha) bit-identical.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from otbmorph.errors import ConfigurationError
from otbmorph.tools.types import BorderPolicy

from .delaunay import delaunay_triangulate
from .image import FaceImage, check_same_geometry
from .landmarks import LandmarkSet, augment_border, check_compatible
from .warp import TriangleRaster, WarpDiagnostics, clip_unit

logger = logging.getLogger(__name__)

BLEND_RULES = ("linear",)


def _check_alpha(alpha: float) -> None:
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and 0.0 <= alpha <= 1.0):
        raise ConfigurationError("Invalid morph weight", [f"alpha: must be in [0, 1], got {alpha!r}"])


@dataclass(frozen=True)
class MorphParams:
    """
    Morph settings.

    Attributes:
        alpha: Weight of the second contributor, in [0, 1]
        blend_rule: Only "linear" is supported
        border_policy: Fill for pixels outside every valid triangle
    """

    alpha: float = 0.5
    blend_rule: str = "linear"
    border_policy: BorderPolicy = BorderPolicy.IDENTITY

    def __post_init__(self) -> None:
        errors = self.validate()
        if errors:
            raise ConfigurationError("Invalid morph parameters", errors)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "border_policy", BorderPolicy(self.border_policy))

    def validate(self) -> list[str]:
        errors = []
        alpha = self.alpha
        if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and 0.0 <= alpha <= 1.0):
            errors.append(f"alpha: must be in [0, 1], got {alpha!r}")
        if self.blend_rule not in BLEND_RULES:
            errors.append(f"blend_rule: must be one of {list(BLEND_RULES)}, got {self.blend_rule!r}")
        try:
            BorderPolicy(self.border_policy)
        except ValueError:
            errors.append(
                f"border_policy: must be one of {[p.value for p in BorderPolicy]}, "
                f"got {self.border_policy!r}"
            )
        return errors


def average_landmarks(a: LandmarkSet, b: LandmarkSet, alpha: float) -> LandmarkSet:
    """Point-wise ``(1 - alpha) * a + alpha * b``; the schema of ``a`` is kept."""
    check_compatible(a, b)
    _check_alpha(alpha)
    return LandmarkSet((1.0 - alpha) * a.points + alpha * b.points, a.schema_id)


def blend(a: FaceImage, b: FaceImage, alpha: float) -> FaceImage:
    """Per-pixel linear blend ``(1 - alpha) * a + alpha * b``."""
    check_same_geometry(a, b)
    _check_alpha(alpha)
    return FaceImage(clip_unit((1.0 - alpha) * a.data + alpha * b.data))


def morph(
    a: FaceImage,
    la: LandmarkSet,
    b: FaceImage,
    lb: LandmarkSet,
    params: Optional[MorphParams] = None,
    diagnostics: Optional[WarpDiagnostics] = None,
) -> FaceImage:
    """
    Morph two faces.

    Args:
        a: First contributor
        la: Landmarks of ``a``
        b: Second contributor
        lb: Landmarks of ``b``
        params: Morph settings (alpha weighs ``b``)
        diagnostics: Optional warp counters, shared by both warps

    Returns:
        The morphed face, same geometry as the inputs

    Raises:
        IncompatibleImagesError: image shapes differ
        IncompatibleLandmarksError: landmark sets differ in schema/count or
            fall outside the image
        DegenerateInputError, DuplicatePointError: the averaged landmarks
            cannot be triangulated
    """
    params = params or MorphParams()
    check_same_geometry(a, b)
    check_compatible(la, lb)
    la.check_bounds(a)
    lb.check_bounds(b)

    if params.alpha >= 0.5:
        first, l_first, second, l_second, weight = a, la, b, lb, params.alpha
    else:
        first, l_first, second, l_second, weight = b, lb, a, la, 1.0 - params.alpha
    partner = 1.0 - weight

    width, height = a.width, a.height
    mid = LandmarkSet(partner * l_first.points + weight * l_second.points, la.schema_id)
    mid_b = augment_border(mid, width, height)
    tri = delaunay_triangulate(mid_b)
    raster = TriangleRaster.build(mid_b.points, tri.triangles, height, width)

    def _warp(img: FaceImage, src: LandmarkSet) -> np.ndarray:
        src_b = augment_border(src, width, height)
        if np.array_equal(src_b.points, mid_b.points):
            return img.data
        return clip_unit(
            raster.resample(img.data, src_b.points, params.border_policy, 0.0, diagnostics),
            diagnostics,
        )

    warped_first = _warp(first, l_first)
    warped_second = _warp(second, l_second)
    blended = partner * warped_first + weight * warped_second
    if diagnostics is not None:
        logger.debug("Morph alpha=%.4f diagnostics: %s", params.alpha, diagnostics.as_dict())
    return FaceImage(clip_unit(blended, diagnostics))
