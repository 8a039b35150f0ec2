"""
Landmark-based face morphing: images, landmarks, triangulation, warping, blending.

Main exports:
- FaceImage, LandmarkSet, Triangulation, MorphParams
- average_landmarks, delaunay_triangulate, warp_piecewise_affine, blend, morph

For schemas and diagnostics, import from the specific module::

    from otbmorph.morph.schemas import LandmarkSchemaRegistry
    from otbmorph.morph.warp import WarpDiagnostics
"""

from .delaunay import Triangulation, delaunay_triangulate
from .engine import MorphParams, average_landmarks, blend, morph
from .image import FaceImage
from .landmarks import LandmarkSet, augment_border, measure_landmarks
from .warp import WarpDiagnostics, warp_piecewise_affine

__all__ = [
    "FaceImage",
    "LandmarkSet",
    "MorphParams",
    "Triangulation",
    "WarpDiagnostics",
    "augment_border",
    "average_landmarks",
    "blend",
    "delaunay_triangulate",
    "measure_landmarks",
    "morph",
    "warp_piecewise_affine",
]
