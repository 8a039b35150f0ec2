"""
The four protection scenarios.

(i)   protect_none      plain embedding
(ii)  protect_gaussian  keyed Gaussian noise in embedding space, renormalized
(iii) protect_implode   radial implode of the image before extraction
(iv)  protect_otb       morph with a one-time random face before extraction
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import map_coordinates

from otbmorph.errors import ConfigurationError
from otbmorph.features.embedding import Embedding
from otbmorph.features.extractors import Extractor, extract_features
from otbmorph.morph.engine import MorphParams, morph
from otbmorph.morph.image import FaceImage
from otbmorph.morph.landmarks import LandmarkSet
from otbmorph.morph.warp import WarpDiagnostics, clip_unit
from otbmorph.tools.types import ADKind, Scenario

from .auxiliary import ADLedger, AuxiliaryData

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProtectedTemplate:
    """
    A (possibly) transformed template as stored or submitted for matching.

    Attributes:
        embedding: The protected embedding
        scenario: Protection scenario that produced it
        ad_id: Auxiliary data used, None for scenarios without a key
    """

    embedding: Embedding
    scenario: Scenario
    ad_id: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", Scenario.parse(self.scenario))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProtectedTemplate):
            return NotImplemented
        return (
            self.embedding == other.embedding
            and self.scenario is other.scenario
            and self.ad_id == other.ad_id
        )

    __hash__ = None  # type: ignore[assignment]


def _check_strength(strength: float) -> None:
    if not (isinstance(strength, (int, float)) and math.isfinite(strength) and 0.0 <= strength < 1.0):
        raise ConfigurationError("Invalid implode strength", [f"strength: must be in [0, 1), got {strength!r}"])


def protect_none(probe: Embedding) -> ProtectedTemplate:
    return ProtectedTemplate(probe, Scenario.UNPROTECTED)


def gaussian_noise(ad: AuxiliaryData, dimension: int, sigma: float) -> np.ndarray:
    """Noise vector ``sigma * g / sqrt(d)`` with ``g ~ N(0, I)`` seeded by the key."""
    ad.require(ADKind.NOISE_KEY)
    g = np.random.default_rng(ad.seed).standard_normal(dimension)
    return sigma * g / math.sqrt(dimension)


def protect_gaussian(probe: Embedding, ad: AuxiliaryData, sigma: float) -> ProtectedTemplate:
    """
    Add keyed Gaussian noise to the probe embedding and renormalize.

    The noise norm is about ``sigma`` regardless of the dimension.

    Raises:
        ADKindError: ``ad`` is not a noise key
        ConfigurationError: negative sigma
    """
    ad.require(ADKind.NOISE_KEY)
    if not (math.isfinite(sigma) and sigma >= 0.0):
        raise ConfigurationError("Invalid noise scale", [f"sigma: must be >= 0, got {sigma!r}"])
    if sigma == 0.0:
        return ProtectedTemplate(probe, Scenario.GAUSSIAN, ad.ad_id)
    noisy = probe.values + gaussian_noise(ad, probe.dimension, sigma)
    return ProtectedTemplate(Embedding.unit(noisy), Scenario.GAUSSIAN, ad.ad_id)


def implode(img: FaceImage, strength: float) -> FaceImage:
    """
    Pull pixels toward the image centre.

    An output pixel at normalized radius ``r`` (0 at the centre, 1 at the
    corners) samples the input at radius ``r ** (1 / (1 - strength))`` on
    the same ray, with bilinear interpolation clamped to the edge.
    """
    _check_strength(strength)
    if strength == 0.0:
        return img
    height, width = img.height, img.width
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    half_diagonal = math.hypot(cx, cy)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    dy, dx = ys - cy, xs - cx
    r = np.hypot(dx, dy) / half_diagonal
    scale = r ** (1.0 / (1.0 - strength) - 1.0)
    coords = np.vstack([(cy + dy * scale).ravel(), (cx + dx * scale).ravel()])

    out = np.empty_like(img.data)
    for c in range(img.channels):
        plane = map_coordinates(img.data[:, :, c], coords, order=1, mode="nearest")
        out[:, :, c] = plane.reshape(height, width)
    return FaceImage(clip_unit(out))


def protect_implode(
    img: FaceImage,
    landmarks: LandmarkSet,
    strength: float,
    extractor: Extractor,
    ad_id: Optional[str] = None,
) -> ProtectedTemplate:
    """Extract features of the imploded image. ``landmarks`` are not used by the transform."""
    del landmarks
    return ProtectedTemplate(extract_features(implode(img, strength), extractor), Scenario.IMPLODE, ad_id)


def protect_otb(
    probe_img: FaceImage,
    probe_lm: LandmarkSet,
    ad: AuxiliaryData,
    params: MorphParams,
    extractor: Extractor,
    ledger: Optional[ADLedger] = None,
    diagnostics: Optional[WarpDiagnostics] = None,
) -> ProtectedTemplate:
    """
    Morph the probe with the random face held in ``ad`` and extract features.

    Raises:
        ADKindError: ``ad`` is not a random face
        ADReuseError: ``ledger`` reports the AD as already consumed
    """
    ad.require(ADKind.RANDOM_FACE)
    if ledger is not None:
        ledger.check_active(ad.ad_id)
    assert ad.face is not None
    morphed = morph(probe_img, probe_lm, ad.face.image, ad.face.landmarks, params, diagnostics)
    return ProtectedTemplate(extract_features(morphed, extractor), Scenario.OTB_MORPH, ad.ad_id)
