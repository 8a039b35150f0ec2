"""
Synthetic biometric world.

Stands in for a face dataset plus a pretrained network. Each subject has a
latent identity code ``m_k ~ N(0, population_spread^2 I)`` and a face shape
(the schema's canonical landmarks plus a per-subject offset). A presentation
draws ``z = m_k + N(0, class_spread^2 I)``, jitters the landmarks and renders:

    image = base(landmarks) + contrast * warp(P^T z, canonical -> landmarks)

``base`` is landmark-positioned face shading with dark fiducial dots; ``P``
is an orthonormal (d x pixels) projection of low-frequency modes masked to
the canonical face region. The matching extractor computes
``P (image - base(canonical)) / contrast``, so an aligned presentation maps
back onto its latent code and morphing two faces interpolates their codes.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, NamedTuple, Type

import numpy as np

from otbmorph.errors import ConfigurationError
from otbmorph.morph.delaunay import delaunay_triangulate
from otbmorph.morph.image import FaceImage
from otbmorph.morph.landmarks import LandmarkSet, augment_border
from otbmorph.morph.schemas import LandmarkSchema, LandmarkSchemaRegistry
from otbmorph.morph.warp import warp_values
from otbmorph.tools.seeds import SeedTree

logger = logging.getLogger(__name__)

DOT_DEPTH = 0.3
DOT_SIGMA = 0.8
FACE_SHADE = 0.08
BACKGROUND = 0.45
LIGHT_GRADIENT = 0.05
LANDMARK_MARGIN = 2.0
LOCAL_SHAPE_FRACTION = 0.25


@dataclass(frozen=True)
class SyntheticWorldConfig:
    """
    Parameters of the synthetic population.

    Attributes:
        dimension: Embedding dimension d
        n_subjects: Number of enrolled-population subjects
        class_spread: Within-subject latent standard deviation
        population_spread: Between-subject latent standard deviation
        rng_seed: Seed for the basis, the subjects and their shapes
        image_size: Square image side in pixels
        landmark_jitter: Per-presentation landmark displacement (pixels)
        shape_spread: Per-subject face displacement (pixels); individual landmarks
            move by a quarter of it on top
        texture_contrast: Intensity scale of the identity texture
        channels: 1 (grey) or 3 (colour) rendered images
        schema: Landmark schema id
        dataset_tag: Label carried into score sets and reports
    """

    dimension: int = 64
    n_subjects: int = 100
    class_spread: float = 0.6
    population_spread: float = 1.0
    rng_seed: int = 0
    image_size: int = 64
    landmark_jitter: float = 1.0
    shape_spread: float = 1.0
    texture_contrast: float = 0.2
    channels: int = 1
    schema: str = "face21"
    dataset_tag: str = "synthetic"

    def validate(self) -> list[str]:
        """Validate fields, returning a list of errors."""
        errors = []
        if self.dimension < 2:
            errors.append("world.dimension: must be >= 2")
        if self.dimension > self.image_size * self.image_size:
            errors.append("world.dimension: must not exceed the pixel count")
        if self.n_subjects < 2:
            errors.append("world.n_subjects: must be >= 2")
        if not self.class_spread > 0:
            errors.append("world.class_spread: must be > 0")
        if not self.population_spread > self.class_spread:
            errors.append("world.population_spread: must exceed class_spread")
        if self.image_size < 16:
            errors.append("world.image_size: must be >= 16")
        if self.landmark_jitter < 0:
            errors.append("world.landmark_jitter: must be >= 0")
        if self.shape_spread < 0:
            errors.append("world.shape_spread: must be >= 0")
        if not self.texture_contrast > 0:
            errors.append("world.texture_contrast: must be > 0")
        if self.channels not in (1, 3):
            errors.append("world.channels: must be 1 or 3")
        if self.schema not in LandmarkSchemaRegistry.list_schemas():
            errors.append(
                f"world.schema: must be one of {LandmarkSchemaRegistry.list_schemas()}"
            )
        if not self.dataset_tag:
            errors.append("world.dataset_tag: must be non-empty")
        return errors


class Presentation(NamedTuple):
    """One captured face: the image and its ground-truth landmarks."""

    image: FaceImage
    landmarks: LandmarkSet


def _face_ellipse(
    outline: np.ndarray, xs: np.ndarray, ys: np.ndarray
) -> tuple[np.ndarray, float]:
    """Normalized elliptical radius of every pixel w.r.t. the outline's bounding ellipse."""
    lo, hi = outline.min(axis=0), outline.max(axis=0)
    cx, cy = (lo + hi) / 2.0
    rx, ry = max((hi[0] - lo[0]) / 2.0, 1.0), max((hi[1] - lo[1]) / 2.0, 1.0)
    rho = np.sqrt(((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2)
    return rho, min(rx, ry)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _low_frequency_modes(size: int, count: int) -> np.ndarray:
    """The ``count`` smoothest 2-D cosine modes, shape (count, size*size)."""
    order = sorted(
        ((kx * kx + ky * ky, ky, kx) for ky in range(size) for kx in range(size)),
    )[:count]
    grid = (np.arange(size) + 0.5) * np.pi / size
    modes = np.empty((count, size * size))
    for row, (_, ky, kx) in enumerate(order):
        modes[row] = np.outer(np.cos(ky * grid), np.cos(kx * grid)).ravel()
    return modes


def _random_rotation(dimension: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dimension, dimension)))
    return q * np.sign(np.diag(r))


class FaceRenderer:
    """Renders identity codes onto landmark-positioned synthetic faces."""

    def __init__(self, config: SyntheticWorldConfig, basis: np.ndarray, schema: Type[LandmarkSchema]):
        self.config = config
        self.size = config.image_size
        self.basis = basis
        self.schema = schema
        self.canonical = schema.canonical(self.size)
        self._canonical_border = augment_border(self.canonical, self.size, self.size)
        ys, xs = np.mgrid[0 : self.size, 0 : self.size].astype(np.float64)
        self._xs, self._ys = xs, ys
        self.mean_face = self.base(self.canonical)

    def base(self, landmarks: LandmarkSet) -> np.ndarray:
        """Face shading and fiducial dots for ``landmarks``, shape (size, size)."""
        xs, ys = self._xs, self._ys
        plane = BACKGROUND + LIGHT_GRADIENT * ys / (self.size - 1)
        rho, radius = _face_ellipse(self.schema.face_outline(landmarks), xs, ys)
        plane = plane + FACE_SHADE * _sigmoid((1.0 - rho) * radius / 1.5)
        pts = landmarks.points
        d2 = (xs[..., None] - pts[:, 0]) ** 2 + (ys[..., None] - pts[:, 1]) ** 2
        plane = plane - DOT_DEPTH * np.exp(-d2 / (2.0 * DOT_SIGMA**2)).sum(axis=-1)
        return plane

    def texture(self, code: np.ndarray) -> np.ndarray:
        """Identity texture in the canonical frame."""
        return self.config.texture_contrast * (code @ self.basis).reshape(self.size, self.size)

    def render(self, code: np.ndarray, landmarks: LandmarkSet) -> FaceImage:
        dst = augment_border(landmarks, self.size, self.size)
        tri = delaunay_triangulate(dst)
        warped = warp_values(
            self.texture(code), self._canonical_border.points, dst.points, tri.triangles
        )
        plane = self.base(landmarks) + warped
        if self.config.channels == 3:
            plane = np.repeat(plane[:, :, np.newaxis], 3, axis=2)
        return FaceImage.from_array(plane, clip=True)


@dataclass(frozen=True, eq=False)
class SubjectModel:
    """
    One synthetic identity.

    Attributes:
        subject_id: Index within the population
        class_mean: Latent identity code m_k
        landmarks: The subject's neutral landmark positions
        renderer: Shared face renderer
        class_spread: Within-subject latent standard deviation
        landmark_jitter: Per-presentation landmark displacement (pixels)
    """

    subject_id: int
    class_mean: np.ndarray
    landmarks: LandmarkSet
    renderer: FaceRenderer = field(repr=False)
    class_spread: float = 0.6
    landmark_jitter: float = 1.0

    def sample_code(self, rng: np.random.Generator) -> np.ndarray:
        return self.class_mean + self.class_spread * rng.standard_normal(self.class_mean.shape[0])

    def jitter_landmarks(self, rng: np.random.Generator) -> LandmarkSet:
        n = len(self.landmarks)
        shift = self.landmark_jitter * rng.standard_normal(2)
        local = (self.landmark_jitter / 3.0) * rng.standard_normal((n, 2))
        pts = self.landmarks.points + shift + local
        return LandmarkSet(_clip_landmarks(pts, self.renderer.size), self.landmarks.schema_id)


def _clip_landmarks(points: np.ndarray, size: int) -> np.ndarray:
    return np.clip(points, LANDMARK_MARGIN, size - 1 - LANDMARK_MARGIN)


def sample_presentation(subject: SubjectModel, rng: np.random.Generator) -> Presentation:
    """Render one capture of ``subject`` with fresh within-class noise and jitter."""
    code = subject.sample_code(rng)
    landmarks = subject.jitter_landmarks(rng)
    return Presentation(subject.renderer.render(code, landmarks), landmarks)


class SyntheticWorld:
    """
    A seeded synthetic population with its renderer and extractor basis.

    Example:
        world = SyntheticWorld(SyntheticWorldConfig(rng_seed=7))
        subject = world.subject(3)
        image, landmarks = sample_presentation(subject, rng)
    """

    def __init__(self, config: SyntheticWorldConfig):
        errors = config.validate()
        if errors:
            raise ConfigurationError("Invalid synthetic world", errors)
        self.config = config
        self.seeds = SeedTree(config.rng_seed)
        schema = LandmarkSchemaRegistry.get(config.schema)
        size = config.image_size

        canonical = schema.canonical(size)
        ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
        rho, radius = _face_ellipse(schema.face_outline(canonical), xs, ys)
        mask = _sigmoid((1.0 - rho) * radius / 3.0).ravel()
        modes = _low_frequency_modes(size, config.dimension) * mask
        q, _ = np.linalg.qr(modes.T)
        basis = _random_rotation(config.dimension, self.seeds.rng("basis")) @ q.T
        self.renderer = FaceRenderer(config, basis, schema)
        self._subjects: dict[int, SubjectModel] = {}
        self._lock = threading.Lock()
        logger.info(
            "Built synthetic world seed=%d d=%d subjects=%d schema=%s",
            config.rng_seed,
            config.dimension,
            config.n_subjects,
            config.schema,
        )

    @property
    def basis(self) -> np.ndarray:
        return self.renderer.basis

    def _draw_identity(self, rng: np.random.Generator) -> tuple[np.ndarray, LandmarkSet]:
        cfg = self.config
        code = cfg.population_spread * rng.standard_normal(cfg.dimension)
        canonical = self.renderer.canonical
        shift = cfg.shape_spread * rng.standard_normal(2)
        local = LOCAL_SHAPE_FRACTION * cfg.shape_spread * rng.standard_normal(canonical.points.shape)
        shape = _clip_landmarks(canonical.points + shift + local, cfg.image_size)
        return code, LandmarkSet(shape, canonical.schema_id)

    def subject(self, subject_id: int) -> SubjectModel:
        if not 0 <= subject_id < self.config.n_subjects:
            raise ConfigurationError(
                "Subject out of range",
                [f"subject_id: must be in [0, {self.config.n_subjects}), got {subject_id}"],
            )
        with self._lock:
            if subject_id not in self._subjects:
                code, shape = self._draw_identity(self.seeds.rng("subject", subject_id))
                self._subjects[subject_id] = SubjectModel(
                    subject_id=subject_id,
                    class_mean=code,
                    landmarks=shape,
                    renderer=self.renderer,
                    class_spread=self.config.class_spread,
                    landmark_jitter=self.config.landmark_jitter,
                )
            return self._subjects[subject_id]

    def subjects(self) -> Iterator[SubjectModel]:
        for subject_id in range(self.config.n_subjects):
            yield self.subject(subject_id)

    def random_face(self, rng: np.random.Generator) -> Presentation:
        """A never-enrolled face from the same population, captured without noise."""
        code, shape = self._draw_identity(rng)
        return Presentation(self.renderer.render(code, shape), shape)

    def genuine_bound(self, k_sigma: float = 4.0) -> float:
        """
        Upper bound for aligned genuine distances of normalized embeddings.

        Both the noise norm and the norm of the normalized capture fluctuate
        by about ``1/sqrt(2d)`` relative, so the ratio spreads by ``1/sqrt(d)``.
        """
        cfg = self.config
        expected = math.sqrt(
            2.0 * cfg.class_spread**2 / (cfg.population_spread**2 + cfg.class_spread**2)
        )
        return expected * (1.0 + k_sigma / math.sqrt(cfg.dimension))

    def impostor_floor(self, k_sigma: float = 3.0) -> float:
        """Lower bound for distances between normalized embeddings of different subjects."""
        return math.sqrt(2.0) * (1.0 - k_sigma / math.sqrt(2.0 * self.config.dimension))


@lru_cache(maxsize=8)
def build_world(config: SyntheticWorldConfig) -> SyntheticWorld:
    """Shared, cached world per configuration."""
    return SyntheticWorld(config)


def synth_subject(config: SyntheticWorldConfig, subject_id: int) -> SubjectModel:
    """Deterministic subject ``subject_id`` of the world described by ``config``."""
    return build_world(config).subject(subject_id)
