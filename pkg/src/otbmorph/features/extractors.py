"""
Feature extractor boundary.

Extractors turn a FaceImage into a raw feature vector; ``extract_features``
wraps the result as an (L2-normalized) Embedding. Implementations register
themselves with ``ExtractorRegistry`` under a name so configurations can
refer to them.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Any, Type

import numpy as np

from otbmorph.errors import ConfigurationError, IncompatibleImagesError
from otbmorph.morph.image import FaceImage

from .embedding import Embedding
from .world import SyntheticWorld

logger = logging.getLogger(__name__)


class Extractor(ABC):
    """Abstract, immutable feature extractor."""

    name: str = "unknown"

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Length of the produced feature vectors."""

    @abstractmethod
    def raw_features(self, image: FaceImage) -> np.ndarray:
        """Unnormalized feature vector of ``image``."""

    @classmethod
    @abstractmethod
    def for_world(cls, world: SyntheticWorld, **options: Any) -> Extractor:
        """Build an extractor suited to ``world``'s images."""


class ExtractorRegistry:
    """Registry of extractor classes keyed by name."""

    _extractors: dict[str, Type[Extractor]] = {}

    @classmethod
    def register(cls, extractor_class: Type[Extractor]) -> Type[Extractor]:
        """Register an extractor class (usable as a decorator)."""
        cls._extractors[extractor_class.name] = extractor_class
        return extractor_class

    @classmethod
    def get(cls, name: str) -> Type[Extractor]:
        try:
            return cls._extractors[name]
        except KeyError:
            raise ConfigurationError(
                f"Unknown extractor '{name}'",
                [f"extractor: expected one of {cls.list_extractors()}"],
            ) from None

    @classmethod
    def is_registered(cls, name: str) -> bool:
        return name in cls._extractors

    @classmethod
    def list_extractors(cls) -> list[str]:
        return sorted(cls._extractors)

    @classmethod
    def create(cls, name: str, world: SyntheticWorld, **options: Any) -> Extractor:
        return cls.get(name).for_world(world, **options)


@ExtractorRegistry.register
class SyntheticExtractor(Extractor):
    """
    Fixed random linear projection of the mean-subtracted luminance.

    Uses the world's own basis, so aligned renders map back to their codes.
    """

    name = "synthetic-projection"

    def __init__(self, basis: np.ndarray, mean_face: np.ndarray, contrast: float):
        self.basis = basis
        self.mean_face = mean_face
        self.contrast = contrast

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])

    @classmethod
    def for_world(cls, world: SyntheticWorld, **options: Any) -> SyntheticExtractor:
        return cls(world.basis, world.renderer.mean_face, world.config.texture_contrast)

    def raw_features(self, image: FaceImage) -> np.ndarray:
        plane = image.gray()
        if plane.shape != self.mean_face.shape:
            raise IncompatibleImagesError(
                f"Extractor expects {self.mean_face.shape} images, got {plane.shape}"
            )
        return self.basis @ (plane - self.mean_face).ravel() / self.contrast


@ExtractorRegistry.register
class BlockMeanExtractor(Extractor):
    """Block-averaged luminance on a ``grid`` x ``grid`` lattice, mean removed."""

    name = "block-mean"

    def __init__(self, grid: int = 8):
        if grid < 2:
            raise ConfigurationError("Invalid extractor", ["grid: must be >= 2"])
        self.grid = grid

    @property
    def dimension(self) -> int:
        return self.grid * self.grid

    @classmethod
    def for_world(cls, world: SyntheticWorld, **options: Any) -> BlockMeanExtractor:
        return cls(grid=int(options.get("grid", 8)))

    def raw_features(self, image: FaceImage) -> np.ndarray:
        plane = image.gray()
        rows = np.array_split(np.arange(plane.shape[0]), self.grid)
        cols = np.array_split(np.arange(plane.shape[1]), self.grid)
        cells = np.array([[plane[np.ix_(r, c)].mean() for c in cols] for r in rows]).ravel()
        return cells - cells.mean()


def extract_features(
    image: FaceImage,
    extractor: Extractor,
    normalize: bool = True,
) -> Embedding:
    """
    Extract an embedding.

    Args:
        image: Face image
        extractor: A registered extractor instance
        normalize: L2-normalize the features (default)

    Returns:
        Embedding of ``extractor.dimension`` values; unit norm when normalized
    """
    if not isinstance(extractor, Extractor) or not ExtractorRegistry.is_registered(extractor.name):
        raise ConfigurationError(
            "Unknown extractor",
            [f"extractor: {getattr(extractor, 'name', extractor)!r} is not registered"],
        )
    raw = extractor.raw_features(image)
    if not normalize:
        return Embedding(raw, normalized=False)
    if not np.any(raw):
        logger.warning("Extractor %s produced a zero vector; left unnormalized", extractor.name)
        return Embedding(raw, normalized=False)
    return Embedding.unit(raw)
