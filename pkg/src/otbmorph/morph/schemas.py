"""
Landmark schema registry.

A schema fixes the number and semantic order of landmarks and supplies a
canonical (mean) shape in normalized [0, 1] face coordinates. Schemas are
registered with the ``LandmarkSchemaRegistry.register`` decorator and looked
up by id.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Type

import numpy as np

from otbmorph.errors import ConfigurationError

from .landmarks import LandmarkSet

logger = logging.getLogger(__name__)


def _ellipse_arc(cx: float, cy: float, rx: float, ry: float, angles: np.ndarray) -> np.ndarray:
    return np.column_stack([cx + rx * np.cos(angles), cy + ry * np.sin(angles)])


def _mean_shape_68() -> np.ndarray:
    """68-point mean face in the usual jaw/brow/nose/eye/mouth order."""
    jaw = _ellipse_arc(0.5, 0.42, 0.36, 0.46, np.pi - np.arange(17) * np.pi / 16)

    t = np.linspace(0.0, 1.0, 5)
    arch = 0.03 * np.sin(np.pi * t)
    brow_r = np.column_stack([0.22 + 0.22 * t, 0.33 - arch])
    brow_l = np.column_stack([0.56 + 0.22 * t, 0.33 - arch[::-1]])

    bridge = np.column_stack([np.full(4, 0.5), [0.40, 0.46, 0.52, 0.58]])
    nostrils = np.column_stack(
        [[0.42, 0.46, 0.50, 0.54, 0.58], [0.63, 0.645, 0.65, 0.645, 0.63]]
    )

    def eye(cx: float) -> np.ndarray:
        rx, ry, cy = 0.07, 0.03, 0.42
        return np.array(
            [
                [cx - rx, cy],
                [cx - rx / 3, cy - ry],
                [cx + rx / 3, cy - ry],
                [cx + rx, cy],
                [cx + rx / 3, cy + ry],
                [cx - rx / 3, cy + ry],
            ]
        )

    outer_mouth = _ellipse_arc(0.5, 0.74, 0.14, 0.05, np.pi + np.arange(12) * 2 * np.pi / 12)
    inner_mouth = _ellipse_arc(0.5, 0.74, 0.09, 0.02, np.pi + np.arange(8) * 2 * np.pi / 8)
    return np.vstack(
        [jaw, brow_r, brow_l, bridge, nostrils, eye(0.34), eye(0.66), outer_mouth, inner_mouth]
    )


class LandmarkSchema(ABC):
    """Abstract landmark convention."""

    schema_id: str = "unknown"
    description: str = ""

    @classmethod
    @abstractmethod
    def normalized_shape(cls) -> np.ndarray:
        """Canonical points in [0, 1] x [0, 1], shape (count, 2)."""

    @classmethod
    def count(cls) -> int:
        return int(cls.normalized_shape().shape[0])

    @classmethod
    def canonical(cls, width: int, height: int | None = None) -> LandmarkSet:
        """Canonical landmarks scaled to a ``width`` x ``height`` pixel frame."""
        height = width if height is None else height
        scale = np.array([width - 1, height - 1], dtype=np.float64)
        return LandmarkSet(cls.normalized_shape() * scale, cls.schema_id)

    @classmethod
    def face_outline(cls, landmarks: LandmarkSet) -> np.ndarray:
        """Points bounding the face region (used for shading and masks)."""
        return landmarks.points


class LandmarkSchemaRegistry:
    """Registry of landmark schemas keyed by schema id."""

    _schemas: dict[str, Type[LandmarkSchema]] = {}

    @classmethod
    def register(cls, schema_class: Type[LandmarkSchema]) -> Type[LandmarkSchema]:
        """Register a schema class (usable as a decorator)."""
        cls._schemas[schema_class.schema_id] = schema_class
        return schema_class

    @classmethod
    def get(cls, schema_id: str) -> Type[LandmarkSchema]:
        try:
            return cls._schemas[schema_id]
        except KeyError:
            raise ConfigurationError(
                f"Unknown landmark schema '{schema_id}'",
                [f"schema: expected one of {sorted(cls._schemas)}"],
            ) from None

    @classmethod
    def list_schemas(cls) -> list[str]:
        return sorted(cls._schemas)


@LandmarkSchemaRegistry.register
class Face68(LandmarkSchema):
    """Dense 68-point convention (jaw, brows, nose, eyes, mouth)."""

    schema_id = "face68"
    description = "68-point face landmarks"

    @classmethod
    def normalized_shape(cls) -> np.ndarray:
        return _mean_shape_68()

    @classmethod
    def face_outline(cls, landmarks: LandmarkSet) -> np.ndarray:
        return landmarks.points[:27]


@LandmarkSchemaRegistry.register
class Face21(LandmarkSchema):
    """Sparse 21-point subset of the 68-point convention."""

    schema_id = "face21"
    description = "21-point face landmarks (subset of face68)"
    subset = (0, 4, 8, 12, 16, 17, 21, 22, 26, 27, 30, 31, 35, 36, 39, 42, 45, 48, 51, 54, 57)

    @classmethod
    def normalized_shape(cls) -> np.ndarray:
        return _mean_shape_68()[list(cls.subset)]

    @classmethod
    def face_outline(cls, landmarks: LandmarkSet) -> np.ndarray:
        return landmarks.points[:9]
