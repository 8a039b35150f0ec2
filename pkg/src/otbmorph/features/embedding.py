"""
Embeddings and the Euclidean dissimilarity score.

Lower scores mean more similar faces; every metric and decision in the
package follows that direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from otbmorph.errors import IncompatibleEmbeddingsError

NORM_TOL = 1e-9


class DissimilarityScore(float):
    """A non-negative Euclidean distance between two embeddings."""

    def __new__(cls, value: float) -> DissimilarityScore:
        value = float(value)
        if not math.isfinite(value) or value < 0.0:
            raise ValueError(f"Dissimilarity must be finite and >= 0, got {value!r}")
        return super().__new__(cls, value)

    @property
    def value(self) -> float:
        return float(self)

    def __repr__(self) -> str:
        return f"DissimilarityScore({float(self)!r})"


def l2_normalize(values: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise IncompatibleEmbeddingsError("Cannot normalize a zero vector")
    return values / norm


@dataclass(frozen=True, eq=False)
class Embedding:
    """Fixed-dimension feature vector; ``normalized`` asserts unit L2 norm."""

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise IncompatibleEmbeddingsError(
                f"Embedding must be a non-empty vector, got shape {np.shape(self.values)}"
            )
        if not np.all(np.isfinite(vals)):
            raise IncompatibleEmbeddingsError("Embedding contains non-finite values")
        if self.normalized and abs(float(np.linalg.norm(vals)) - 1.0) > NORM_TOL:
            raise IncompatibleEmbeddingsError(
                f"Embedding flagged normalized but has norm {np.linalg.norm(vals)!r}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def unit(cls, values: np.ndarray) -> Embedding:
        """Normalized embedding pointing along ``values``."""
        return cls(l2_normalize(np.asarray(values, dtype=np.float64)), normalized=True)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return self.normalized == other.normalized and bool(
            np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]


def dissimilarity(a: Embedding, b: Embedding) -> DissimilarityScore:
    """Euclidean distance ``sqrt(sum((a_i - b_i)^2))``."""
    if a.dimension != b.dimension:
        raise IncompatibleEmbeddingsError(
            f"Embedding dimensions differ: {a.dimension} vs {b.dimension}"
        )
    diff = a.values - b.values
    return DissimilarityScore(math.sqrt(float(np.dot(diff, diff))))
