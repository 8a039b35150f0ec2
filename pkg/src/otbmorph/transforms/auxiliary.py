"""
Auxiliary data (transform keys) and the AD uniqueness ledger.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from otbmorph.errors import ADKindError, ADReuseError, ConfigurationError
from otbmorph.features.world import Presentation
from otbmorph.tools.types import ADKind

logger = logging.getLogger(__name__)

NONE_AD_ID = "none"


def new_ad_id(rng: np.random.Generator) -> str:
    """128-bit identifier drawn from the caller's stream."""
    return "ad-" + rng.bytes(16).hex()


@dataclass(frozen=True, eq=False)
class AuxiliaryData:
    """
    Key material of one protection transform.

    Attributes:
        ad_id: Unique identifier
        kind: What the payload is
        seed: Noise seed (noise_key)
        strength: Implode strength (implode_key)
        face: Random face image and landmarks (random_face)
    """

    ad_id: str
    kind: ADKind
    seed: Optional[int] = None
    strength: Optional[float] = None
    face: Optional[Presentation] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ADKind(self.kind))
        errors = []
        if not self.ad_id:
            errors.append("ad_id: must be non-empty")
        if self.kind is ADKind.NOISE_KEY and (self.seed is None or self.seed < 0):
            errors.append("seed: noise keys need a non-negative seed")
        if self.kind is ADKind.IMPLODE_KEY and (
            self.strength is None or not (0.0 <= self.strength < 1.0)
        ):
            errors.append("strength: implode keys need a strength in [0, 1)")
        if self.kind is ADKind.RANDOM_FACE and self.face is None:
            errors.append("face: random-face keys need an image and landmarks")
        if errors:
            raise ConfigurationError(f"Invalid auxiliary data {self.ad_id!r}", errors)

    @classmethod
    def none(cls) -> AuxiliaryData:
        return cls(NONE_AD_ID, ADKind.NONE)

    @classmethod
    def noise_key(cls, ad_id: str, seed: int) -> AuxiliaryData:
        return cls(ad_id, ADKind.NOISE_KEY, seed=int(seed))

    @classmethod
    def implode_key(cls, ad_id: str, strength: float) -> AuxiliaryData:
        return cls(ad_id, ADKind.IMPLODE_KEY, strength=float(strength))

    @classmethod
    def random_face(cls, ad_id: str, face: Presentation) -> AuxiliaryData:
        return cls(ad_id, ADKind.RANDOM_FACE, face=Presentation(*face))

    def require(self, kind: ADKind) -> None:
        if self.kind is not kind:
            raise ADKindError(f"Expected {kind.value} auxiliary data, got {self.kind.value} ({self.ad_id})")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AuxiliaryData):
            return NotImplemented
        if self.face is None or other.face is None:
            same_face = self.face is None and other.face is None
        else:
            same_face = self.face.image == other.face.image and self.face.landmarks == other.face.landmarks
        return (
            self.ad_id == other.ad_id
            and self.kind is other.kind
            and self.seed == other.seed
            and self.strength == other.strength
            and same_face
        )

    __hash__ = None  # type: ignore[assignment]


class ADLedger:
    """
    Thread-safe record of every issued and retired AD id.

    ``issue`` is an atomic check-and-insert: an id can be issued once, ever.
    ``retire`` marks an AD whose session has ended; using a retired AD again
    raises ADReuseError.
    """

    def __init__(self) -> None:
        self._issued: set[str] = set()
        self._retired: set[str] = set()
        self._lock = threading.Lock()

    def issue(self, ad_id: str) -> None:
        with self._lock:
            if ad_id in self._issued:
                raise ADReuseError(f"AD id issued twice: {ad_id}")
            self._issued.add(ad_id)

    def retire(self, ad_id: str) -> None:
        with self._lock:
            self._retired.add(ad_id)

    def check_active(self, ad_id: str) -> None:
        with self._lock:
            if ad_id in self._retired:
                raise ADReuseError(f"AD {ad_id} was already consumed and may not be reused")

    def to_dict(self) -> dict[str, list[str]]:
        """Sorted issued and retired ids, for persisting across runs."""
        with self._lock:
            return {"issued": sorted(self._issued), "retired": sorted(self._retired)}

    @classmethod
    def from_dict(cls, data: dict[str, list[str]]) -> ADLedger:
        ledger = cls()
        ledger._issued.update(data.get("issued", ()))
        ledger._retired.update(data.get("retired", ()))
        if not ledger._retired <= ledger._issued:
            raise ConfigurationError("Invalid AD ledger", ["retired: ids that were never issued"])
        return ledger

    def __contains__(self, ad_id: object) -> bool:
        with self._lock:
            return ad_id in self._issued

    def __len__(self) -> int:
        with self._lock:
            return len(self._issued)

    @property
    def retired_count(self) -> int:
        with self._lock:
            return len(self._retired)
