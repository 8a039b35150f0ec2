"""
Splittable seed derivation.

Every random component draws from its own ``numpy.random.SeedSequence``
derived from the master seed and a path of names and indices::

    tree = SeedTree(2024)
    rng = tree.rng("attack", "iv", 17)

String components are mapped to stable 32-bit codes (SHA-256 prefix);
integers are used as-is. The same path always yields the same stream and
distinct paths yield independent streams.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def component_code(part: str | int) -> int:
    """Stable non-negative integer code for one path component."""
    if isinstance(part, bool):
        return int(part)
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"Seed path integers must be non-negative, got {part}")
        return int(part)
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass(frozen=True)
class SeedTree:
    """Derives per-component seed sequences from one master seed."""

    master_seed: int

    def sequence(self, *path: str | int) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=tuple(component_code(p) for p in path),
        )

    def rng(self, *path: str | int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(*path))

    def integer(self, *path: str | int) -> int:
        """A 63-bit integer seed for components that take plain ints."""
        return int(self.sequence(*path).generate_state(1, np.uint64)[0] >> np.uint64(1))
