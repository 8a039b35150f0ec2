"""
Black-box hill climbing on leaked matcher scores.

Every iteration draws ``proposals_per_iteration`` isotropic Gaussian
perturbations of the best candidate so far, queries the oracle for each
and keeps the lowest-scoring proposal if it beats the lowest score seen
so far. Embedding candidates are renormalized after every step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, NamedTuple, Optional

import numpy as np

from otbmorph.errors import ConfigurationError, OracleExhaustedError
from otbmorph.features.embedding import Embedding
from otbmorph.features.world import Presentation
from otbmorph.morph.image import FaceImage
from otbmorph.tools.digest import array_digest
from otbmorph.tools.types import AttackSpace, Scenario

from .oracle import Candidate, LeakageOracle

logger = logging.getLogger(__name__)

IMAGE_STEP_GAIN = 0.1


@dataclass(frozen=True)
class AttackPolicy:
    """
    Hill-climbing settings.

    Attributes:
        space: Perturb embeddings (injected at AP4) or images
        step_scale: Expected step norm in embedding space; per-pixel
            standard deviation is ``step_scale * 0.1`` in image space
        proposals_per_iteration: Candidates queried per iteration
        iterations: Number of iterations
        seed: Seed of the proposal stream
    """

    space: AttackSpace = AttackSpace.EMBEDDING
    step_scale: float = 0.15
    proposals_per_iteration: int = 8
    iterations: int = 40
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "space", AttackSpace(self.space))
        errors = self.validate()
        if errors:
            raise ConfigurationError("Invalid attack policy", errors)

    def validate(self) -> list[str]:
        errors = []
        if not (math.isfinite(self.step_scale) and self.step_scale > 0):
            errors.append(f"attack.step_scale: must be > 0, got {self.step_scale!r}")
        if self.proposals_per_iteration < 1:
            errors.append("attack.proposals_per_iteration: must be >= 1")
        if self.iterations < 0:
            errors.append("attack.iterations: must be >= 0")
        if self.seed < 0:
            errors.append("attack.seed: must be >= 0")
        return errors

    def with_seed(self, seed: int) -> AttackPolicy:
        return replace(self, seed=seed)


class TraceEntry(NamedTuple):
    index: int
    digest: str
    score: float


@dataclass(frozen=True)
class AttackTrace:
    """
    Best-so-far score per iteration of one attack.

    Attributes:
        iterations: (index, candidate digest, best score) for 0..N
        thresholds: Operating point name to threshold
        success_at: Operating point name to the first index below threshold
        seed: Proposal seed
        scenario: Scenario attacked, when known
        truncated: The oracle ran out of budget before the last iteration
        queries: Charged oracle queries
    """

    iterations: tuple[TraceEntry, ...]
    thresholds: Mapping[str, float] = field(default_factory=dict)
    success_at: Mapping[str, int] = field(default_factory=dict)
    seed: int = 0
    scenario: Optional[Scenario] = None
    truncated: bool = False
    queries: int = 0

    def __post_init__(self) -> None:
        indices = [entry.index for entry in self.iterations]
        if indices != list(range(len(indices))):
            raise ValueError(f"Trace indices must be 0..N, got {indices}")
        scores = self.best_scores
        if np.any(np.diff(scores) > 0):
            raise ValueError("Best-so-far scores must be non-increasing")

    @property
    def best_scores(self) -> np.ndarray:
        return np.array([entry.score for entry in self.iterations], dtype=np.float64)

    @property
    def initial_score(self) -> float:
        return self.iterations[0].score

    @property
    def final_score(self) -> float:
        return self.iterations[-1].score

    def first_below(self, threshold: float) -> Optional[int]:
        """First iteration whose best score is strictly below ``threshold``."""
        hits = np.flatnonzero(self.best_scores < threshold)
        return int(hits[0]) if hits.size else None

    def with_thresholds(self, thresholds: Mapping[str, float]) -> AttackTrace:
        success = {}
        for name, value in thresholds.items():
            hit = self.first_below(value)
            if hit is not None:
                success[name] = hit
        return replace(self, thresholds=dict(thresholds), success_at=success)


def _digest(candidate: Candidate) -> str:
    if isinstance(candidate, Embedding):
        return array_digest(candidate.values)
    return array_digest(candidate.image.data, "image")


def perturb(candidate: Candidate, policy: AttackPolicy, rng: np.random.Generator) -> Candidate:
    """One isotropic Gaussian proposal around ``candidate``."""
    if isinstance(candidate, Embedding):
        d = candidate.dimension
        step = policy.step_scale * rng.standard_normal(d) / math.sqrt(d)
        return Embedding.unit(candidate.values + step)
    noise = policy.step_scale * IMAGE_STEP_GAIN * rng.standard_normal(candidate.image.shape)
    image = FaceImage(np.clip(candidate.image.data + noise, 0.0, 1.0))
    return Presentation(image, candidate.landmarks)


def hill_climb(
    initial: Candidate,
    oracle: LeakageOracle,
    policy: AttackPolicy,
    *,
    after_iteration: Optional[Callable[[int], None]] = None,
    leak_every: int = 1,
) -> AttackTrace:
    """
    Run ``policy.iterations`` hill-climbing iterations from ``initial``.

    Args:
        initial: Starting embedding or presentation (must match policy.space)
        oracle: Score source; the initial score is observed without charge
        policy: Step size, proposal count, iteration count and seed
        after_iteration: Called with the iteration index after each iteration
        leak_every: Scores leak only on every ``leak_every``-th iteration;
            other iterations keep the best candidate unchanged

    Returns:
        Trace with ``iterations + 1`` entries, fewer if the oracle budget
        ran out (``truncated`` set)
    """
    expected = Embedding if policy.space is AttackSpace.EMBEDDING else Presentation
    if not isinstance(initial, expected):
        raise ConfigurationError(
            "Attack candidate", [f"space: {policy.space.value} attacks start from {expected.__name__}"]
        )
    if leak_every < 1:
        raise ConfigurationError("Invalid schedule", [f"schedule.leak_every: must be >= 1, got {leak_every}"])

    rng = np.random.default_rng(policy.seed)
    best = initial
    best_score = float(oracle.observe(initial))
    entries = [TraceEntry(0, _digest(best), best_score)]
    truncated = False

    for t in range(1, policy.iterations + 1):
        if t % leak_every == 0:
            proposals = [perturb(best, policy, rng) for _ in range(policy.proposals_per_iteration)]
            scores = []
            try:
                for proposal in proposals:
                    scores.append(float(oracle.query(proposal)))
            except OracleExhaustedError:
                truncated = True
                logger.info("Oracle exhausted at iteration %d; trace truncated", t)
                break
            k = int(np.argmin(scores))
            if scores[k] < best_score:
                best, best_score = proposals[k], scores[k]
        entries.append(TraceEntry(t, _digest(best), best_score))
        logger.debug("Iteration %d best=%.6f", t, best_score)
        if after_iteration is not None:
            after_iteration(t)

    return AttackTrace(tuple(entries), seed=policy.seed, truncated=truncated, queries=oracle.queries_used)
