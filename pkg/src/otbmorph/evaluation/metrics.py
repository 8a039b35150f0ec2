"""
Verification and attack metrics on dissimilarity scores.

Lower scores mean more similar. A comparison is accepted iff its score is
strictly below the threshold, so at threshold ``t``:

    FAR = #{impostor < t} / #impostor
    FRR = #{genuine >= t} / #genuine
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats

from otbmorph.errors import InsufficientDataError
from otbmorph.tools.types import EER_POINT, Scenario, far_point

if TYPE_CHECKING:
    from otbmorph.adversary.hill_climb import AttackTrace

logger = logging.getLogger(__name__)

FAR_COUNT_TOL = 1e-9


def _as_scores(values: Sequence[float] | np.ndarray, kind: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{kind} scores must be finite and non-negative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """
    Genuine and impostor scores of one scenario.

    Attributes:
        genuine: Mated comparison scores
        impostor: Non-mated comparison scores
        scenario: Scenario the scores were produced under
        dataset_tag: Label of the population
    """

    genuine: np.ndarray
    impostor: np.ndarray
    scenario: Optional[Scenario] = None
    dataset_tag: str = "synthetic"

    def __post_init__(self) -> None:
        object.__setattr__(self, "genuine", _as_scores(self.genuine, "genuine"))
        object.__setattr__(self, "impostor", _as_scores(self.impostor, "impostor"))
        if self.scenario is not None:
            object.__setattr__(self, "scenario", Scenario.parse(self.scenario))

    def require(self) -> None:
        if self.genuine.size == 0 or self.impostor.size == 0:
            raise InsufficientDataError(
                f"Need genuine and impostor scores, got {self.genuine.size} and {self.impostor.size}"
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScoreSet):
            return NotImplemented
        return (
            np.array_equal(self.genuine, other.genuine)
            and np.array_equal(self.impostor, other.impostor)
            and self.scenario == other.scenario
            and self.dataset_tag == other.dataset_tag
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class OperatingPoint:
    """
    A threshold with its measured error rates.

    ``low_sample`` marks FAR targets finer than the impostor count resolves.
    """

    name: str
    threshold: float
    far: float
    frr: float
    low_sample: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.far <= 1.0 and 0.0 <= self.frr <= 1.0):
            raise ValueError(f"Rates out of range at {self.name}: far={self.far}, frr={self.frr}")


def _error_counts(scores: ScoreSet, thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Impostors accepted and genuine rejected at each threshold."""
    imp = np.sort(scores.impostor)
    gen = np.sort(scores.genuine)
    false_accepts = np.searchsorted(imp, thresholds, side="left")
    false_rejects = gen.size - np.searchsorted(gen, thresholds, side="left")
    return false_accepts.astype(np.int64), false_rejects.astype(np.int64)


def compute_far_frr(scores: ScoreSet, threshold: float) -> tuple[float, float]:
    """
    FAR and FRR at ``threshold``.

    Raises:
        InsufficientDataError: either score list is empty
    """
    scores.require()
    fa, fr = _error_counts(scores, np.array([threshold], dtype=np.float64))
    return int(fa[0]) / scores.impostor.size, int(fr[0]) / scores.genuine.size


def candidate_thresholds(scores: ScoreSet) -> np.ndarray:
    """Distinct observed scores plus the midpoints between neighbours, ascending."""
    distinct = np.unique(np.concatenate([scores.genuine, scores.impostor]))
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    return np.unique(np.concatenate([distinct, mids]))


def compute_eer(scores: ScoreSet) -> tuple[float, float]:
    """
    Equal error rate and its threshold.

    Sweeps ``candidate_thresholds`` and keeps the lowest threshold
    minimizing ``|FAR - FRR|`` (compared exactly on counts); the EER is the
    mean of FAR and FRR there.

    Returns:
        (eer, threshold)
    """
    scores.require()
    thresholds = candidate_thresholds(scores)
    fa, fr = _error_counts(scores, thresholds)
    n_gen, n_imp = scores.genuine.size, scores.impostor.size
    gap = np.abs(fa * n_gen - fr * n_imp)
    best = int(np.argmin(gap))
    far, frr = fa[best] / n_imp, fr[best] / n_gen
    return (far + frr) / 2.0, float(thresholds[best])


def eer_point(scores: ScoreSet) -> OperatingPoint:
    _, threshold = compute_eer(scores)
    far, frr = compute_far_frr(scores, threshold)
    return OperatingPoint(EER_POINT, threshold, far, frr)


def threshold_at_far(scores: ScoreSet, target_far: float) -> OperatingPoint:
    """
    Largest threshold whose measured FAR does not exceed ``target_far``.

    That is the (k+1)-th smallest impostor score with
    ``k = floor(target_far * n_impostor)``; when every impostor may be
    accepted the next float above the largest impostor score is used.
    Fewer than ``1 / target_far`` impostors sets ``low_sample``.
    """
    scores.require()
    if not (math.isfinite(target_far) and target_far > 0):
        raise ValueError(f"target_far must be > 0, got {target_far!r}")
    imp = np.sort(scores.impostor)
    n = imp.size
    k = int(math.floor(target_far * n + FAR_COUNT_TOL))
    threshold = float(np.nextafter(imp[-1], np.inf)) if k >= n else float(imp[k])
    far, frr = compute_far_frr(scores, threshold)
    low_sample = n < 1.0 / target_far - FAR_COUNT_TOL
    if low_sample:
        logger.warning(
            "Only %d impostor scores for FAR target %g; operating point is low-sample", n, target_far
        )
    return OperatingPoint(far_point(target_far), threshold, far, frr, low_sample)


def operating_points(scores: ScoreSet, far_targets: Sequence[float]) -> dict[str, OperatingPoint]:
    """EER point followed by one point per FAR target."""
    points = {EER_POINT: eer_point(scores)}
    for target in far_targets:
        point = threshold_at_far(scores, target)
        points[point.name] = point
    return points


def compute_asr(traces: Sequence[AttackTrace], point: OperatingPoint) -> float:
    """
    Fraction of attack traces whose best score drops strictly below the threshold.

    Raises:
        InsufficientDataError: no traces
    """
    if len(traces) == 0:
        raise InsufficientDataError("No attack traces to evaluate")
    successes = sum(1 for trace in traces if trace.first_below(point.threshold) is not None)
    return successes / len(traces)


class DetCurve(NamedTuple):
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray


def det_curve(scores: ScoreSet) -> DetCurve:
    """FAR and FRR at every candidate threshold."""
    scores.require()
    thresholds = candidate_thresholds(scores)
    fa, fr = _error_counts(scores, thresholds)
    return DetCurve(thresholds, fa / scores.impostor.size, fr / scores.genuine.size)


def decidability(scores: ScoreSet) -> float:
    """Decidability index ``|mu_i - mu_g| / sqrt((var_g + var_i) / 2)``."""
    scores.require()
    spread = math.sqrt((float(np.var(scores.genuine)) + float(np.var(scores.impostor))) / 2.0)
    gap = abs(float(np.mean(scores.impostor)) - float(np.mean(scores.genuine)))
    if spread == 0.0:
        return math.inf if gap > 0 else 0.0
    return gap / spread


class KSResult(NamedTuple):
    statistic: float
    p_value: float
    linkable: bool


def unlinkability_ks(mated_cross: Sequence[float], impostor: Sequence[float], alpha: float = 0.01) -> KSResult:
    """
    Two-sample KS test of cross-key mated scores against impostor scores.

    ``linkable`` is True when the distributions differ at level ``alpha``.
    """
    a = _as_scores(mated_cross, "mated")
    b = _as_scores(impostor, "impostor")
    if a.size == 0 or b.size == 0:
        raise InsufficientDataError("KS test needs two non-empty samples")
    result = stats.ks_2samp(a, b)
    return KSResult(float(result.statistic), float(result.pvalue), bool(result.pvalue <= alpha))


class Histogram(NamedTuple):
    edges: np.ndarray
    genuine: np.ndarray
    impostor: np.ndarray


def histogram(scores: ScoreSet, bins: int = 30) -> Histogram:
    """Genuine and impostor counts over shared bin edges."""
    scores.require()
    edges = np.histogram_bin_edges(np.concatenate([scores.genuine, scores.impostor]), bins=bins)
    genuine, _ = np.histogram(scores.genuine, bins=edges)
    impostor, _ = np.histogram(scores.impostor, bins=edges)
    return Histogram(edges, genuine, impostor)
