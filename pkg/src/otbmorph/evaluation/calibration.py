"""
Genuine and impostor score collection on the synthetic world.

Every trial draws its captures and keys once and scores every requested
scenario on them (common random numbers), so scenario differences are not
masked by sampling noise. Impostors present at the victim's client and
therefore use the victim's key material.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from otbmorph.errors import ConfigurationError
from otbmorph.features.embedding import dissimilarity
from otbmorph.features.extractors import Extractor, SyntheticExtractor, extract_features
from otbmorph.features.world import Presentation, SyntheticWorld, sample_presentation
from otbmorph.morph.engine import MorphParams
from otbmorph.tools.seeds import SeedTree
from otbmorph.tools.types import Scenario
from otbmorph.transforms.auxiliary import ADLedger, AuxiliaryData
from otbmorph.transforms.pipeline import KeyIssuer, ProtectionPipeline, TransformParams
from otbmorph.transforms.protect import protect_gaussian, protect_none

from .metrics import OperatingPoint, ScoreSet, operating_points

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationSettings:
    """
    Attributes:
        genuine_trials: Mated comparisons per scenario
        impostor_trials: Non-mated comparisons per scenario
        histogram_bins: Bins of exported score histograms
    """

    genuine_trials: int = 500
    impostor_trials: int = 500
    histogram_bins: int = 30

    def validate(self) -> list[str]:
        errors = []
        if self.genuine_trials < 1:
            errors.append("calibration.genuine_trials: must be >= 1")
        if self.impostor_trials < 1:
            errors.append("calibration.impostor_trials: must be >= 1")
        if self.histogram_bins < 1:
            errors.append("calibration.histogram_bins: must be >= 1")
        return errors


@dataclass(frozen=True)
class TrialKeys:
    """Key material of one trial, shared by every scenario."""

    enrol_noise: AuxiliaryData
    probe_noise: AuxiliaryData
    implode: AuxiliaryData
    face: AuxiliaryData
    other_face: AuxiliaryData


class ScenarioScorer:
    """Scores one (enrolment, probe) capture pair under several scenarios."""

    def __init__(
        self,
        world: SyntheticWorld,
        scenarios: Iterable[Scenario],
        transform_params: Optional[TransformParams] = None,
        morph_params: Optional[MorphParams] = None,
        extractor: Optional[Extractor] = None,
    ):
        self.world = world
        self.scenarios = tuple(Scenario.parse(s) for s in scenarios)
        self.transform_params = transform_params or TransformParams()
        self.extractor = extractor or SyntheticExtractor.for_world(world)
        self.ledger = ADLedger()
        self.issuer = KeyIssuer(world, self.ledger, self.transform_params)
        self.pipelines = {
            s: ProtectionPipeline(s, self.extractor, self.transform_params, morph_params or MorphParams())
            for s in self.scenarios
        }

    def draw_keys(self, rng: np.random.Generator) -> TrialKeys:
        return TrialKeys(
            enrol_noise=self.issuer.issue(Scenario.GAUSSIAN, rng),
            probe_noise=self.issuer.issue(Scenario.GAUSSIAN, rng),
            implode=self.issuer.issue(Scenario.IMPLODE, rng),
            face=self.issuer.issue(Scenario.OTB_MORPH, rng),
            other_face=self.issuer.issue(Scenario.OTB_MORPH, rng),
        )

    def score_pair(self, enrol: Presentation, probe: Presentation, keys: TrialKeys) -> dict[Scenario, float]:
        scores: dict[Scenario, float] = {}
        plain: tuple = ()
        if Scenario.UNPROTECTED in self.scenarios or Scenario.GAUSSIAN in self.scenarios:
            plain = (
                extract_features(enrol.image, self.extractor),
                extract_features(probe.image, self.extractor),
            )
        for scenario in self.scenarios:
            if scenario is Scenario.UNPROTECTED:
                a, b = protect_none(plain[0]), protect_none(plain[1])
            elif scenario is Scenario.GAUSSIAN:
                sigma = self.transform_params.sigma
                a = protect_gaussian(plain[0], keys.enrol_noise, sigma)
                b = protect_gaussian(plain[1], keys.probe_noise, sigma)
            else:
                key = keys.implode if scenario is Scenario.IMPLODE else keys.face
                pipeline = self.pipelines[scenario]
                a, b = pipeline.protect(enrol, key), pipeline.protect(probe, key)
            scores[scenario] = float(dissimilarity(a.embedding, b.embedding))
        return scores

    def cross_key_score(self, enrol: Presentation, probe: Presentation, keys: TrialKeys) -> float:
        """Same subject, two different random faces."""
        pipeline = self.pipelines[Scenario.OTB_MORPH]
        a = pipeline.protect(enrol, keys.face)
        b = pipeline.protect(probe, keys.other_face)
        return float(dissimilarity(a.embedding, b.embedding))


@dataclass(frozen=True)
class CalibrationResult:
    """
    Attributes:
        score_sets: Genuine and impostor scores per scenario
        cross_key: Same-subject scores under two different random faces
            (empty unless scenario iv was calibrated)
    """

    score_sets: dict[Scenario, ScoreSet]
    cross_key: np.ndarray

    def operating_points(self, far_targets: Sequence[float]) -> dict[Scenario, dict[str, OperatingPoint]]:
        return {s: operating_points(scores, far_targets) for s, scores in self.score_sets.items()}

    def thresholds(self, far_targets: Sequence[float]) -> dict[Scenario, dict[str, float]]:
        return {
            s: {name: point.threshold for name, point in points.items()}
            for s, points in self.operating_points(far_targets).items()
        }


def calibrate(
    world: SyntheticWorld,
    scenarios: Iterable[Scenario],
    settings: CalibrationSettings,
    seeds: SeedTree,
    transform_params: Optional[TransformParams] = None,
    morph_params: Optional[MorphParams] = None,
    extractor: Optional[Extractor] = None,
) -> CalibrationResult:
    """
    Collect genuine, impostor and cross-key scores for every scenario.

    Trial ``t`` of each kind draws from ``seeds.rng("calibration", kind, t)``.
    """
    errors = settings.validate()
    if errors:
        raise ConfigurationError("Invalid calibration settings", errors)
    scorer = ScenarioScorer(world, scenarios, transform_params, morph_params, extractor)
    n_subjects = world.config.n_subjects
    genuine: dict[Scenario, list[float]] = {s: [] for s in scorer.scenarios}
    impostor: dict[Scenario, list[float]] = {s: [] for s in scorer.scenarios}
    cross: list[float] = []

    for t in range(settings.genuine_trials):
        rng = seeds.rng("calibration", "genuine", t)
        subject = world.subject(int(rng.integers(n_subjects)))
        enrol, probe = sample_presentation(subject, rng), sample_presentation(subject, rng)
        keys = scorer.draw_keys(rng)
        for scenario, score in scorer.score_pair(enrol, probe, keys).items():
            genuine[scenario].append(score)
        if Scenario.OTB_MORPH in scorer.scenarios:
            cross.append(scorer.cross_key_score(enrol, probe, keys))

    for t in range(settings.impostor_trials):
        rng = seeds.rng("calibration", "impostor", t)
        victim = int(rng.integers(n_subjects))
        other = (victim + int(rng.integers(1, n_subjects))) % n_subjects
        enrol = sample_presentation(world.subject(victim), rng)
        probe = sample_presentation(world.subject(other), rng)
        keys = scorer.draw_keys(rng)
        for scenario, score in scorer.score_pair(enrol, probe, keys).items():
            impostor[scenario].append(score)

    tag = world.config.dataset_tag
    score_sets = {
        s: ScoreSet(np.array(genuine[s]), np.array(impostor[s]), s, tag) for s in scorer.scenarios
    }
    logger.info(
        "Calibrated %d scenarios on %d genuine and %d impostor trials",
        len(score_sets),
        settings.genuine_trials,
        settings.impostor_trials,
    )
    return CalibrationResult(score_sets, np.array(cross, dtype=np.float64))
