"""
One hill-climbing attack against an enrolled victim under a scenario.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from otbmorph.errors import ConfigurationError
from otbmorph.features.extractors import Extractor, SyntheticExtractor, extract_features
from otbmorph.features.world import SubjectModel, SyntheticWorld, sample_presentation
from otbmorph.morph.engine import MorphParams
from otbmorph.protocol.session import ClientDevice, ProtocolServer
from otbmorph.protocol.state import HistoryEvent, ServerRecord
from otbmorph.protocol.ttp import provision_client
from otbmorph.tools.types import EER_POINT, AttackSpace, Decision, Scenario, TapPoint
from otbmorph.transforms.auxiliary import ADLedger
from otbmorph.transforms.pipeline import KeyIssuer, ProtectionPipeline, TransformParams

from .hill_climb import AttackPolicy, AttackTrace, hill_climb
from .oracle import AttackTarget, LeakageOracle, ProtocolTarget, ScenarioContext, StaticTarget

logger = logging.getLogger(__name__)

INIT_CHOICES = ("other", "victim")


@dataclass(frozen=True)
class AttackSchedule:
    """
    How the attack interleaves with the victim's own sessions.

    Attributes:
        genuine_every: The genuine user verifies after every this many
            attacker iterations (0: never)
        leak_every: Scores leak on every this many iterations
        rotation: Rotate references on accepted sessions (scenario iv)
        init: Start from another subject's face ("other") or from a
            captured face of the victim ("victim")
        query_budget: Maximum charged queries, None for unlimited
    """

    genuine_every: int = 1
    leak_every: int = 1
    rotation: bool = True
    init: str = "other"
    query_budget: Optional[int] = None

    def validate(self) -> list[str]:
        errors = []
        if self.genuine_every < 0:
            errors.append("schedule.genuine_every: must be >= 0")
        if self.leak_every < 1:
            errors.append("schedule.leak_every: must be >= 1")
        if self.init not in INIT_CHOICES:
            errors.append(f"attack.init: must be one of {list(INIT_CHOICES)}, got {self.init!r}")
        if self.query_budget is not None and self.query_budget < 0:
            errors.append("attack.query_budget: must be >= 0")
        return errors


def _attacker_subject(world: SyntheticWorld, victim: SubjectModel, rng: np.random.Generator) -> SubjectModel:
    n = world.config.n_subjects
    offset = int(rng.integers(1, n))
    return world.subject((victim.subject_id + offset) % n)


def attack_scenario(
    world: SyntheticWorld,
    scenario: Scenario,
    policy: AttackPolicy,
    victim: SubjectModel,
    rng: np.random.Generator,
    *,
    thresholds: Optional[Mapping[str, float]] = None,
    schedule: Optional[AttackSchedule] = None,
    transform_params: Optional[TransformParams] = None,
    morph_params: Optional[MorphParams] = None,
    extractor: Optional[Extractor] = None,
) -> AttackTrace:
    """
    Enroll ``victim`` under ``scenario`` and hill-climb against it.

    Scenarios i to iii keep one static reference for the whole attack. In
    scenario iv the victim is enrolled on a protocol server and completes a
    genuine session (rotating the reference) per ``schedule.genuine_every``
    attacker iterations.

    Args:
        world: Synthetic population
        scenario: Protection scenario
        policy: Hill-climbing policy (carries the proposal seed)
        victim: Subject being attacked
        rng: Stream for enrollment, keys, sessions and the attacker's face
        thresholds: Operating point thresholds used for ``success_at``
        schedule: Session interleaving, initialization and budget

    Returns:
        The attack trace with thresholds and success indices filled in
    """
    scenario = Scenario.parse(scenario)
    schedule = schedule or AttackSchedule()
    errors = schedule.validate()
    if errors:
        raise ConfigurationError("Invalid attack schedule", errors)
    thresholds = dict(thresholds or {})
    transform_params = transform_params or TransformParams()
    morph_params = morph_params or MorphParams()
    extractor = extractor or SyntheticExtractor.for_world(world)
    threshold = thresholds.get(EER_POINT, 0.0)

    ledger = ADLedger()
    issuer = KeyIssuer(world, ledger, transform_params)
    pipeline = ProtectionPipeline(scenario, extractor, transform_params, morph_params, ledger)
    client_id = f"victim-{victim.subject_id}"

    target: AttackTarget
    if scenario.rotates:
        sessions = policy.iterations // schedule.genuine_every if schedule.genuine_every else 0
        se_state = provision_client(client_id, sessions + 2, rng, issuer)
        server = ProtocolServer(
            extractor, threshold, morph_params, ledger=ledger, rotation_enabled=schedule.rotation
        )
        se_state = server.enroll_client(se_state, sample_presentation(victim, rng))
        target = ProtocolTarget(server, ClientDevice(client_id, victim, se_state), pipeline, rng, policy.space)
    else:
        key = issuer.issue(scenario, rng)
        reference = pipeline.protect(sample_presentation(victim, rng), key)
        record = ServerRecord(
            client_id, reference, threshold, (HistoryEvent(0, Decision.ACCEPT, False, key.ad_id),)
        )
        session_key = pipeline.capture_key(key, issuer, rng)
        target = StaticTarget(record, ScenarioContext(pipeline, session_key, policy.space))

    source = victim if schedule.init == "victim" else _attacker_subject(world, victim, rng)
    presentation = sample_presentation(source, rng)
    initial = (
        extract_features(presentation.image, extractor)
        if policy.space is AttackSpace.EMBEDDING
        else presentation
    )

    oracle = LeakageOracle(target, (TapPoint.AP4, TapPoint.AP7), schedule.query_budget)

    def _interleave(iteration: int) -> None:
        if schedule.genuine_every and iteration % schedule.genuine_every == 0:
            target.advance()

    trace = hill_climb(
        initial, oracle, policy, after_iteration=_interleave, leak_every=schedule.leak_every
    )
    logger.debug(
        "Attack on %s (%s, seed %d): %.4f -> %.4f",
        client_id, scenario.value, policy.seed, trace.initial_score, trace.final_score,
    )
    traced = AttackTrace(
        trace.iterations, seed=policy.seed, scenario=scenario, truncated=trace.truncated, queries=trace.queries
    )
    return traced.with_thresholds(thresholds)
