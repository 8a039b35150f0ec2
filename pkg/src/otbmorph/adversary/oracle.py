"""
Score leakage (AP7), template injection (AP4) and eavesdropping (AP6).

An attack target exposes the victim's current server record and the
matching context of the session being attacked. Static targets never
change; protocol targets follow the victim's real sessions, so their
reference rotates whenever the genuine user verifies.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from otbmorph.errors import ConfigurationError, OracleExhaustedError
from otbmorph.features.embedding import DissimilarityScore, Embedding, dissimilarity
from otbmorph.features.world import Presentation
from otbmorph.protocol.channel import Message
from otbmorph.protocol.session import SERVER, ClientDevice, ProtocolServer, Session, run_session
from otbmorph.protocol.state import ServerRecord
from otbmorph.tools.digest import array_digest, text_digest
from otbmorph.tools.types import AttackSpace, Behavior, Decision, Scenario, TapPoint
from otbmorph.transforms.auxiliary import AuxiliaryData
from otbmorph.transforms.pipeline import ProtectionPipeline
from otbmorph.transforms.protect import ProtectedTemplate

logger = logging.getLogger(__name__)

Candidate = Union[Embedding, Presentation]


@dataclass(frozen=True)
class ScenarioContext:
    """
    How the matcher sees a candidate in the attacked session.

    Embedding candidates are injected past the extractor and matched as
    they are; image candidates go through the client pipeline with the
    session's key.
    """

    pipeline: ProtectionPipeline
    key: AuxiliaryData
    space: AttackSpace = AttackSpace.EMBEDDING

    def protect(self, candidate: Candidate) -> ProtectedTemplate:
        if self.space is AttackSpace.EMBEDDING:
            if not isinstance(candidate, Embedding):
                raise ConfigurationError("Attack candidate", ["space: embedding attacks need Embedding candidates"])
            return ProtectedTemplate(candidate, self.pipeline.scenario)
        if not isinstance(candidate, Presentation):
            raise ConfigurationError("Attack candidate", ["space: image attacks need Presentation candidates"])
        return self.pipeline.protect(candidate, self.key)


class AttackTarget(ABC):
    """The victim as seen by the adversary."""

    @abstractmethod
    def record(self) -> ServerRecord:
        """The victim's current server record."""

    @abstractmethod
    def context(self) -> ScenarioContext:
        """Matching context of the session under attack."""

    def advance(self) -> None:
        """Let the genuine user complete one session."""


class StaticTarget(AttackTarget):
    """A reference that never changes (scenarios i to iii)."""

    def __init__(self, record: ServerRecord, context: ScenarioContext):
        self._record = record
        self._context = context

    def record(self) -> ServerRecord:
        return self._record

    def context(self) -> ScenarioContext:
        return self._context


class ProtocolTarget(AttackTarget):
    """A victim enrolled on a protocol server; genuine sessions rotate its reference."""

    def __init__(
        self,
        server: ProtocolServer,
        client: ClientDevice,
        pipeline: ProtectionPipeline,
        rng: np.random.Generator,
        space: AttackSpace = AttackSpace.EMBEDDING,
    ):
        self.server = server
        self.client = client
        self.pipeline = pipeline
        self.rng = rng
        self.space = space
        self.sessions = 0
        self.rotations = 0

    def record(self) -> ServerRecord:
        return self.server.store.get(self.client.client_id)

    def context(self) -> ScenarioContext:
        key = self.client.se_state.current_ad
        assert key is not None
        return ScenarioContext(self.pipeline, key, self.space)

    def advance(self) -> None:
        transcript = run_session(self.client, self.server, Behavior.GENUINE, Scenario.OTB_MORPH, self.rng)
        self.sessions += 1
        self.rotations += int(transcript.rotated)


class LeakageOracle:
    """
    The adversary's access to the victim's matcher.

    Attributes:
        target: Victim being attacked
        tap_points: Attack points available
        query_budget: Maximum number of charged score queries
        queries_used: Charged queries so far
        intercepted: Templates seen on the channel (AP6)
    """

    def __init__(
        self,
        target: AttackTarget,
        tap_points: Iterable[TapPoint] = (TapPoint.AP7,),
        query_budget: Optional[int] = None,
    ):
        self.target = target
        self.tap_points = frozenset(TapPoint(t) for t in tap_points)
        if query_budget is not None and query_budget < 0:
            raise ConfigurationError("Invalid oracle", [f"query_budget: must be >= 0, got {query_budget}"])
        self.query_budget = query_budget
        self.queries_used = 0
        self.intercepted: list[ProtectedTemplate] = []

    @property
    def remaining(self) -> Optional[int]:
        if self.query_budget is None:
            return None
        return self.query_budget - self.queries_used

    def charge(self) -> None:
        if TapPoint.AP7 not in self.tap_points:
            raise ConfigurationError("Score leakage unavailable", ["tap_points: AP7 is required"])
        if self.query_budget is not None and self.queries_used >= self.query_budget:
            raise OracleExhaustedError(f"Query budget of {self.query_budget} exhausted")
        self.queries_used += 1

    def query(self, candidate: Candidate) -> DissimilarityScore:
        return leak_score(self, candidate, self.target.record(), self.target.context())

    def observe(self, candidate: Candidate) -> DissimilarityScore:
        """Score the attacker's own starting point; not charged to the budget."""
        return _matcher_score(candidate, self.target.record(), self.target.context())

    def intercept(self, message: Message, template: Optional[ProtectedTemplate]) -> None:
        """Channel tap: keep every template seen in transit."""
        if TapPoint.AP6 in self.tap_points and template is not None:
            self.intercepted.append(template)


def _matcher_score(
    candidate: Candidate, victim_record: ServerRecord, context: ScenarioContext
) -> DissimilarityScore:
    return dissimilarity(context.protect(candidate).embedding, victim_record.client_ref.embedding)


def leak_score(
    oracle: LeakageOracle,
    candidate: Candidate,
    victim_record: ServerRecord,
    scenario_context: ScenarioContext,
) -> DissimilarityScore:
    """
    The matcher's score for ``candidate`` against the victim's reference.

    Raises:
        OracleExhaustedError: the query budget is used up
    """
    oracle.charge()
    return _matcher_score(candidate, victim_record, scenario_context)


def inject_template(candidate_template: ProtectedTemplate, server: ProtocolServer, session: Session) -> Decision:
    """
    Submit a template straight to the matcher (AP4), bypassing the client.
    """
    decision, score = server.match(candidate_template, session.client_id)
    session.send(
        session.client_id,
        SERVER,
        "template",
        array_digest(candidate_template.embedding.values, "injected"),
        template=candidate_template,
    )
    session.send(
        SERVER, session.client_id, "decision", text_digest(decision.value), score=float(score), decision=decision
    )
    logger.debug("Injected template into %s/%d: %s", session.client_id, session.session_id, decision.value)
    return decision
