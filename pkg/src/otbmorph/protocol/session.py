"""
Enrollment, two-step verification and complete protocol sessions.

Flow of one session (client C, server S):

    C -> S  request     client id
    S -> C  challenge   session id and nonce
    C -> S  template    probe morphed with the current AD          (Step 1)
    S -> C  decision    accept iff score < threshold
    C -> S  reenroll    fresh capture morphed with a new pseudonym  (Step 2, accept only)
    S -> C  ack         reference replaced
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

import numpy as np

from otbmorph.errors import (
    ConfigurationError,
    OTBMorphError,
    PoolExhaustedError,
    ProtocolStateError,
    ProtocolViolationError,
)
from otbmorph.features.embedding import DissimilarityScore, dissimilarity
from otbmorph.features.extractors import Extractor
from otbmorph.features.world import Presentation, SubjectModel, sample_presentation
from otbmorph.morph.engine import MorphParams
from otbmorph.tools.digest import array_digest, text_digest
from otbmorph.tools.types import Behavior, Decision, Scenario
from otbmorph.transforms.auxiliary import ADLedger
from otbmorph.transforms.protect import ProtectedTemplate, protect_otb

from .channel import Channel, Message
from .state import HistoryEvent, SecureElementState, ServerRecord
from .store import ServerStore

logger = logging.getLogger(__name__)

SERVER = "server"


class StepOneResult(NamedTuple):
    decision: Decision
    score: DissimilarityScore
    probe: ProtectedTemplate


def decide(score: float, threshold: float) -> Decision:
    """Accept iff the score is strictly below the threshold."""
    return Decision.ACCEPT if score < threshold else Decision.REJECT


def enroll(
    client: SecureElementState,
    presentation: Presentation,
    params: MorphParams,
    extractor: Extractor,
    threshold: float,
    ledger: Optional[ADLedger] = None,
) -> tuple[ServerRecord, SecureElementState]:
    """
    Enroll a client with its next pseudonym.

    The reference is the presentation morphed with the pseudonym's random
    face; the pseudonym is consumed and its AD becomes ``current_ad``.

    Raises:
        EnrollmentUnavailableError: the pseudonym pool is empty
    """
    pseudonym, se_state = client.take_pseudonym()
    image, landmarks = presentation
    reference = protect_otb(image, landmarks, pseudonym.ad, params, extractor, ledger)
    record = ServerRecord(
        client.client_id,
        reference,
        DissimilarityScore(threshold),
        (HistoryEvent(0, Decision.ACCEPT, False, pseudonym.ad.ad_id),),
    )
    logger.debug("Enrolled %s with %s", client.client_id, pseudonym.ad.ad_id)
    return record, se_state.with_current(pseudonym.ad)


def verify_step1(
    presentation: Presentation,
    record: ServerRecord,
    se_state: SecureElementState,
    extractor: Extractor,
    params: Optional[MorphParams] = None,
    ledger: Optional[ADLedger] = None,
) -> StepOneResult:
    """
    Morph the probe with the current AD and match it against the reference.

    Neither ``record`` nor ``se_state`` is modified.

    Raises:
        ProtocolStateError: no current AD, or the record belongs to another client
    """
    if se_state.current_ad is None:
        raise ProtocolStateError(f"Client {se_state.client_id} holds no current AD")
    if se_state.client_id != record.client_id:
        raise ProtocolStateError(
            f"Secure element of {se_state.client_id} used against record of {record.client_id}"
        )
    image, landmarks = presentation
    probe = protect_otb(image, landmarks, se_state.current_ad, params or MorphParams(), extractor, ledger)
    score = dissimilarity(probe.embedding, record.client_ref.embedding)
    return StepOneResult(decide(score, record.threshold), score, probe)


def verify_step2(
    fresh_presentation: Presentation,
    record: ServerRecord,
    se_state: SecureElementState,
    extractor: Extractor,
    *,
    after: Decision,
    session_id: int,
    params: Optional[MorphParams] = None,
    ledger: Optional[ADLedger] = None,
) -> tuple[ServerRecord, SecureElementState]:
    """
    Rotate the AD and the stored reference after an accepted Step 1.

    Returns the new record and secure-element state without storing either;
    ``commit_rotation`` stores the record and retires the previous AD.

    Raises:
        ProtocolViolationError: Step 1 did not accept
        PoolExhaustedError: no pseudonym left to rotate to
    """
    if Decision(after) is not Decision.ACCEPT:
        raise ProtocolViolationError("Re-enrollment requested after a rejected verification")
    if se_state.current_ad is None:
        raise ProtocolStateError(f"Client {se_state.client_id} holds no current AD")
    if not se_state.pseudonym_pool:
        raise PoolExhaustedError(f"Client {se_state.client_id} has no pseudonym left for rotation")
    pseudonym, next_state = se_state.take_pseudonym()
    image, landmarks = fresh_presentation
    reference = protect_otb(image, landmarks, pseudonym.ad, params or MorphParams(), extractor, ledger)
    previous = se_state.current_ad.ad_id
    event = HistoryEvent(session_id, Decision.ACCEPT, True, pseudonym.ad.ad_id, previous)
    logger.debug("Rotated %s: %s -> %s", record.client_id, previous, pseudonym.ad.ad_id)
    return record.rotate(reference, event), next_state.with_current(pseudonym.ad)


def commit_rotation(
    store: ServerStore, before: ServerRecord, after: ServerRecord, ledger: Optional[ADLedger] = None
) -> None:
    """
    Store a record produced by ``verify_step2``, then retire the AD it replaced.

    Raises:
        ProtocolStateError: the stored record is no longer ``before``; nothing is retired
    """
    store.swap(before, after)
    event = after.history[-1]
    if ledger is not None and event.rotated and event.previous_ad_id is not None:
        ledger.retire(event.previous_ad_id)


@dataclass
class ClientDevice:
    """A client: its identity, the subject who owns it and its secure element."""

    client_id: str
    subject: SubjectModel
    se_state: SecureElementState


@dataclass(frozen=True)
class SessionTranscript:
    """
    Everything exchanged in one session.

    ``decision`` and ``score`` are None when the session failed before the
    server decided.
    """

    session_id: int
    client_id: str
    behavior: Behavior
    messages: tuple[Message, ...]
    decision: Optional[Decision]
    rotated: bool
    score: Optional[float] = None
    ad_id: Optional[str] = None
    error: Optional[str] = None

    def __post_init__(self) -> None:
        if self.rotated and self.decision is not Decision.ACCEPT:
            raise ProtocolStateError("A session can only rotate after an accept")

    def to_records(self) -> list[dict[str, Any]]:
        return [m.to_record() for m in self.messages]

    def to_dict(self) -> dict[str, Any]:
        """One JSON-lines record: session outcome plus its messages."""
        return {
            "session_id": self.session_id,
            "client_id": self.client_id,
            "behavior": self.behavior.value,
            "decision": self.decision.value if self.decision is not None else None,
            "rotated": self.rotated,
            "score": self.score,
            "ad_id": self.ad_id,
            "error": self.error,
            "messages": self.to_records(),
        }


@dataclass
class Session:
    """An open session: numbers messages and forwards them on the channel."""

    session_id: int
    client_id: str
    channel: Channel
    messages: list[Message] = field(default_factory=list)

    def send(
        self,
        sender: str,
        recipient: str,
        kind: str,
        digest: str,
        *,
        score: Optional[float] = None,
        decision: Optional[Decision] = None,
        template: Optional[ProtectedTemplate] = None,
    ) -> Message:
        message = Message(
            self.session_id, len(self.messages), sender, recipient, kind, digest, score, decision
        )
        self.messages.append(message)
        return self.channel.send(message, template)


class ProtocolServer:
    """
    The verifying server: record store, matcher and rotation switch.

    ``rotation_enabled=False`` keeps the enrollment reference forever
    (static-key ablation).
    """

    def __init__(
        self,
        extractor: Extractor,
        threshold: float,
        params: Optional[MorphParams] = None,
        *,
        store: Optional[ServerStore] = None,
        ledger: Optional[ADLedger] = None,
        channel: Optional[Channel] = None,
        rotation_enabled: bool = True,
    ):
        self.extractor = extractor
        self.threshold = DissimilarityScore(threshold)
        self.params = params or MorphParams()
        self.store = store if store is not None else ServerStore()
        self.ledger = ledger
        self.channel = channel if channel is not None else Channel()
        self.rotation_enabled = rotation_enabled
        self._next_session: dict[str, int] = {}

    def enroll_client(self, se_state: SecureElementState, presentation: Presentation) -> SecureElementState:
        record, updated = enroll(
            se_state, presentation, self.params, self.extractor, self.threshold, self.ledger
        )
        self.store.put(record)
        return updated

    def open_session(self, client_id: str) -> Session:
        record = self.store.get(client_id)
        session_id = max(self._next_session.get(client_id, 1), record.last_session_id + 1)
        self._next_session[client_id] = session_id + 1
        return Session(session_id, client_id, self.channel)

    def match(self, template: ProtectedTemplate, client_id: str) -> tuple[Decision, DissimilarityScore]:
        """Match a submitted template against the client's reference."""
        record = self.store.get(client_id)
        score = dissimilarity(template.embedding, record.client_ref.embedding)
        return decide(score, record.threshold), score


def run_session(
    client: ClientDevice,
    server: ProtocolServer,
    behavior: Behavior,
    scenario: Scenario,
    rng: np.random.Generator,
    presenter: Optional[SubjectModel] = None,
) -> SessionTranscript:
    """
    Run one verification session end to end.

    A genuine session presents ``client.subject``; an attacker session
    presents ``presenter`` on the victim's device. An accepted session
    rotates the reference unless rotation is disabled; if the pool is empty
    the accept stands and the transcript carries ``pool-exhausted``.

    Errors other than pool exhaustion propagate with the transcript so far
    attached as ``exc.transcript``.
    """
    behavior = Behavior(behavior)
    if Scenario.parse(scenario) is not Scenario.OTB_MORPH:
        raise ConfigurationError(
            "Protocol sessions run the one-time morph scheme", [f"scenario: expected iv, got {scenario}"]
        )
    subject = client.subject if behavior is Behavior.GENUINE else presenter
    if subject is None:
        raise ConfigurationError("Attacker session", ["presenter: required for attacker sessions"])

    cid = client.client_id
    session = server.open_session(cid)
    sid = session.session_id
    decision: Optional[Decision] = None
    score: Optional[float] = None
    ad_id: Optional[str] = None
    try:
        session.send(cid, SERVER, "request", text_digest(cid))
        session.send(SERVER, cid, "challenge", text_digest(str(sid), rng.bytes(8).hex()))
        record = server.store.get(cid)
        step1 = verify_step1(
            sample_presentation(subject, rng), record, client.se_state, server.extractor,
            server.params, server.ledger,
        )
        ad_id = step1.probe.ad_id
        session.send(
            cid, SERVER, "template", array_digest(step1.probe.embedding.values, str(ad_id)),
            template=step1.probe,
        )
        decision, score = step1.decision, float(step1.score)
        session.send(SERVER, cid, "decision", text_digest(decision.value), score=score, decision=decision)
        logger.debug("Session %s/%d (%s): score=%.6f %s", cid, sid, behavior.value, score, decision.value)

        if decision is Decision.REJECT:
            return SessionTranscript(sid, cid, behavior, tuple(session.messages), decision, False, score, ad_id)
        if not server.rotation_enabled:
            server.store.swap(record, record.append(HistoryEvent(sid, decision, False, ad_id)))
            return SessionTranscript(sid, cid, behavior, tuple(session.messages), decision, False, score, ad_id)
        try:
            new_record, new_state = verify_step2(
                sample_presentation(subject, rng), record, client.se_state, server.extractor,
                after=decision, session_id=sid, params=server.params, ledger=server.ledger,
            )
        except PoolExhaustedError as exc:
            logger.warning("Client %s accepted in session %d but cannot rotate: %s", cid, sid, exc)
            server.store.swap(record, record.append(HistoryEvent(sid, decision, False, ad_id)))
            return SessionTranscript(
                sid, cid, behavior, tuple(session.messages), decision, False, score, ad_id, exc.code
            )
        reference = new_record.client_ref
        session.send(
            cid, SERVER, "reenroll", array_digest(reference.embedding.values, str(reference.ad_id)),
            template=reference,
        )
        commit_rotation(server.store, record, new_record, server.ledger)
        client.se_state = new_state
        session.send(SERVER, cid, "ack", text_digest(str(reference.ad_id)))
        return SessionTranscript(sid, cid, behavior, tuple(session.messages), decision, True, score, ad_id)
    except OTBMorphError as exc:
        exc.transcript = SessionTranscript(
            sid, cid, behavior, tuple(session.messages), None, False, None, ad_id, exc.code
        )
        raise
