"""
Protocol state: pseudonym sets, the client's secure element and the
server's per-client record.

All three are immutable; every protocol step returns new values, so a step
that fails or rejects leaves the caller's state untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from otbmorph.errors import EnrollmentUnavailableError, ProtocolStateError
from otbmorph.features.embedding import DissimilarityScore
from otbmorph.tools.types import ADKind, Decision, Scenario
from otbmorph.transforms.auxiliary import AuxiliaryData
from otbmorph.transforms.protect import ProtectedTemplate


@dataclass(frozen=True)
class PseudonymSet:
    """
    A TTP-issued one-time identity bundled with a fresh random-face AD.

    Attributes:
        pseudonym_id: Opaque token
        ad: Random-face auxiliary data
        issued_to: Client id
        consumed: Whether the pseudonym has been used
    """

    pseudonym_id: str
    ad: AuxiliaryData
    issued_to: str
    consumed: bool = False

    def __post_init__(self) -> None:
        self.ad.require(ADKind.RANDOM_FACE)

    def consume(self) -> PseudonymSet:
        if self.consumed:
            raise ProtocolStateError(f"Pseudonym {self.pseudonym_id} already consumed")
        return replace(self, consumed=True)


@dataclass(frozen=True)
class SecureElementState:
    """
    Client-side protected storage.

    Attributes:
        client_id: Owner of the device
        current_ad: AD of the stored reference; None before enrollment
        pseudonym_pool: Unconsumed pseudonym sets, used in order
    """

    client_id: str
    current_ad: Optional[AuxiliaryData] = None
    pseudonym_pool: tuple[PseudonymSet, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "pseudonym_pool", tuple(self.pseudonym_pool))
        if self.current_ad is not None:
            self.current_ad.require(ADKind.RANDOM_FACE)
        for pseudonym in self.pseudonym_pool:
            if pseudonym.consumed:
                raise ProtocolStateError(f"Consumed pseudonym {pseudonym.pseudonym_id} in pool")
            if pseudonym.issued_to != self.client_id:
                raise ProtocolStateError(
                    f"Pseudonym {pseudonym.pseudonym_id} was issued to {pseudonym.issued_to}"
                )

    @property
    def pool_size(self) -> int:
        return len(self.pseudonym_pool)

    def take_pseudonym(self) -> tuple[PseudonymSet, SecureElementState]:
        """Consume the next pseudonym; raises EnrollmentUnavailableError when empty."""
        if not self.pseudonym_pool:
            raise EnrollmentUnavailableError(f"Client {self.client_id} has no unconsumed pseudonyms")
        head, *rest = self.pseudonym_pool
        return head.consume(), replace(self, pseudonym_pool=tuple(rest))

    def with_current(self, ad: AuxiliaryData) -> SecureElementState:
        return replace(self, current_ad=ad)

    def with_pool(self, extra: tuple[PseudonymSet, ...] | list[PseudonymSet]) -> SecureElementState:
        return replace(self, pseudonym_pool=self.pseudonym_pool + tuple(extra))


@dataclass(frozen=True)
class HistoryEvent:
    """
    One audit entry of a server record.

    Only metadata is kept: the replaced reference itself is not retained.
    """

    session_id: int
    decision: Decision
    rotated: bool
    ad_id: Optional[str]
    previous_ad_id: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "decision", Decision(self.decision))
        if self.rotated and self.decision is not Decision.ACCEPT:
            raise ProtocolStateError("Rotation recorded for a rejected session")


@dataclass(frozen=True)
class ServerRecord:
    """
    The server's stored reference for one client.

    Attributes:
        client_id: Client the record belongs to
        client_ref: Current protected reference
        threshold: Accept iff score < threshold
        history: Append-only audit log, strictly ordered by session id
    """

    client_id: str
    client_ref: ProtectedTemplate
    threshold: DissimilarityScore
    history: tuple[HistoryEvent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "threshold", DissimilarityScore(self.threshold))
        object.__setattr__(self, "history", tuple(self.history))
        ids = [event.session_id for event in self.history]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise ProtocolStateError(f"History of {self.client_id} is not strictly ordered: {ids}")

    @property
    def scenario(self) -> Scenario:
        return self.client_ref.scenario

    @property
    def last_session_id(self) -> int:
        return self.history[-1].session_id if self.history else -1

    def append(self, event: HistoryEvent) -> ServerRecord:
        if event.session_id <= self.last_session_id:
            raise ProtocolStateError(
                f"Session {event.session_id} does not follow {self.last_session_id} "
                f"for client {self.client_id}"
            )
        return replace(self, history=self.history + (event,))

    def rotate(self, reference: ProtectedTemplate, event: HistoryEvent) -> ServerRecord:
        if reference.scenario is not self.scenario:
            raise ProtocolStateError(
                f"Reference scenario changed from {self.scenario.value} to {reference.scenario.value}"
            )
        return replace(self.append(event), client_ref=reference)
