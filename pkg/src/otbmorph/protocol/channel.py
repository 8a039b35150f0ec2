"""
In-process client/server channel with eavesdrop taps.

Messages are delivered in order; every tap sees each message and, for
template submissions, the transmitted template itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Optional

from otbmorph.tools.types import Decision
from otbmorph.transforms.protect import ProtectedTemplate

logger = logging.getLogger(__name__)

MESSAGE_TYPES = ("request", "challenge", "template", "decision", "reenroll", "ack")

Tap = Callable[["Message", Optional[ProtectedTemplate]], None]


@dataclass(frozen=True)
class Message:
    session_id: int
    seq: int
    sender: str
    recipient: str
    type: str
    payload_digest: str
    score: Optional[float] = None
    decision: Optional[Decision] = None

    def __post_init__(self) -> None:
        if self.type not in MESSAGE_TYPES:
            raise ValueError(f"Unknown message type {self.type!r}")

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "session_id": self.session_id,
            "seq": self.seq,
            "from": self.sender,
            "to": self.recipient,
            "type": self.type,
            "payload_digest": self.payload_digest,
        }
        if self.score is not None:
            record["score"] = float(self.score)
        if self.decision is not None:
            record["decision"] = self.decision.value
        return record


class Channel:
    """Ordered message queue shared by one server and its clients."""

    def __init__(self) -> None:
        self._taps: list[Tap] = []

    def add_tap(self, tap: Tap) -> None:
        self._taps.append(tap)

    def remove_tap(self, tap: Tap) -> None:
        self._taps.remove(tap)

    def send(self, message: Message, template: Optional[ProtectedTemplate] = None) -> Message:
        logger.debug("%s -> %s %s #%d", message.sender, message.recipient, message.type, message.seq)
        for tap in self._taps:
            tap(message, template)
        return message
