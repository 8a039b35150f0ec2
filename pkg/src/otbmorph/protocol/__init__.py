"""
The three-party one-time morph protocol.

Main exports:
- PseudonymSet, SecureElementState, ServerRecord, HistoryEvent
- ttp_issue, ttp_replenish, provision_client
- enroll, verify_step1, verify_step2, commit_rotation, run_session
- ProtocolServer, ClientDevice, SessionTranscript, ServerStore, Channel
"""

from .channel import Channel, Message
from .session import (
    ClientDevice,
    ProtocolServer,
    Session,
    SessionTranscript,
    commit_rotation,
    decide,
    enroll,
    run_session,
    verify_step1,
    verify_step2,
)
from .state import HistoryEvent, PseudonymSet, SecureElementState, ServerRecord
from .store import ServerStore
from .ttp import provision_client, ttp_issue, ttp_replenish

__all__ = [
    "Channel",
    "ClientDevice",
    "HistoryEvent",
    "Message",
    "ProtocolServer",
    "PseudonymSet",
    "SecureElementState",
    "ServerRecord",
    "ServerStore",
    "Session",
    "SessionTranscript",
    "commit_rotation",
    "decide",
    "enroll",
    "provision_client",
    "run_session",
    "ttp_issue",
    "ttp_replenish",
    "verify_step1",
    "verify_step2",
]
