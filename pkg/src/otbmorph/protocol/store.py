"""
Server record store: an in-memory map persisted as one JSON file.

Embeddings are written as repr floats, so save/load round-trips
bit-exactly.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from otbmorph.errors import ParseError, ProtocolStateError
from otbmorph.features.embedding import Embedding
from otbmorph.tools.types import Decision, Scenario
from otbmorph.transforms.protect import ProtectedTemplate
from otbmorph.writers.json_writer import write_json

from .state import HistoryEvent, ServerRecord

logger = logging.getLogger(__name__)

STORE_SCHEMA = "otb-morph-store/1"


def template_to_dict(template: ProtectedTemplate) -> dict[str, Any]:
    return {
        "scenario": template.scenario.value,
        "ad_id": template.ad_id,
        "normalized": template.embedding.normalized,
        "values": [float(v) for v in template.embedding.values],
    }


def template_from_dict(data: dict[str, Any]) -> ProtectedTemplate:
    embedding = Embedding(np.array(data["values"], dtype=np.float64), bool(data["normalized"]))
    return ProtectedTemplate(embedding, Scenario.parse(data["scenario"]), data.get("ad_id"))


def record_to_dict(record: ServerRecord) -> dict[str, Any]:
    return {
        "threshold": float(record.threshold),
        "reference": template_to_dict(record.client_ref),
        "history": [
            {
                "session_id": e.session_id,
                "decision": e.decision.value,
                "rotated": e.rotated,
                "ad_id": e.ad_id,
                "previous_ad_id": e.previous_ad_id,
            }
            for e in record.history
        ],
    }


def record_from_dict(client_id: str, data: dict[str, Any]) -> ServerRecord:
    history = tuple(
        HistoryEvent(
            session_id=int(e["session_id"]),
            decision=Decision(e["decision"]),
            rotated=bool(e["rotated"]),
            ad_id=e.get("ad_id"),
            previous_ad_id=e.get("previous_ad_id"),
        )
        for e in data.get("history", [])
    )
    return ServerRecord(client_id, template_from_dict(data["reference"]), data["threshold"], history)


class ServerStore:
    """
    Records keyed by client id. ``swap`` is an atomic compare-and-replace, so
    two sessions of one client cannot both commit against the same record.
    """

    def __init__(self) -> None:
        self._records: dict[str, ServerRecord] = {}
        self._lock = threading.Lock()

    def __contains__(self, client_id: object) -> bool:
        with self._lock:
            return client_id in self._records

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def __iter__(self) -> Iterator[str]:
        with self._lock:
            return iter(sorted(self._records))

    def get(self, client_id: str) -> ServerRecord:
        with self._lock:
            record = self._records.get(client_id)
        if record is None:
            raise ProtocolStateError(f"No server record for client {client_id}")
        return record

    def put(self, record: ServerRecord) -> None:
        with self._lock:
            self._records[record.client_id] = record

    def swap(self, expected: ServerRecord, updated: ServerRecord) -> None:
        """
        Replace ``expected`` with ``updated`` if it is still the stored record.

        Raises:
            ProtocolStateError: the record changed since ``expected`` was read
        """
        if updated.client_id != expected.client_id:
            raise ProtocolStateError(
                f"Record of {updated.client_id} cannot replace record of {expected.client_id}"
            )
        with self._lock:
            if self._records.get(expected.client_id) is not expected:
                raise ProtocolStateError(
                    f"Record of {expected.client_id} changed during the session; update discarded"
                )
            self._records[expected.client_id] = updated

    def to_dict(self) -> dict[str, Any]:
        with self._lock:
            return {
                "schema": STORE_SCHEMA,
                "clients": {cid: record_to_dict(self._records[cid]) for cid in sorted(self._records)},
            }

    @classmethod
    def from_dict(cls, data: dict[str, Any], path: str | Path | None = None) -> ServerStore:
        if not isinstance(data, dict) or data.get("schema") != STORE_SCHEMA:
            found = data.get("schema") if isinstance(data, dict) else type(data).__name__
            raise ParseError(f"expected schema {STORE_SCHEMA!r}, got {found!r}", path)
        store = cls()
        for client_id, record in data.get("clients", {}).items():
            try:
                store.put(record_from_dict(client_id, record))
            except (KeyError, TypeError) as exc:
                raise ParseError(f"malformed record for {client_id}: {exc!r}", path) from exc
        return store

    def save(self, path: str | Path) -> Path:
        out = write_json(self.to_dict(), path)
        logger.info("Saved %d server records to %s", len(self), out)
        return out

    @classmethod
    def load(cls, path: str | Path) -> ServerStore:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Server store not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, path, line=exc.lineno) from exc
        return cls.from_dict(data, path)
