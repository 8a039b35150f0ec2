"""
Parquet score stores, one file per scenario.

The scenario, dataset tag and settings fingerprint travel in the schema
metadata.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import numpy as np
import pyarrow as pa
import pyarrow.parquet as pq

from .atomic import atomic_path
from .schemas import SCORE_SCHEMA

if TYPE_CHECKING:
    from otbmorph.evaluation.metrics import ScoreSet

logger = logging.getLogger(__name__)


def scores_table(
    scores: ScoreSet, cross_key: Optional[np.ndarray] = None, fingerprint: str = ""
) -> pa.Table:
    parts = [("genuine", scores.genuine), ("impostor", scores.impostor)]
    if cross_key is not None and len(cross_key):
        parts.append(("cross_key", np.asarray(cross_key, dtype=np.float64)))
    trials: list[int] = []
    kinds: list[str] = []
    values: list[float] = []
    for kind, arr in parts:
        trials.extend(range(len(arr)))
        kinds.extend([kind] * len(arr))
        values.extend(float(v) for v in arr)
    metadata = {
        b"scenario": (scores.scenario.value if scores.scenario else "").encode(),
        b"dataset_tag": scores.dataset_tag.encode(),
        b"fingerprint": fingerprint.encode(),
    }
    schema = SCORE_SCHEMA.with_metadata(metadata)
    return pa.Table.from_pydict({"trial": trials, "kind": kinds, "score": values}, schema=schema)


def write_scores(
    scores: ScoreSet,
    path: str | Path,
    cross_key: Optional[np.ndarray] = None,
    fingerprint: str = "",
) -> Path:
    """
    Write a score set (and optional cross-key scores) to Parquet.

    ``fingerprint`` identifies the settings the scores were collected
    under, so stale stores can be detected.
    """
    table = scores_table(scores, cross_key, fingerprint)
    with atomic_path(path) as tmp:
        pq.write_table(table, tmp)
    logger.info("Wrote %d scores to %s", table.num_rows, path)
    return Path(path)
