"""
CSV exports built with pandas: embeddings, attack traces, histograms,
DET curves and report tables.

Floats are written at full precision and read back with
``float_precision="round_trip"``.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
import pandas as pd

from .atomic import atomic_path
from .json_writer import write_json

if TYPE_CHECKING:
    from otbmorph.adversary.hill_climb import AttackTrace
    from otbmorph.evaluation.metrics import DetCurve, Histogram
    from otbmorph.features.embedding import Embedding
    from otbmorph.tools.types import Scenario

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["seed", "scenario", "iteration", "best_score"]
HISTOGRAM_COLUMNS = ["scenario", "kind", "bin_left", "bin_right", "count"]
DET_COLUMNS = ["scenario", "threshold", "far", "frr"]


def write_frame(frame: pd.DataFrame, path: str | Path) -> Path:
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, index=False, lineterminator="\n")
    logger.debug("Wrote %d rows to %s", len(frame), path)
    return Path(path)


def embeddings_frame(rows: Iterable[tuple[int, int, Embedding]]) -> pd.DataFrame:
    records = []
    for subject, sample, embedding in rows:
        record = {"subject": subject, "sample": sample}
        record.update({f"dim{i}": float(v) for i, v in enumerate(embedding.values)})
        records.append(record)
    return pd.DataFrame.from_records(records)


def write_embeddings(rows: Iterable[tuple[int, int, Embedding]], path: str | Path) -> Path:
    """One embedding per row: ``subject,sample,dim0..dimN``."""
    return write_frame(embeddings_frame(rows), path)


def trace_frame(trace: AttackTrace) -> pd.DataFrame:
    scenario = trace.scenario.value if trace.scenario else ""
    return pd.DataFrame(
        {
            "seed": [trace.seed] * len(trace.iterations),
            "scenario": [scenario] * len(trace.iterations),
            "iteration": [e.index for e in trace.iterations],
            "best_score": [e.score for e in trace.iterations],
        },
        columns=TRACE_COLUMNS,
    )


def trace_sidecar(trace: AttackTrace) -> dict:
    return {
        "seed": trace.seed,
        "scenario": trace.scenario.value if trace.scenario else None,
        "thresholds": dict(trace.thresholds),
        "success_at": dict(trace.success_at),
        "truncated": trace.truncated,
        "queries": trace.queries,
        "digests": [e.digest for e in trace.iterations],
    }


def write_trace(trace: AttackTrace, path: str | Path) -> tuple[Path, Path]:
    """Write ``<name>.csv`` and its ``<name>.json`` sidecar."""
    csv_path = Path(path)
    sidecar = csv_path.with_suffix(".json")
    write_frame(trace_frame(trace), csv_path)
    write_json(trace_sidecar(trace), sidecar)
    return csv_path, sidecar


def histogram_frame(histograms: dict[Scenario, Histogram]) -> pd.DataFrame:
    records = []
    for scenario, hist in histograms.items():
        for kind, counts in (("genuine", hist.genuine), ("impostor", hist.impostor)):
            for i, count in enumerate(counts):
                records.append(
                    (scenario.value, kind, float(hist.edges[i]), float(hist.edges[i + 1]), int(count))
                )
    return pd.DataFrame.from_records(records, columns=HISTOGRAM_COLUMNS)


def det_frame(curves: dict[Scenario, DetCurve]) -> pd.DataFrame:
    frames = [
        pd.DataFrame(
            {
                "scenario": [scenario.value] * len(curve.thresholds),
                "threshold": np.asarray(curve.thresholds, dtype=np.float64),
                "far": np.asarray(curve.far, dtype=np.float64),
                "frr": np.asarray(curve.frr, dtype=np.float64),
            },
            columns=DET_COLUMNS,
        )
        for scenario, curve in curves.items()
    ]
    if not frames:
        return pd.DataFrame(columns=DET_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def write_rows(rows: Sequence[dict], columns: Sequence[str], path: str | Path) -> Path:
    return write_frame(pd.DataFrame.from_records(list(rows), columns=list(columns)), path)
