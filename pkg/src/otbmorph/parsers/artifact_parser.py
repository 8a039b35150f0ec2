"""
Readers for the artifacts a run writes: reports, attack traces, score
stores, embeddings, session transcripts and the issued-pseudonym registry.

Every reader raises ``ArtifactError`` (with the path) on a file that
exists but is malformed, and ``FileNotFoundError`` when it is missing.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
import pyarrow.parquet as pq

from otbmorph.adversary.hill_climb import AttackTrace, TraceEntry
from otbmorph.errors import ArtifactError, OTBMorphError
from otbmorph.evaluation.metrics import OperatingPoint, ScoreSet
from otbmorph.evaluation.report import LOW_SAMPLE, REPORT_COLUMNS, REPORT_SCHEMA, EvalReport, ScenarioSummary
from otbmorph.features.embedding import Embedding
from otbmorph.tools.types import Scenario
from otbmorph.transforms.auxiliary import ADLedger
from otbmorph.writers.csv_writer import TRACE_COLUMNS

logger = logging.getLogger(__name__)


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"Artifact not found: {path}")
    return path


def _read_json(path: Path) -> Any:
    try:
        return json.loads(_require(path).read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"invalid JSON at line {exc.lineno}: {exc.msg}", path) from exc


def _read_csv(path: Path, columns: list[str], **kwargs: Any) -> pd.DataFrame:
    try:
        frame = pd.read_csv(_require(path), **kwargs)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ArtifactError(f"unreadable CSV: {exc}", path) from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ArtifactError(f"missing columns {missing}", path)
    return frame


def _number(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def read_report(out_dir: str | Path) -> EvalReport:
    """Rebuild an EvalReport from ``report.csv`` and ``report.json``."""
    out = Path(out_dir)
    meta_path = out / "report.json"
    meta = _read_json(meta_path)
    if not isinstance(meta, dict) or meta.get("schema") != REPORT_SCHEMA:
        raise ArtifactError(f"expected schema {REPORT_SCHEMA}", meta_path)
    csv_path = out / "report.csv"
    frame = _read_csv(csv_path, REPORT_COLUMNS, dtype=str, keep_default_na=False)

    point_names = tuple(meta["point_names"])
    summaries: dict[Scenario, ScenarioSummary] = {}
    try:
        for value in meta["scenarios"]:
            scenario = Scenario.parse(value)
            rows = frame[frame["scenario"] == scenario.value]
            cells = {(r.metric, r.operating_point): (_number(r.value), r.flag) for r in rows.itertuples()}

            def cell(metric: str, point: str) -> Optional[float]:
                return cells.get((metric, point), (None, ""))[0]

            points = {}
            asr = {}
            for name in point_names:
                threshold, far, frr = cell("threshold", name), cell("far", name), cell("frr", name)
                if threshold is not None and far is not None and frr is not None:
                    low = cells[("threshold", name)][1] == LOW_SAMPLE
                    points[name] = OperatingPoint(name, threshold, far, frr, low)
                if (name in points) or cell("asr", name) is not None:
                    asr[name] = cell("asr", name)
            summaries[scenario] = ScenarioSummary(
                scenario=scenario,
                eer=cell("eer", "EER"),
                points=points,
                asr=asr,
                decidability=cell("decidability", ""),
                n_genuine=int(cell("count", "genuine") or 0),
                n_impostor=int(cell("count", "impostor") or 0),
                n_traces=int(cell("count", "traces") or 0),
            )
    except (KeyError, ValueError) as exc:
        raise ArtifactError(f"inconsistent report: {exc}", csv_path) from exc
    return EvalReport(summaries, point_names, meta.get("metadata", {}))


def read_trace(path: str | Path) -> AttackTrace:
    """Read a trace CSV and its JSON sidecar."""
    csv_path = Path(path)
    frame = _read_csv(csv_path, TRACE_COLUMNS, float_precision="round_trip", keep_default_na=False)
    side_path = csv_path.with_suffix(".json")
    side = _read_json(side_path)
    digests = side.get("digests", [])
    if len(digests) != len(frame):
        raise ArtifactError(f"sidecar has {len(digests)} digests for {len(frame)} rows", side_path)
    try:
        entries = tuple(
            TraceEntry(int(i), str(d), float(s))
            for i, d, s in zip(frame["iteration"], digests, frame["best_score"])
        )
        scenario = side.get("scenario")
        return AttackTrace(
            iterations=entries,
            thresholds={k: float(v) for k, v in side.get("thresholds", {}).items()},
            success_at={k: int(v) for k, v in side.get("success_at", {}).items()},
            seed=int(side.get("seed", 0)),
            scenario=Scenario.parse(scenario) if scenario else None,
            truncated=bool(side.get("truncated", False)),
            queries=int(side.get("queries", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ArtifactError(f"invalid trace: {exc}", csv_path) from exc


def read_traces(directory: str | Path) -> list[AttackTrace]:
    """Every ``seed-*.csv`` trace under ``directory``, ordered by seed."""
    traces = [read_trace(p) for p in sorted(Path(directory).glob("seed-*.csv"))]
    return sorted(traces, key=lambda t: t.seed)


def read_scores(path: str | Path) -> tuple[ScoreSet, np.ndarray]:
    """
    Read a Parquet score store.

    Returns:
        The score set and the cross-key scores (empty when not collected)
    """
    path = _require(Path(path))
    try:
        table = pq.read_table(path)
    except Exception as exc:  # pyarrow raises several unrelated types
        raise ArtifactError(f"unreadable Parquet file: {exc}", path) from exc
    meta = table.schema.metadata or {}
    frame = table.to_pandas()

    def kind(name: str) -> np.ndarray:
        part = frame[frame["kind"] == name].sort_values("trial")
        return part["score"].to_numpy(dtype=np.float64)

    scenario = meta.get(b"scenario", b"").decode() or None
    scores = ScoreSet(
        genuine=kind("genuine"),
        impostor=kind("impostor"),
        scenario=scenario,
        dataset_tag=meta.get(b"dataset_tag", b"synthetic").decode(),
    )
    return scores, kind("cross_key")


def read_embeddings(path: str | Path) -> list[tuple[int, int, Embedding]]:
    """Rows of ``subject,sample,dim0..`` as (subject, sample, Embedding)."""
    frame = _read_csv(Path(path), ["subject", "sample"], float_precision="round_trip")
    dims = [c for c in frame.columns if c.startswith("dim")]
    values = frame[dims].to_numpy(dtype=np.float64)
    return [
        (int(subject), int(sample), Embedding(values[i], normalized=False))
        for i, (subject, sample) in enumerate(zip(frame["subject"], frame["sample"]))
    ]


def read_transcripts(path: str | Path) -> list[dict[str, Any]]:
    """Message records of a JSON-lines transcript file."""
    path = _require(Path(path))
    records = []
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ArtifactError(f"invalid JSON at line {line_no}: {exc.msg}", path) from exc
    return records


INDEX_KEYS = ("pseudonym_id", "issued_to", "ad_id", "ad_path")


def read_pseudonym_index(path: str | Path) -> list[dict[str, str]]:
    """Entries of an ``ads/pseudonyms.json`` index, in issue order."""
    path = Path(path)
    entries = _read_json(path)
    if not isinstance(entries, list):
        raise ArtifactError("pseudonym index must be a JSON list", path)
    for n, entry in enumerate(entries):
        missing = [k for k in INDEX_KEYS if not isinstance(entry, dict) or k not in entry]
        if missing:
            raise ArtifactError(f"entry {n} lacks {missing}", path)
    return entries


def read_ad_ledger(path: str | Path) -> ADLedger:
    path = Path(path)
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ArtifactError("AD ledger must be a JSON object", path)
    try:
        return ADLedger.from_dict(data)
    except OTBMorphError as exc:
        raise ArtifactError(exc.message, path) from exc

def score_fingerprint(path: str | Path) -> str:
    """Settings fingerprint stored with a score store ("" when absent)."""
    path = _require(Path(path))
    try:
        meta = pq.read_schema(path).metadata or {}
    except Exception as exc:  # pyarrow raises several unrelated types
        raise ArtifactError(f"unreadable Parquet file: {exc}", path) from exc
    return meta.get(b"fingerprint", b"").decode()
