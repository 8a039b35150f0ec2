"""
Evaluation report: per-scenario EER, operating points and attack success.

Exports a long-format CSV (``scenario,metric,operating_point,value,flag``),
a wide table with one row per scenario, a JSON sidecar with metadata, and
plot-ready histogram and DET CSVs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import pandas as pd

from otbmorph.adversary.hill_climb import AttackTrace
from otbmorph.errors import InsufficientDataError
from otbmorph.tools.types import EER_POINT, Scenario, far_point
from otbmorph.writers.csv_writer import det_frame, histogram_frame, write_frame, write_rows
from otbmorph.writers.json_writer import write_json

from .metrics import (
    OperatingPoint,
    ScoreSet,
    compute_asr,
    decidability,
    det_curve,
    histogram,
    operating_points,
)

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "otb-morph-report/1"
REPORT_COLUMNS = ["scenario", "metric", "operating_point", "value", "flag"]

NOT_MEASURED = "not-measured"
LOW_SAMPLE = "low-sample"
NO_ANCHOR = "no-anchor"

# Cells with no published comparison value.
NO_ANCHOR_CELLS = {(Scenario.OTB_MORPH, far_point(0.1))}


@dataclass(frozen=True)
class ScenarioSummary:
    """
    Metrics of one scenario; None marks a value that was not measured.
    """

    scenario: Scenario
    eer: Optional[float] = None
    points: Mapping[str, OperatingPoint] = field(default_factory=dict)
    asr: Mapping[str, Optional[float]] = field(default_factory=dict)
    decidability: Optional[float] = None
    n_genuine: int = 0
    n_impostor: int = 0
    n_traces: int = 0


@dataclass(frozen=True)
class EvalReport:
    """
    Attributes:
        scenarios: Summary per scenario, in report order
        point_names: Operating points reported for every scenario
        metadata: Seeds, world configuration and other run context
    """

    scenarios: Mapping[Scenario, ScenarioSummary]
    point_names: tuple[str, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)


def summarize(
    scenario: Scenario,
    scores: Optional[ScoreSet],
    traces: Sequence[AttackTrace],
    far_targets: Sequence[float],
) -> ScenarioSummary:
    """Metrics of one scenario from whatever inputs exist."""
    if scores is None:
        return ScenarioSummary(scenario, n_traces=len(traces))
    points = operating_points(scores, far_targets)
    asr = {name: (compute_asr(traces, point) if traces else None) for name, point in points.items()}
    eer_point = points[EER_POINT]
    return ScenarioSummary(
        scenario=scenario,
        eer=(eer_point.far + eer_point.frr) / 2.0,
        points=points,
        asr=asr,
        decidability=decidability(scores),
        n_genuine=int(scores.genuine.size),
        n_impostor=int(scores.impostor.size),
        n_traces=len(traces),
    )


def build_report(
    scenarios: Sequence[Scenario],
    score_sets: Mapping[Scenario, ScoreSet],
    traces: Mapping[Scenario, Sequence[AttackTrace]],
    far_targets: Sequence[float],
    metadata: Optional[Mapping[str, Any]] = None,
) -> EvalReport:
    summaries = {}
    for scenario in scenarios:
        scenario = Scenario.parse(scenario)
        summary = summarize(scenario, score_sets.get(scenario), traces.get(scenario, ()), far_targets)
        if summary.eer is None:
            logger.warning("No scores for scenario %s; reported as not measured", scenario.value)
        summaries[scenario] = summary
    point_names = (EER_POINT,) + tuple(far_point(t) for t in far_targets)
    return EvalReport(summaries, point_names, dict(metadata or {}))


def _value(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _row(scenario: Scenario, metric: str, point: str, value: Optional[float], flag: str = "") -> dict:
    if value is None and not flag:
        flag = NOT_MEASURED
    return {
        "scenario": scenario.value,
        "metric": metric,
        "operating_point": point,
        "value": _value(value),
        "flag": flag,
    }


def report_rows(report: EvalReport) -> list[dict]:
    rows = []
    for scenario, summary in report.scenarios.items():
        rows.append(_row(scenario, "eer", EER_POINT, summary.eer))
        for name in report.point_names:
            point = summary.points.get(name)
            rate_flag = LOW_SAMPLE if point is not None and point.low_sample else ""
            rows.append(_row(scenario, "threshold", name, point.threshold if point else None, rate_flag))
            rows.append(_row(scenario, "far", name, point.far if point else None, rate_flag))
            rows.append(_row(scenario, "frr", name, point.frr if point else None, rate_flag))
            asr = summary.asr.get(name)
            asr_flag = NO_ANCHOR if asr is not None and (scenario, name) in NO_ANCHOR_CELLS else ""
            rows.append(_row(scenario, "asr", name, asr, asr_flag))
        rows.append(_row(scenario, "decidability", "", summary.decidability))
        rows.append(_row(scenario, "count", "genuine", float(summary.n_genuine)))
        rows.append(_row(scenario, "count", "impostor", float(summary.n_impostor)))
        rows.append(_row(scenario, "count", "traces", float(summary.n_traces)))
    return rows


def table_frame(report: EvalReport) -> pd.DataFrame:
    """One row per scenario: EER and ASR at EER, then FRR and ASR per FAR point."""
    records = []
    for scenario, summary in report.scenarios.items():
        record: dict[str, Any] = {"scenario": scenario.value, "EER": summary.eer}
        for name in report.point_names:
            point = summary.points.get(name)
            if name != EER_POINT:
                record[f"FRR@{name}"] = point.frr if point else None
            record[f"ASR@{name}"] = summary.asr.get(name)
        records.append(record)
    return pd.DataFrame.from_records(records)


def sidecar(report: EvalReport) -> dict[str, Any]:
    return {
        "schema": REPORT_SCHEMA,
        "scenarios": [s.value for s in report.scenarios],
        "point_names": list(report.point_names),
        "metadata": dict(report.metadata),
    }


def export_report(
    report: EvalReport,
    out_dir: str | Path,
    score_sets: Optional[Mapping[Scenario, ScoreSet]] = None,
    bins: int = 30,
) -> dict[str, Path]:
    """
    Write the report files into ``out_dir``.

    Returns:
        Artifact name to path: report, table, metadata and, when scores are
        given, histograms and det

    Raises:
        InsufficientDataError: the report has no scenarios
        ArtifactError: a file could not be written
    """
    if not report.scenarios:
        raise InsufficientDataError("Report has no scenarios")
    out = Path(out_dir)
    paths = {
        "report": write_rows(report_rows(report), REPORT_COLUMNS, out / "report.csv"),
        "table": write_frame(table_frame(report), out / "table.csv"),
        "metadata": write_json(sidecar(report), out / "report.json"),
    }
    if score_sets:
        measured = {s: score_sets[s] for s in report.scenarios if s in score_sets}
        paths["histograms"] = write_frame(
            histogram_frame({s: histogram(scores, bins) for s, scores in measured.items()}),
            out / "histograms.csv",
        )
        paths["det"] = write_frame(
            det_frame({s: det_curve(scores) for s, scores in measured.items()}), out / "det.csv"
        )
    logger.info("Wrote evaluation report for %d scenarios to %s", len(report.scenarios), out)
    return paths
