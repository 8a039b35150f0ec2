"""
Verification performance, attack success and report export.

Main exports:
- ScoreSet, OperatingPoint
- compute_far_frr, compute_eer, threshold_at_far, compute_asr
- det_curve, decidability, unlinkability_ks, histogram
- CalibrationSettings, calibrate
- EvalReport, build_report, export_report
"""

from .metrics import (
    OperatingPoint,
    ScoreSet,
    compute_asr,
    compute_eer,
    compute_far_frr,
    decidability,
    det_curve,
    histogram,
    operating_points,
    threshold_at_far,
    unlinkability_ks,
)
from .calibration import CalibrationResult, CalibrationSettings, ScenarioScorer, calibrate
from .report import EvalReport, ScenarioSummary, build_report, export_report

__all__ = [
    "CalibrationResult",
    "CalibrationSettings",
    "EvalReport",
    "OperatingPoint",
    "ScenarioScorer",
    "ScenarioSummary",
    "ScoreSet",
    "build_report",
    "calibrate",
    "compute_asr",
    "compute_eer",
    "compute_far_frr",
    "decidability",
    "det_curve",
    "export_report",
    "histogram",
    "operating_points",
    "threshold_at_far",
    "unlinkability_ks",
]
