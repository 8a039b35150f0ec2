"""
Tests for metrics, calibration and report export.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from otbmorph.adversary import AttackTrace, TraceEntry
from otbmorph.errors import ConfigurationError, InsufficientDataError
from otbmorph.evaluation import (
    CalibrationSettings,
    ScoreSet,
    build_report,
    calibrate,
    compute_asr,
    compute_eer,
    compute_far_frr,
    decidability,
    det_curve,
    export_report,
    histogram,
    operating_points,
    threshold_at_far,
    unlinkability_ks,
)
from otbmorph.evaluation.metrics import OperatingPoint, candidate_thresholds, eer_point
from otbmorph.evaluation.report import LOW_SAMPLE, NO_ANCHOR, NOT_MEASURED, report_rows, table_frame
from otbmorph.parsers.artifact_parser import read_report
from otbmorph.tools.seeds import SeedTree
from otbmorph.tools.types import EER_POINT, FAR_TARGETS, Scenario


def random_scores(seed, n_gen=100, n_imp=100):
    rng = np.random.default_rng(seed)
    return ScoreSet(np.abs(rng.normal(0.6, 0.2, n_gen)), np.abs(rng.normal(1.0, 0.2, n_imp)))


def brute_force_eer(scores):
    """Scan every candidate with loops and exact fractions; lowest threshold wins ties."""
    best = None
    for t in sorted(candidate_thresholds(scores)):
        far = Fraction(sum(1 for s in scores.impostor if s < t), len(scores.impostor))
        frr = Fraction(sum(1 for s in scores.genuine if s >= t), len(scores.genuine))
        gap = abs(far - frr)
        if best is None or gap < best[0]:
            best = (gap, float((far + frr) / 2), float(t))
    return best[1], best[2]


def brute_force_threshold(scores, target):
    """Largest candidate threshold whose impostor count stays within the target."""
    n = len(scores.impostor)
    allowed = math.floor(target * n + 1e-9)
    candidates = list(np.unique(scores.impostor)) + [np.nextafter(max(scores.impostor), np.inf)]
    return max(float(c) for c in candidates if sum(1 for s in scores.impostor if s < c) <= allowed)


def trace(scores, seed=0):
    return AttackTrace(tuple(TraceEntry(i, f"d{i}", s) for i, s in enumerate(scores)), seed=seed)


class TestFarFrr:
    """Tests for compute_far_frr."""

    def test_perfect_separation(self):
        scores = ScoreSet([0.1, 0.2], [0.8, 0.9])
        assert compute_far_frr(scores, 0.5) == (0.0, 0.0)

    def test_threshold_below_everything(self):
        scores = ScoreSet([0.1, 0.2], [0.8, 0.9])
        assert compute_far_frr(scores, 0.05) == (0.0, 1.0)

    def test_strict_acceptance(self):
        scores = ScoreSet([0.5], [0.5])
        assert compute_far_frr(scores, 0.5) == (0.0, 1.0)

    def test_matches_counting_oracle(self):
        scores = random_scores(0, 1000, 1000)
        for t in np.linspace(0.0, 1.6, 33):
            far = sum(1 for s in scores.impostor if s < t) / 1000
            frr = sum(1 for s in scores.genuine if s >= t) / 1000
            assert compute_far_frr(scores, t) == (far, frr)

    def test_monotone_in_threshold(self):
        scores = random_scores(1)
        rates = [compute_far_frr(scores, t) for t in np.linspace(1.5, 0.0, 50)]
        fars, frrs = zip(*rates)
        assert all(b <= a for a, b in zip(fars, fars[1:]))
        assert all(b >= a for a, b in zip(frrs, frrs[1:]))

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            compute_far_frr(ScoreSet([], [0.5]), 0.5)

    def test_negative_scores_rejected(self):
        with pytest.raises(ValueError):
            ScoreSet([-0.1], [0.5])


class TestEer:
    """Tests for compute_eer."""

    def test_separated(self):
        eer, threshold = compute_eer(ScoreSet([0.1, 0.2], [0.8, 0.9]))
        assert eer == 0.0
        assert 0.2 < threshold <= 0.8

    def test_identical_lists(self):
        values = [0.3, 0.5, 0.7, 0.9]
        eer, _ = compute_eer(ScoreSet(values, values))
        assert eer == 0.5

    def test_matches_brute_force(self):
        for seed in range(50):
            scores = random_scores(seed, 60 + seed, 80)
            eer, threshold = compute_eer(scores)
            expected_eer, expected_threshold = brute_force_eer(scores)
            assert eer == pytest.approx(expected_eer, abs=1e-12)
            assert threshold == expected_threshold

    def test_granularity_bound(self):
        for seed in range(20):
            scores = random_scores(seed, 40, 70)
            point = eer_point(scores)
            assert abs(point.far - point.frr) <= 1.0 / 40 + 1e-12

    def test_permutation_invariant(self):
        scores = random_scores(3)
        rng = np.random.default_rng(0)
        shuffled = ScoreSet(rng.permutation(scores.genuine), rng.permutation(scores.impostor))
        assert compute_eer(shuffled) == compute_eer(scores)
        assert decidability(shuffled) == pytest.approx(decidability(scores), rel=1e-12)


class TestThresholdAtFar:
    """Tests for threshold_at_far."""

    def test_admits_exactly_one(self):
        impostor = [0.5 + 0.1 * i for i in range(10)]
        point = threshold_at_far(ScoreSet([0.2], impostor), 0.1)
        assert sum(1 for s in impostor if s < point.threshold) == 1
        assert point.far == 0.1
        assert not point.low_sample

    def test_target_one(self):
        scores = ScoreSet([0.2, 2.0], [0.5, 0.9])
        point = threshold_at_far(scores, 1.0)
        assert point.threshold > 0.9
        assert point.far == 1.0
        assert point.frr == 0.5

    def test_low_sample_flag(self):
        point = threshold_at_far(ScoreSet([0.2], [0.5, 0.9, 1.0]), 0.01)
        assert point.low_sample
        assert point.far == 0.0

    def test_matches_brute_force(self):
        for seed in range(50):
            scores = random_scores(seed, 30, 200)
            for target in FAR_TARGETS:
                assert threshold_at_far(scores, target).threshold == brute_force_threshold(scores, target)

    def test_far_never_exceeds_target(self):
        scores = random_scores(9, 50, 1000)
        for target in (0.5, 0.1, 0.01, 0.001):
            assert threshold_at_far(scores, target).far <= target

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            threshold_at_far(random_scores(0), 0.0)

    def test_operating_points(self):
        points = operating_points(random_scores(2, 50, 1000), FAR_TARGETS)
        assert list(points) == [EER_POINT, "FAR=0.1", "FAR=0.01", "FAR=0.001"]
        thresholds = [points[name].threshold for name in ("FAR=0.1", "FAR=0.01", "FAR=0.001")]
        assert thresholds == sorted(thresholds, reverse=True)


class TestAsr:
    """Tests for compute_asr."""

    def test_counting(self):
        point = OperatingPoint(EER_POINT, 0.5, 0.1, 0.1)
        traces = [trace([0.9, 0.4]) for _ in range(8)] + [trace([0.9, 0.6]) for _ in range(2)]
        assert compute_asr(traces, point) == 0.8

    def test_no_crossing(self):
        point = OperatingPoint(EER_POINT, 0.1, 0.1, 0.1)
        assert compute_asr([trace([0.9, 0.5])], point) == 0.0

    def test_crossing_is_strict(self):
        point = OperatingPoint(EER_POINT, 0.5, 0.1, 0.1)
        assert compute_asr([trace([0.9, 0.5])], point) == 0.0

    def test_dominance(self):
        rng = np.random.default_rng(4)
        point = OperatingPoint(EER_POINT, 0.5, 0.1, 0.1)
        finals = rng.uniform(0.2, 1.0, 30)
        higher = [trace([1.5, f]) for f in finals]
        lower = [trace([1.5, f * 0.8]) for f in finals]
        assert compute_asr(lower, point) >= compute_asr(higher, point)
        assert compute_asr(list(reversed(lower)), point) == compute_asr(lower, point)

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            compute_asr([], OperatingPoint(EER_POINT, 0.5, 0.1, 0.1))


class TestDistributions:
    """Tests for DET, histogram and the unlinkability test."""

    def test_det_curve(self):
        scores = random_scores(5)
        curve = det_curve(scores)
        assert np.all(np.diff(curve.far) >= 0)
        assert np.all(np.diff(curve.frr) <= 0)

    def test_histogram_counts(self):
        scores = random_scores(6, 70, 90)
        hist = histogram(scores, bins=12)
        assert len(hist.edges) == 13
        assert hist.genuine.sum() == 70
        assert hist.impostor.sum() == 90

    def test_unlinkability(self):
        rng = np.random.default_rng(7)
        same = unlinkability_ks(rng.normal(1.0, 0.1, 400).clip(0), rng.normal(1.0, 0.1, 400).clip(0))
        shifted = unlinkability_ks(rng.normal(0.6, 0.1, 400).clip(0), rng.normal(1.0, 0.1, 400).clip(0))
        assert not same.linkable
        assert shifted.linkable
        assert shifted.statistic > same.statistic

    def test_unlinkability_empty(self):
        with pytest.raises(InsufficientDataError):
            unlinkability_ks([], [0.5])


class TestCalibration:
    """Tests for calibrate."""

    def test_sizes_and_cross_key(self, world, extractor):
        settings = CalibrationSettings(genuine_trials=12, impostor_trials=9)
        result = calibrate(world, [Scenario.UNPROTECTED, Scenario.OTB_MORPH], settings, SeedTree(1), extractor=extractor)
        assert list(result.score_sets) == [Scenario.UNPROTECTED, Scenario.OTB_MORPH]
        unprotected = result.score_sets[Scenario.UNPROTECTED]
        assert unprotected.genuine.size == 12 and unprotected.impostor.size == 9
        assert unprotected.scenario is Scenario.UNPROTECTED
        assert result.cross_key.size == 12

    def test_no_cross_key_without_one_time_morph(self, world, extractor):
        settings = CalibrationSettings(genuine_trials=5, impostor_trials=5)
        result = calibrate(world, [Scenario.GAUSSIAN], settings, SeedTree(1), extractor=extractor)
        assert result.cross_key.size == 0

    def test_deterministic(self, world, extractor):
        settings = CalibrationSettings(genuine_trials=8, impostor_trials=8)
        first = calibrate(world, list(Scenario), settings, SeedTree(2), extractor=extractor)
        second = calibrate(world, list(Scenario), settings, SeedTree(2), extractor=extractor)
        for scenario in Scenario:
            assert first.score_sets[scenario] == second.score_sets[scenario]
        assert np.array_equal(first.cross_key, second.cross_key)

    def test_unprotected_separates(self, world, extractor):
        settings = CalibrationSettings(genuine_trials=60, impostor_trials=60)
        result = calibrate(world, [Scenario.UNPROTECTED], settings, SeedTree(3), extractor=extractor)
        eer, _ = compute_eer(result.score_sets[Scenario.UNPROTECTED])
        assert eer < 0.25

    def test_invalid_settings(self, world):
        with pytest.raises(ConfigurationError):
            calibrate(world, [Scenario.UNPROTECTED], CalibrationSettings(genuine_trials=0), SeedTree(0))


class TestReport:
    """Tests for build_report and export_report."""

    def _report(self):
        score_sets = {
            Scenario.UNPROTECTED: random_scores(10, 40, 40),
            Scenario.OTB_MORPH: random_scores(11, 40, 40),
        }
        traces = {Scenario.UNPROTECTED: [trace([1.2, 0.3], 0), trace([1.2, 0.9], 1)]}
        report = build_report(
            [Scenario.UNPROTECTED, Scenario.GAUSSIAN, Scenario.OTB_MORPH],
            score_sets,
            traces,
            FAR_TARGETS,
            {"master_seed": 3, "world": {"dimension": 16}},
        )
        return report, score_sets

    def test_summaries(self):
        report, _ = self._report()
        unprotected = report.scenarios[Scenario.UNPROTECTED]
        assert unprotected.n_traces == 2
        assert unprotected.asr[EER_POINT] is not None
        assert report.scenarios[Scenario.GAUSSIAN].eer is None
        assert report.scenarios[Scenario.OTB_MORPH].asr[EER_POINT] is None

    def test_flags(self):
        report, _ = self._report()
        rows = report_rows(report)
        flags = {(r["scenario"], r["metric"], r["operating_point"]): r["flag"] for r in rows}
        assert flags[("ii", "eer", EER_POINT)] == NOT_MEASURED
        assert flags[("iv", "asr", EER_POINT)] == NOT_MEASURED
        assert flags[("i", "far", "FAR=0.001")] == LOW_SAMPLE
        assert flags[("i", "far", "FAR=0.1")] == ""

    def test_no_anchor_flag(self):
        scores = {Scenario.OTB_MORPH: random_scores(12, 40, 40)}
        report = build_report([Scenario.OTB_MORPH], scores, {Scenario.OTB_MORPH: [trace([1.0, 0.2])]}, FAR_TARGETS)
        rows = {(r["metric"], r["operating_point"]): r["flag"] for r in report_rows(report)}
        assert rows[("asr", "FAR=0.1")] == NO_ANCHOR

    def test_table_layout(self):
        report, _ = self._report()
        frame = table_frame(report)
        assert list(frame["scenario"]) == ["i", "ii", "iv"]
        assert list(frame.columns) == [
            "scenario", "EER", "ASR@EER",
            "FRR@FAR=0.1", "ASR@FAR=0.1",
            "FRR@FAR=0.01", "ASR@FAR=0.01",
            "FRR@FAR=0.001", "ASR@FAR=0.001",
        ]

    def test_export_round_trip(self, tmp_path):
        report, score_sets = self._report()
        paths = export_report(report, tmp_path / "report", score_sets, bins=8)
        assert set(paths) == {"report", "table", "metadata", "histograms", "det"}
        assert all(p.exists() for p in paths.values())
        assert read_report(tmp_path / "report") == report

    def test_export_is_reproducible(self, tmp_path):
        report, score_sets = self._report()
        a = export_report(report, tmp_path / "a", score_sets)
        b = export_report(report, tmp_path / "b", score_sets)
        for name in a:
            assert a[name].read_bytes() == b[name].read_bytes()

    def test_empty_report(self, tmp_path):
        report = build_report([], {}, {}, FAR_TARGETS)
        with pytest.raises(InsufficientDataError):
            export_report(report, tmp_path)
