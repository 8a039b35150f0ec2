"""
Experiment orchestration.

The main orchestrator behind the CLI commands. Every command works inside
one output directory laid out as::

    scores/<scenario>.parquet        calibration scores (shared by all commands)
    traces/<scenario>/seed-<n>.csv   attack trajectories (+ .json sidecars)
    transcripts.jsonl                protocol sessions, one per line
    store.json                       server records after the simulation
    report/                          evaluation tables, histograms, DET curves
    demo/                            images and storyline of the demo
    ads/                             auxiliary data issued by ``issue``, its index and ledger
    run-manifest.json                what the last command did

Score stores carry a fingerprint of the settings they were collected under
and are reused by later commands only when it matches.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import cached_property
from itertools import repeat
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from otbmorph import result_manifest
from otbmorph.adversary.hill_climb import AttackTrace
from otbmorph.adversary.oracle import LeakageOracle, ProtocolTarget, inject_template
from otbmorph.adversary.scenario import attack_scenario
from otbmorph.errors import ADReuseError, InsufficientDataError, OTBMorphError
from otbmorph.evaluation.calibration import calibrate
from otbmorph.evaluation.metrics import ScoreSet, compute_asr, eer_point, operating_points, unlinkability_ks
from otbmorph.evaluation.report import build_report, export_report
from otbmorph.features.extractors import Extractor, ExtractorRegistry, extract_features
from otbmorph.features.world import SyntheticWorld, SyntheticWorldConfig, build_world, sample_presentation
from otbmorph.morph.engine import morph
from otbmorph.parsers.artifact_parser import (
    read_ad_ledger,
    read_pseudonym_index,
    read_scores,
    read_traces,
    score_fingerprint,
)
from otbmorph.parsers.config_parser import ConfigParser, ExperimentConfig
from otbmorph.protocol.channel import Channel
from otbmorph.protocol.session import ClientDevice, ProtocolServer, SessionTranscript, run_session
from otbmorph.protocol.store import ServerStore
from otbmorph.protocol.ttp import provision_client, ttp_issue, ttp_replenish
from otbmorph.tools.digest import text_digest
from otbmorph.tools.types import EER_POINT, Behavior, Decision, Scenario, TapPoint
from otbmorph.transforms.auxiliary import ADLedger
from otbmorph.transforms.pipeline import KeyIssuer, ProtectionPipeline
from otbmorph.writers.ad_writer import write_ad
from otbmorph.writers.csv_writer import write_embeddings, write_trace
from otbmorph.writers.image_writer import write_image, write_landmarks
from otbmorph.writers.json_writer import write_json, write_jsonl
from otbmorph.writers.parquet_writer import write_scores

from .result import RunResult

logger = logging.getLogger(__name__)

SCORES_DIR = "scores"
TRACES_DIR = "traces"
REPORT_DIR = "report"
DEMO_DIR = "demo"
ADS_DIR = "ads"
TRANSCRIPTS = "transcripts.jsonl"
STORE = "store.json"
PSEUDONYM_INDEX = "pseudonyms.json"
AD_LEDGER = "ledger.json"

# Config sections that change calibration scores.
SCORE_SECTIONS = ("master_seed", "world", "extractor", "morph", "transforms", "calibration")


def world_config(config: ExperimentConfig) -> SyntheticWorldConfig:
    """The world's own seed is derived from the master seed."""
    return replace(config.world, rng_seed=config.seeds.integer("world", config.world.rng_seed))


def score_settings_fingerprint(config: ExperimentConfig) -> str:
    resolved = ConfigParser().to_dict(config)
    return text_digest(json.dumps({k: resolved[k] for k in SCORE_SECTIONS}, sort_keys=True))


def run_attack(
    config: ExperimentConfig, scenario: Scenario, seed_index: int, thresholds: Mapping[str, float]
) -> AttackTrace:
    """
    One seeded attack; a module-level function so worker processes can run it.

    The victim and every session draw from ``("attack", scenario, seed_index)``;
    the proposal stream gets its own derived seed.
    """
    world = build_world(world_config(config))
    extractor = ExtractorRegistry.create(config.extractor, world)
    seeds = config.seeds
    rng = seeds.rng("attack", scenario.value, seed_index)
    victim = world.subject(int(rng.integers(world.config.n_subjects)))
    policy = config.attack_policy(seeds.integer("attack", scenario.value, seed_index, "proposals"))
    return attack_scenario(
        world,
        scenario,
        policy,
        victim,
        rng,
        thresholds=thresholds,
        schedule=config.attack_schedule(),
        transform_params=config.transforms,
        morph_params=config.morph,
        extractor=extractor,
    )


class Experiment:
    """
    Runs the simulator's commands for one configuration.

    Example:
        experiment = Experiment(ConfigParser().parse("configs/default.yaml"))
        result = experiment.simulate()
        if result.has_errors:
            print(result.summary())
    """

    def __init__(self, config: ExperimentConfig, jobs: int = 1):
        self.config = config
        self.out = Path(config.output)
        self.jobs = max(1, int(jobs))

    @cached_property
    def world(self) -> SyntheticWorld:
        return build_world(world_config(self.config))

    @cached_property
    def extractor(self) -> Extractor:
        return ExtractorRegistry.create(self.config.extractor, self.world)

    def score_path(self, scenario: Scenario, root: Optional[Path] = None) -> Path:
        return (root or self.out) / SCORES_DIR / f"{scenario.value}.parquet"

    def trace_dir(self, scenario: Scenario, root: Optional[Path] = None) -> Path:
        return (root or self.out) / TRACES_DIR / scenario.value

    def ensure_scores(self, scenarios: Iterable[Scenario], result: RunResult) -> dict[Scenario, ScoreSet]:
        """
        Calibration scores for ``scenarios``, reusing matching stores on disk.

        Missing or stale stores are recollected in one calibration pass.
        """
        scenarios = list(scenarios)
        fingerprint = score_settings_fingerprint(self.config)
        scores: dict[Scenario, ScoreSet] = {}
        missing = []
        for scenario in scenarios:
            path = self.score_path(scenario)
            if path.exists() and score_fingerprint(path) == fingerprint:
                scores[scenario] = read_scores(path)[0]
                logger.info("Reusing scores for scenario %s from %s", scenario.value, path)
            else:
                missing.append(scenario)
        if missing:
            calibration = calibrate(
                self.world,
                missing,
                self.config.calibration,
                self.config.seeds,
                self.config.transforms,
                self.config.morph,
                self.extractor,
            )
            for scenario in missing:
                cross = calibration.cross_key if scenario is Scenario.OTB_MORPH else None
                path = write_scores(calibration.score_sets[scenario], self.score_path(scenario), cross, fingerprint)
                result.add_artifact(f"scores_{scenario.value}", path)
                scores[scenario] = calibration.score_sets[scenario]
        return {s: scores[s] for s in scenarios}

    def simulate(self) -> RunResult:
        """
        Enroll ``protocol.clients`` clients and run ``protocol.sessions``
        sessions each under the one-time morph scheme.
        """
        result = RunResult("simulate", self.out)
        cfg = self.config
        scores = self.ensure_scores([Scenario.OTB_MORPH], result)
        threshold = eer_point(scores[Scenario.OTB_MORPH]).threshold

        ledger = ADLedger()
        issuer = KeyIssuer(self.world, ledger, cfg.transforms)
        server = ProtocolServer(
            self.extractor,
            threshold,
            cfg.morph,
            store=ServerStore(),
            ledger=ledger,
            channel=Channel(),
            rotation_enabled=cfg.attack.rotation,
        )
        n_subjects = self.world.config.n_subjects
        transcripts: list[SessionTranscript] = []
        replenished = 0

        for c in range(cfg.protocol.clients):
            client_id = f"client-{c}"
            subject = self.world.subject(c % n_subjects)
            rng = cfg.seeds.rng("protocol", c)
            ttp_rng = cfg.seeds.rng("ttp", c)
            se_state = provision_client(client_id, cfg.protocol.pool_size, ttp_rng, issuer)
            se_state = server.enroll_client(se_state, sample_presentation(subject, rng))
            device = ClientDevice(client_id, subject, se_state)
            for s in range(1, cfg.protocol.sessions + 1):
                if device.se_state.pool_size < cfg.protocol.replenish_below:
                    top_up = cfg.protocol.pool_size - device.se_state.pool_size
                    device.se_state = ttp_replenish(device.se_state, top_up, ttp_rng, issuer)
                    replenished += top_up
                    logger.debug("Replenished %s with %d pseudonyms", client_id, top_up)
                attacker = bool(cfg.protocol.attacker_every) and s % cfg.protocol.attacker_every == 0
                presenter = None
                if attacker:
                    presenter = self.world.subject((subject.subject_id + int(rng.integers(1, n_subjects))) % n_subjects)
                behavior = Behavior.ATTACKER if attacker else Behavior.GENUINE
                try:
                    transcript = run_session(device, server, behavior, Scenario.OTB_MORPH, rng, presenter)
                except OTBMorphError as exc:
                    result.errors.append(f"{client_id} session {s}: {exc.code}: {exc.message}")
                    if exc.transcript is not None:
                        transcripts.append(exc.transcript)
                    break
                if transcript.error:
                    result.warnings.append(
                        f"{client_id} session {transcript.session_id}: {transcript.error}"
                    )
                transcripts.append(transcript)

        result.add_artifact("transcripts", write_jsonl([t.to_dict() for t in transcripts], self.out / TRANSCRIPTS))
        result.add_artifact("store", server.store.save(self.out / STORE))
        result.info.update(
            clients=cfg.protocol.clients,
            sessions=len(transcripts),
            accepts=sum(t.decision is Decision.ACCEPT for t in transcripts),
            rejects=sum(t.decision is Decision.REJECT for t in transcripts),
            rotations=sum(t.rotated for t in transcripts),
            threshold=float(threshold),
            ads_issued=len(ledger),
            ads_retired=ledger.retired_count,
            replenished=replenished,
        )
        logger.info(
            "Simulated %d sessions for %d clients: %d rotations",
            len(transcripts),
            cfg.protocol.clients,
            result.info["rotations"],
        )
        return result

    def attack(self) -> RunResult:
        """``attack.seeds`` hill-climbing attacks per configured scenario."""
        result = RunResult("attack", self.out)
        cfg = self.config
        scores = self.ensure_scores(cfg.scenarios, result)
        points = {s: operating_points(scores[s], cfg.far_targets) for s in cfg.scenarios}
        thresholds = {s: {name: p.threshold for name, p in pts.items()} for s, pts in points.items()}
        tasks = [(s, k) for s in cfg.scenarios for k in range(cfg.attack.seeds)]
        logger.info("Running %d attacks on %d worker(s)", len(tasks), self.jobs)

        scenario_of = [s for s, _ in tasks]
        seed_of = [k for _, k in tasks]
        threshold_of = [thresholds[s] for s in scenario_of]
        if self.jobs > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                traces = list(pool.map(run_attack, repeat(cfg), scenario_of, seed_of, threshold_of))
        else:
            traces = [run_attack(cfg, s, k, t) for s, k, t in zip(scenario_of, seed_of, threshold_of)]

        by_scenario: dict[Scenario, list[AttackTrace]] = {s: [] for s in cfg.scenarios}
        for (scenario, k), trace in zip(tasks, traces):
            write_trace(trace, self.trace_dir(scenario) / f"seed-{k}.csv")
            by_scenario[scenario].append(trace)
            if trace.truncated:
                result.warnings.append(f"scenario {scenario.value} seed {k}: query budget exhausted")
        for scenario, scenario_traces in by_scenario.items():
            result.add_artifact(f"traces_{scenario.value}", self.trace_dir(scenario))
            asr = compute_asr(scenario_traces, points[scenario][EER_POINT]) if scenario_traces else None
            result.info[f"asr_eer_{scenario.value}"] = asr
        result.info["traces"] = len(traces)
        return result

    def evaluate(self, inputs: Optional[str | Path] = None) -> RunResult:
        """
        Build the report from stored scores and traces.

        Missing inputs are reported as not measured; with no inputs at all
        the run fails listing every expected path.
        """
        result = RunResult("evaluate", self.out)
        cfg = self.config
        source = Path(inputs) if inputs is not None else self.out
        score_sets: dict[Scenario, ScoreSet] = {}
        traces: dict[Scenario, list[AttackTrace]] = {}
        cross = np.empty(0)
        missing: list[str] = []

        for scenario in cfg.scenarios:
            path = self.score_path(scenario, source)
            if path.exists():
                score_sets[scenario], scenario_cross = read_scores(path)
                if scenario is Scenario.OTB_MORPH:
                    cross = scenario_cross
            else:
                missing.append(str(path))
            trace_dir = self.trace_dir(scenario, source)
            found = read_traces(trace_dir) if trace_dir.is_dir() else []
            if found:
                traces[scenario] = found
            else:
                missing.append(str(trace_dir / "seed-*.csv"))

        if not score_sets and not traces:
            raise InsufficientDataError("No evaluation inputs found; expected " + ", ".join(missing))
        for path in missing:
            logger.warning("Missing evaluation input: %s", path)
            result.warnings.append(f"missing input: {path}")

        metadata = self._report_metadata(score_sets, cross)
        report = build_report(cfg.scenarios, score_sets, traces, cfg.far_targets, metadata)
        for name, path in export_report(report, self.out / REPORT_DIR, score_sets, cfg.calibration.histogram_bins).items():
            result.add_artifact(f"report_{name}", path)
        for scenario, summary in report.scenarios.items():
            result.info[f"eer_{scenario.value}"] = summary.eer
        return result

    def _report_metadata(self, score_sets: Mapping[Scenario, ScoreSet], cross: np.ndarray) -> dict:
        resolved = ConfigParser().to_dict(self.config)
        metadata = {
            "master_seed": self.config.master_seed,
            "dataset_tag": self.config.world.dataset_tag,
            "extractor": self.config.extractor,
            "world": resolved["world"],
            "attack": resolved["attack"],
            "schedule": resolved["schedule"],
        }
        otb = score_sets.get(Scenario.OTB_MORPH)
        if otb is not None and cross.size and otb.impostor.size:
            ks = unlinkability_ks(cross, otb.impostor)
            metadata["unlinkability"] = {
                "ks_statistic": ks.statistic,
                "p_value": ks.p_value,
                "linkable": ks.linkable,
                "cross_key_mean": float(np.mean(cross)),
            }
        return metadata

    def demo(self) -> RunResult:
        """
        The one-time morph storyline on one victim.

        Enrollment, three genuine sessions with rotation, replay of a
        template captured on the channel before the first rotation, and an
        impostor on the victim's device.
        """
        result = RunResult("demo", self.out)
        cfg = self.config
        demo_dir = self.out / DEMO_DIR
        scores = self.ensure_scores([Scenario.OTB_MORPH], result)
        threshold = eer_point(scores[Scenario.OTB_MORPH]).threshold
        rng = cfg.seeds.rng("demo")

        ledger = ADLedger()
        issuer = KeyIssuer(self.world, ledger, cfg.transforms)
        channel = Channel()
        server = ProtocolServer(self.extractor, threshold, cfg.morph, ledger=ledger, channel=channel)
        victim = self.world.subject(0)
        client_id = "victim-0"
        se_state = provision_client(client_id, 8, cfg.seeds.rng("ttp", client_id), issuer)

        capture = sample_presentation(victim, rng)
        first_ad = se_state.pseudonym_pool[0].ad
        assert first_ad.face is not None
        write_image(capture.image, demo_dir / "capture.pgm")
        write_landmarks(capture.landmarks, demo_dir / "capture.lm")
        write_ad(first_ad, demo_dir / "ad.json")
        morphed = morph(capture.image, capture.landmarks, first_ad.face.image, first_ad.face.landmarks, cfg.morph)
        result.add_artifact("protected_image", write_image(morphed, demo_dir / "protected.pgm"))

        device = ClientDevice(client_id, victim, server.enroll_client(se_state, capture))
        pipeline = ProtectionPipeline(Scenario.OTB_MORPH, self.extractor, cfg.transforms, cfg.morph, ledger)
        eavesdropper = LeakageOracle(
            ProtocolTarget(server, device, pipeline, rng), (TapPoint.AP4, TapPoint.AP6)
        )
        channel.add_tap(eavesdropper.intercept)

        storyline: list[dict] = [{"step": "enroll", "ad_id": first_ad.ad_id}]
        transcripts: list[SessionTranscript] = []
        for _ in range(3):
            transcript = run_session(device, server, Behavior.GENUINE, Scenario.OTB_MORPH, rng)
            transcripts.append(transcript)
            storyline.append(self._story("genuine", transcript))

        stale = eavesdropper.intercepted[0]
        session = server.open_session(client_id)
        replay = inject_template(stale, server, session)
        transcripts.append(
            SessionTranscript(
                session.session_id, client_id, Behavior.ATTACKER, tuple(session.messages), replay, False,
                session.messages[-1].score, stale.ad_id,
            )
        )
        storyline.append({"step": "replay", "decision": replay.value, "ad_id": stale.ad_id})

        other = self.world.subject(1)
        transcript = run_session(device, server, Behavior.ATTACKER, Scenario.OTB_MORPH, rng, other)
        transcripts.append(transcript)
        storyline.append(self._story("impostor", transcript))
        channel.remove_tap(eavesdropper.intercept)

        embeddings = [
            (subject_id, sample, extract_features(sample_presentation(self.world.subject(subject_id), rng).image, self.extractor))
            for subject_id in range(min(4, self.world.config.n_subjects))
            for sample in range(2)
        ]
        result.add_artifact("embeddings", write_embeddings(embeddings, demo_dir / "embeddings.csv"))
        result.add_artifact("storyline", write_json(storyline, demo_dir / "storyline.json"))
        result.add_artifact("transcripts", write_jsonl([t.to_dict() for t in transcripts], demo_dir / TRANSCRIPTS))
        result.add_artifact("store", server.store.save(demo_dir / STORE))

        genuine = transcripts[:3]
        result.info.update(
            threshold=float(threshold),
            genuine_accepts=sum(t.decision is Decision.ACCEPT for t in genuine),
            rotations=sum(t.rotated for t in genuine),
            replay=replay.value,
            impostor=transcript.decision.value if transcript.decision else None,
            intercepted=len(eavesdropper.intercepted),
        )
        if replay is Decision.ACCEPT:
            result.warnings.append("replayed stale template was accepted")
        return result

    @staticmethod
    def _story(step: str, transcript: SessionTranscript) -> dict:
        return {
            "step": step,
            "session_id": transcript.session_id,
            "decision": transcript.decision.value if transcript.decision else None,
            "score": transcript.score,
            "rotated": transcript.rotated,
            "ad_id": transcript.ad_id,
        }

    def issue(self, client_id: str, count: int) -> RunResult:
        """
        Issue ``count`` pseudonym sets to ``client_id`` and write their AD.

        Issued ids accumulate in ``ads/pseudonyms.json`` and ``ads/ledger.json``
        across runs; every call draws from a fresh stream and no id already in
        the registry is handed out again.
        """
        result = RunResult("issue", self.out)
        ads = self.out / ADS_DIR
        index_path, ledger_path = ads / PSEUDONYM_INDEX, ads / AD_LEDGER
        index = read_pseudonym_index(index_path) if index_path.exists() else []
        ledger = read_ad_ledger(ledger_path) if ledger_path.exists() else ADLedger()
        known = {entry["pseudonym_id"] for entry in index}
        for entry in index:
            if entry["ad_id"] not in ledger:
                ledger.issue(entry["ad_id"])

        prior = sum(entry["issued_to"] == client_id for entry in index)
        rng = self.config.seeds.rng("ttp", client_id, prior)
        issuer = KeyIssuer(self.world, ledger, self.config.transforms)
        pseudonyms = ttp_issue(client_id, count, rng, issuer)
        for pseudonym in pseudonyms:
            if pseudonym.pseudonym_id in known:
                raise ADReuseError(f"Pseudonym id issued twice: {pseudonym.pseudonym_id}")
            known.add(pseudonym.pseudonym_id)
            path = write_ad(pseudonym.ad, ads / f"{pseudonym.pseudonym_id}.json")
            index.append(
                {
                    "pseudonym_id": pseudonym.pseudonym_id,
                    "issued_to": pseudonym.issued_to,
                    "ad_id": pseudonym.ad.ad_id,
                    "ad_path": path.relative_to(self.out).as_posix(),
                }
            )
        result.add_artifact("pseudonyms", write_json(index, index_path))
        result.add_artifact("ledger", write_json(ledger.to_dict(), ledger_path))
        result.info.update(client_id=client_id, issued=len(pseudonyms), registry=len(index))
        logger.info("Issued %d pseudonyms to %s (%d in registry)", len(pseudonyms), client_id, len(index))
        return result

    def write_manifest(self, result: RunResult, params: Optional[dict] = None) -> dict:
        """Record ``result`` in ``run-manifest.json``; the output path itself is omitted."""
        resolved = ConfigParser().to_dict(self.config)
        resolved.pop("output")
        messages = [{"level": "warning", "text": w} for w in result.warnings]
        messages += [{"level": "error", "text": e} for e in result.errors]
        return result_manifest.write_manifest(
            self.out,
            result.command,
            "failed" if result.has_errors else "ok",
            params={**resolved, **(params or {})},
            artifacts=result.relative_artifacts(),
            info=result.info,
            messages=messages,
            exit_code=result.exit_code,
        )
