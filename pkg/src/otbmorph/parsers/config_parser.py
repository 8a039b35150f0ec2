"""
Experiment configuration: dataclasses and the YAML parser.

Every command reads one versioned YAML file; command-line flags override
``master_seed`` and ``output``. ``ConfigParser.to_dict`` writes the fully
resolved configuration back so it round-trips losslessly.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from otbmorph.adversary.hill_climb import AttackPolicy
from otbmorph.adversary.scenario import INIT_CHOICES, AttackSchedule
from otbmorph.errors import ConfigurationError, ParseError
from otbmorph.evaluation.calibration import CalibrationSettings
from otbmorph.features.extractors import ExtractorRegistry
from otbmorph.features.world import SyntheticWorldConfig
from otbmorph.morph.engine import MorphParams
from otbmorph.tools.seeds import SeedTree
from otbmorph.tools.types import FAR_TARGETS, AttackSpace, BorderPolicy, Scenario
from otbmorph.transforms.pipeline import TransformParams

logger = logging.getLogger(__name__)

CONFIG_SCHEMA = "otb-morph-config/1"


@dataclass(frozen=True)
class AttackSettings:
    """Hill-climbing experiment settings."""

    space: AttackSpace = AttackSpace.EMBEDDING
    step_scale: float = 0.15
    proposals_per_iteration: int = 8
    iterations: int = 40
    seeds: int = 50
    init: str = "other"
    query_budget: Optional[int] = None
    rotation: bool = True

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "space", AttackSpace(self.space))
        except ValueError:
            pass

    def validate(self) -> list[str]:
        errors = []
        try:
            AttackSpace(self.space)
        except ValueError:
            errors.append(f"attack.space: must be one of {[s.value for s in AttackSpace]}")
        if not self.step_scale > 0:
            errors.append("attack.step_scale: must be > 0")
        if self.proposals_per_iteration < 1:
            errors.append("attack.proposals_per_iteration: must be >= 1")
        if self.iterations < 0:
            errors.append("attack.iterations: must be >= 0")
        if self.seeds < 1:
            errors.append("attack.seeds: must be >= 1")
        if self.init not in INIT_CHOICES:
            errors.append(f"attack.init: must be one of {list(INIT_CHOICES)}")
        if self.query_budget is not None and self.query_budget < 0:
            errors.append("attack.query_budget: must be >= 0")
        return errors


@dataclass(frozen=True)
class ScheduleSettings:
    """Interleaving of genuine sessions and score leakage during attacks."""

    genuine_every: int = 1
    leak_every: int = 1

    def validate(self) -> list[str]:
        errors = []
        if self.genuine_every < 0:
            errors.append("schedule.genuine_every: must be >= 0")
        if self.leak_every < 1:
            errors.append("schedule.leak_every: must be >= 1")
        return errors


@dataclass(frozen=True)
class ProtocolSettings:
    """
    Protocol simulation settings.

    Attributes:
        clients: Number of simulated clients
        sessions: Verification sessions per client
        pool_size: Pseudonyms pre-issued per client
        attacker_every: Every n-th session is an attacker presenting
            another subject's face (0: never)
        replenish_below: Before a session, the TTP tops the pool back up to
            pool_size once it holds fewer pseudonyms than this (0: never)
    """

    clients: int = 2
    sessions: int = 3
    pool_size: int = 64
    attacker_every: int = 0
    replenish_below: int = 0

    def validate(self) -> list[str]:
        errors = []
        if self.clients < 1:
            errors.append("protocol.clients: must be >= 1")
        if self.sessions < 0:
            errors.append("protocol.sessions: must be >= 0")
        if self.pool_size < 1:
            errors.append("protocol.pool_size: must be >= 1")
        if self.attacker_every < 0:
            errors.append("protocol.attacker_every: must be >= 0")
        if not 0 <= self.replenish_below <= self.pool_size:
            errors.append("protocol.replenish_below: must be in [0, pool_size]")
        return errors


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Complete, resolved experiment configuration.

    The master seed determines every random draw through ``seeds``.
    """

    master_seed: int = 2024
    output: str = "otb-morph-out"
    world: SyntheticWorldConfig = field(default_factory=SyntheticWorldConfig)
    extractor: str = "synthetic-projection"
    scenarios: tuple[Scenario, ...] = tuple(Scenario)
    morph: MorphParams = field(default_factory=MorphParams)
    transforms: TransformParams = field(default_factory=TransformParams)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    attack: AttackSettings = field(default_factory=AttackSettings)
    schedule: ScheduleSettings = field(default_factory=ScheduleSettings)
    protocol: ProtocolSettings = field(default_factory=ProtocolSettings)
    far_targets: tuple[float, ...] = FAR_TARGETS

    @property
    def seeds(self) -> SeedTree:
        return SeedTree(self.master_seed)

    def validate(self) -> list[str]:
        errors = []
        if self.master_seed < 0:
            errors.append("master_seed: must be >= 0")
        if not self.output:
            errors.append("output: must be non-empty")
        if not ExtractorRegistry.is_registered(self.extractor):
            errors.append(f"extractor: must be one of {ExtractorRegistry.list_extractors()}")
        if not self.scenarios:
            errors.append("scenarios: at least one scenario is required")
        if len(set(self.scenarios)) != len(self.scenarios):
            errors.append("scenarios: duplicates are not allowed")
        if not self.far_targets or any(not (0 < t <= 1) for t in self.far_targets):
            errors.append("operating_points: FAR targets must lie in (0, 1]")
        errors.extend(self.world.validate())
        errors.extend(self.transforms.validate())
        errors.extend(self.calibration.validate())
        errors.extend(self.attack.validate())
        errors.extend(self.schedule.validate())
        errors.extend(self.protocol.validate())
        return errors

    def with_overrides(self, master_seed: Optional[int] = None, output: Optional[str] = None) -> ExperimentConfig:
        changes: dict[str, Any] = {}
        if master_seed is not None:
            changes["master_seed"] = master_seed
        if output is not None:
            changes["output"] = str(output)
        return dataclasses.replace(self, **changes) if changes else self

    def attack_policy(self, seed: int) -> AttackPolicy:
        return AttackPolicy(
            space=self.attack.space,
            step_scale=self.attack.step_scale,
            proposals_per_iteration=self.attack.proposals_per_iteration,
            iterations=self.attack.iterations,
            seed=seed,
        )

    def attack_schedule(self) -> AttackSchedule:
        return AttackSchedule(
            genuine_every=self.schedule.genuine_every,
            leak_every=self.schedule.leak_every,
            rotation=self.attack.rotation,
            init=self.attack.init,
            query_budget=self.attack.query_budget,
        )


SECTIONS: dict[str, type] = {
    "world": SyntheticWorldConfig,
    "morph": MorphParams,
    "transforms": TransformParams,
    "calibration": CalibrationSettings,
    "attack": AttackSettings,
    "schedule": ScheduleSettings,
    "protocol": ProtocolSettings,
}

TOP_LEVEL = {"schema", "master_seed", "output", "extractor", "scenarios", "operating_points", *SECTIONS}


def _plain(value: Any) -> Any:
    if isinstance(value, (Scenario, AttackSpace, BorderPolicy)):
        return value.value
    return value


class ConfigParser:
    """
    Parser for YAML experiment configurations.

    Format::

        schema: otb-morph-config/1
        master_seed: 2024
        output: runs/default
        world:
          dimension: 64
          n_subjects: 100
        scenarios: [i, ii, iii, iv]
        transforms:
          sigma: 0.3
          strength: 0.5
        attack:
          iterations: 40
          seeds: 50
        operating_points:
          far: [0.1, 0.01, 0.001]

    Omitted fields take their defaults. Unknown fields are errors.
    """

    def parse(self, file_path: str | Path) -> ExperimentConfig:
        """
        Parse a YAML configuration file.

        Raises:
            FileNotFoundError: If the file doesn't exist
            ParseError: If the YAML is malformed
            ConfigurationError: Listing every invalid field
        """
        file_path = Path(file_path)
        if not file_path.exists():
            raise FileNotFoundError(f"Config file not found: {file_path}")
        try:
            with open(file_path) as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}", file_path, line) from exc
        if not isinstance(data, dict):
            raise ParseError(f"config must be a YAML mapping, got {type(data).__name__}", file_path)
        return self.parse_dict(data)

    def parse_dict(self, data: dict[str, Any]) -> ExperimentConfig:
        """Build and validate a configuration from a mapping."""
        problems: list[str] = []
        if data.get("schema") != CONFIG_SCHEMA:
            problems.append(f"schema: expected {CONFIG_SCHEMA!r}, got {data.get('schema')!r}")
        for key in sorted(set(data) - TOP_LEVEL):
            problems.append(f"{key}: unknown field")

        kwargs: dict[str, Any] = {}
        for key in ("master_seed", "output", "extractor"):
            if key in data:
                kwargs[key] = data[key]
        if "master_seed" in kwargs and not isinstance(kwargs["master_seed"], int):
            problems.append("master_seed: must be an integer")
            kwargs.pop("master_seed")

        if "scenarios" in data:
            try:
                kwargs["scenarios"] = tuple(Scenario.parse(s) for s in data["scenarios"])
            except (TypeError, ValueError) as exc:
                problems.append(f"scenarios: {exc}")

        points = data.get("operating_points")
        if points is not None:
            far = points.get("far") if isinstance(points, dict) else None
            if not isinstance(far, list) or not all(isinstance(t, (int, float)) for t in far):
                problems.append("operating_points.far: must be a list of numbers")
            else:
                kwargs["far_targets"] = tuple(float(t) for t in far)

        for name, section_class in SECTIONS.items():
            section = self._parse_section(name, section_class, data.get(name), problems)
            if section is not None:
                kwargs[name] = section

        config = None
        if not problems:
            try:
                config = ExperimentConfig(**kwargs)
            except TypeError as exc:
                problems.append(str(exc))
        if config is not None:
            problems.extend(config.validate())
        if problems:
            raise ConfigurationError("Invalid configuration", problems)
        assert config is not None
        return config

    def _parse_section(
        self, name: str, section_class: type, data: Any, problems: list[str]
    ) -> Optional[Any]:
        if data is None:
            return None
        if not isinstance(data, dict):
            problems.append(f"{name}: must be a mapping")
            return None
        known = {f.name for f in dataclasses.fields(section_class)}
        unknown = sorted(set(data) - known)
        for key in unknown:
            problems.append(f"{name}.{key}: unknown field")
        if unknown:
            return None
        try:
            return section_class(**data)
        except ConfigurationError as exc:
            problems.extend(f"{name}.{p}" for p in exc.problems)
        except (TypeError, ValueError) as exc:
            problems.append(f"{name}: {exc}")
        return None

    def to_dict(self, config: ExperimentConfig) -> dict[str, Any]:
        """Fully resolved mapping; ``parse_dict(to_dict(c)) == c``."""
        out: dict[str, Any] = {
            "schema": CONFIG_SCHEMA,
            "master_seed": config.master_seed,
            "output": config.output,
            "extractor": config.extractor,
            "scenarios": [s.value for s in config.scenarios],
            "operating_points": {"far": list(config.far_targets)},
        }
        for name in SECTIONS:
            section = getattr(config, name)
            out[name] = {f.name: _plain(getattr(section, f.name)) for f in dataclasses.fields(section)}
        return out

    def dump(self, config: ExperimentConfig) -> str:
        return yaml.safe_dump(self.to_dict(config), sort_keys=False)
