"""
Test configuration for otb-morph tests.

Provides a small synthetic world, its extractor and tiny experiment
configurations so Monte-Carlo tests stay fast.
"""

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from otbmorph.evaluation.calibration import CalibrationSettings, calibrate  # noqa: E402
from otbmorph.evaluation.metrics import eer_point  # noqa: E402
from otbmorph.features.extractors import SyntheticExtractor  # noqa: E402
from otbmorph.features.world import SyntheticWorldConfig, build_world  # noqa: E402
from otbmorph.parsers.config_parser import (  # noqa: E402
    AttackSettings,
    ConfigParser,
    ExperimentConfig,
    ProtocolSettings,
)
from otbmorph.tools.seeds import SeedTree  # noqa: E402
from otbmorph.tools.types import Scenario  # noqa: E402

SMALL_WORLD = SyntheticWorldConfig(dimension=16, n_subjects=10, image_size=32, rng_seed=3)


@pytest.fixture(scope="session")
def world_config():
    return SMALL_WORLD


@pytest.fixture(scope="session")
def world():
    return build_world(SMALL_WORLD)


@pytest.fixture(scope="session")
def extractor(world):
    return SyntheticExtractor.for_world(world)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def otb_threshold(world, extractor):
    """EER threshold of the one-time morph scenario on the small world."""
    result = calibrate(
        world,
        [Scenario.OTB_MORPH],
        CalibrationSettings(genuine_trials=40, impostor_trials=40),
        SeedTree(11),
        extractor=extractor,
    )
    return eer_point(result.score_sets[Scenario.OTB_MORPH]).threshold


@pytest.fixture
def tiny_config(tmp_path):
    """A complete configuration small enough for end-to-end CLI runs."""
    return ExperimentConfig(
        master_seed=5,
        output=str(tmp_path / "run"),
        world=replace(SMALL_WORLD, rng_seed=0),
        calibration=CalibrationSettings(genuine_trials=24, impostor_trials=24, histogram_bins=6),
        attack=AttackSettings(iterations=3, seeds=2, proposals_per_iteration=4),
        protocol=ProtocolSettings(clients=1, sessions=3, pool_size=6, attacker_every=0),
    )


@pytest.fixture
def config_file(tmp_path, tiny_config):
    """``tiny_config`` written as YAML."""
    path = tmp_path / "config.yaml"
    path.write_text(ConfigParser().dump(tiny_config))
    return path
