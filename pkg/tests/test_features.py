"""
Tests for embeddings, extractors and the synthetic world.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import pytest

from otbmorph.errors import ConfigurationError, IncompatibleEmbeddingsError, IncompatibleImagesError
from otbmorph.evaluation.calibration import CalibrationSettings, calibrate
from otbmorph.evaluation.metrics import decidability
from otbmorph.features import (
    DissimilarityScore,
    Embedding,
    ExtractorRegistry,
    SyntheticExtractor,
    SyntheticWorldConfig,
    build_world,
    dissimilarity,
    extract_features,
    sample_presentation,
    synth_subject,
)
from otbmorph.features.extractors import BlockMeanExtractor
from otbmorph.morph import FaceImage
from otbmorph.tools.seeds import SeedTree
from otbmorph.tools.types import Scenario

ALIGNED_WORLD = SyntheticWorldConfig(
    dimension=64, n_subjects=40, image_size=32, landmark_jitter=0.0, shape_spread=0.0, rng_seed=9
)


class TestDissimilarity:
    """Tests for the Euclidean dissimilarity."""

    def test_orthonormal_pair(self):
        a = Embedding([1.0, 0.0, 0.0], normalized=True)
        b = Embedding([0.0, 1.0, 0.0], normalized=True)
        assert float(dissimilarity(a, b)) == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x, y = rng.standard_normal(32), rng.standard_normal(32)
            expected = math.sqrt(sum((xi - yi) ** 2 for xi, yi in zip(x, y)))
            assert float(dissimilarity(Embedding(x), Embedding(y))) == pytest.approx(expected, rel=1e-12)

    def test_metric_properties(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, b, c = (Embedding.unit(rng.standard_normal(8)) for _ in range(3))
            assert float(dissimilarity(a, a)) == 0.0
            assert float(dissimilarity(a, b)) == float(dissimilarity(b, a))
            assert dissimilarity(a, c) <= dissimilarity(a, b) + dissimilarity(b, c) + 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(IncompatibleEmbeddingsError):
            dissimilarity(Embedding([1.0, 0.0]), Embedding([1.0, 0.0, 0.0]))

    def test_score_is_non_negative(self):
        assert DissimilarityScore(0.25).value == 0.25
        with pytest.raises(ValueError):
            DissimilarityScore(-0.1)

    def test_normalized_flag_is_checked(self):
        with pytest.raises(IncompatibleEmbeddingsError):
            Embedding([1.0, 1.0], normalized=True)


class TestExtractors:
    """Tests for the extractor registry and feature extraction."""

    def test_registry(self):
        assert ExtractorRegistry.list_extractors() == ["block-mean", "synthetic-projection"]
        assert ExtractorRegistry.get("block-mean") is BlockMeanExtractor
        assert ExtractorRegistry.is_registered("synthetic-projection")

    def test_unknown_extractor(self):
        with pytest.raises(ConfigurationError):
            ExtractorRegistry.get("arcface")

    def test_create_passes_options(self, world):
        extractor = ExtractorRegistry.create("block-mean", world, grid=4)
        assert extractor.dimension == 16

    def test_deterministic_and_normalized(self, world, extractor, rng):
        image, _ = sample_presentation(world.subject(2), rng)
        first = extract_features(image, extractor)
        assert first == extract_features(image, extractor)
        assert first.normalized
        assert first.dimension == world.config.dimension
        assert np.linalg.norm(first.values) == pytest.approx(1.0, abs=1e-12)

    def test_raw_features(self, world, extractor, rng):
        image, _ = sample_presentation(world.subject(2), rng)
        raw = extract_features(image, extractor, normalize=False)
        assert not raw.normalized

    def test_wrong_image_size(self, extractor):
        with pytest.raises(IncompatibleImagesError):
            extract_features(FaceImage.uniform(20, 20, 0.5), extractor)

    def test_aligned_capture_recovers_code(self):
        """With no landmark motion the projection returns the identity code exactly."""
        world = build_world(ALIGNED_WORLD)
        subject = world.subject(0)
        code = 0.5 * subject.class_mean
        image = world.renderer.render(code, subject.landmarks)
        raw = extract_features(image, SyntheticExtractor.for_world(world), normalize=False)
        assert np.allclose(raw.values, code, atol=1e-8)


class TestSyntheticWorld:
    """Tests for synth_subject and presentation sampling."""

    def test_subject_is_deterministic(self, world_config):
        a = synth_subject(world_config, 4)
        b = synth_subject(replace(world_config), 4)
        assert np.array_equal(a.class_mean, b.class_mean)
        assert a.landmarks == b.landmarks

    def test_distinct_subjects(self, world):
        means = [world.subject(i).class_mean for i in range(world.config.n_subjects)]
        for i in range(len(means)):
            for j in range(i + 1, len(means)):
                assert not np.array_equal(means[i], means[j])

    def test_concurrent_lookups_share_one_subject(self, world_config):
        fresh = build_world(world_config)
        with ThreadPoolExecutor(max_workers=8) as pool:
            subjects = list(pool.map(lambda _: fresh.subject(7), range(32)))
        assert all(s is subjects[0] for s in subjects)

    def test_subject_out_of_range(self, world):
        with pytest.raises(ConfigurationError):
            world.subject(world.config.n_subjects)

    def test_invalid_config(self):
        with pytest.raises(ConfigurationError) as info:
            build_world(SyntheticWorldConfig(class_spread=2.0, population_spread=1.0, channels=2))
        assert len(info.value.problems) == 2

    def test_zero_noise_presentations_identical(self, world):
        subject = replace(world.subject(1), class_spread=0.0, landmark_jitter=0.0)
        a = sample_presentation(subject, np.random.default_rng(0))
        b = sample_presentation(subject, np.random.default_rng(99))
        assert a.image == b.image
        assert a.landmarks == b.landmarks

    def test_presentations_vary(self, world, rng):
        a = sample_presentation(world.subject(1), rng)
        b = sample_presentation(world.subject(1), rng)
        assert a.image != b.image

    def test_within_class_spread(self, world):
        subject = world.subject(0)
        rng = np.random.default_rng(5)
        noise = np.array([subject.sample_code(rng) - subject.class_mean for _ in range(400)])
        assert np.std(noise) == pytest.approx(world.config.class_spread, rel=0.15)

    def test_between_within_ratio(self):
        config = SyntheticWorldConfig(dimension=16, n_subjects=200, image_size=16, rng_seed=2)
        world = build_world(config)
        means = np.array([s.class_mean for s in world.subjects()])
        rng = np.random.default_rng(6)
        subject = world.subject(0)
        within = np.array([subject.sample_code(rng) - subject.class_mean for _ in range(200)])
        ratio = np.std(means) / np.std(within)
        assert ratio == pytest.approx(config.population_spread / config.class_spread, rel=0.10)

    def test_random_face_is_outside_population(self, world, rng):
        image, landmarks = world.random_face(rng)
        assert image.shape == (32, 32, 1)
        assert landmarks.within(32, 32)

    def test_colour_world(self):
        world = build_world(SyntheticWorldConfig(dimension=8, n_subjects=3, image_size=16, channels=3))
        image, _ = sample_presentation(world.subject(0), np.random.default_rng(0))
        assert image.channels == 3


class TestSeparation:
    """Genuine and impostor distances in an aligned world."""

    def test_genuine_below_bound_impostor_above_floor(self):
        world = build_world(ALIGNED_WORLD)
        extractor = SyntheticExtractor.for_world(world)
        rng = np.random.default_rng(10)
        n = world.config.n_subjects
        genuine, impostor = [], []
        for t in range(200):
            subject = world.subject(t % n)
            other = world.subject((t + 1 + t // n) % n)
            enrol = extract_features(sample_presentation(subject, rng).image, extractor)
            probe = extract_features(sample_presentation(subject, rng).image, extractor)
            foreign = extract_features(sample_presentation(other, rng).image, extractor)
            genuine.append(float(dissimilarity(enrol, probe)))
            impostor.append(float(dissimilarity(enrol, foreign)))
        assert np.mean(np.array(genuine) < world.genuine_bound()) >= 0.99
        assert np.mean(np.array(impostor) > world.impostor_floor()) >= 0.99
        assert np.mean(genuine) < np.mean(impostor)

    @pytest.mark.slow
    def test_decidability_grows_with_population_spread(self):
        values = []
        for spread in (0.9, 1.5, 3.0):
            world = build_world(replace(ALIGNED_WORLD, dimension=16, population_spread=spread))
            result = calibrate(
                world,
                [Scenario.UNPROTECTED],
                CalibrationSettings(genuine_trials=150, impostor_trials=150),
                SeedTree(4),
            )
            values.append(decidability(result.score_sets[Scenario.UNPROTECTED]))
        assert values[0] < values[1] < values[2]
