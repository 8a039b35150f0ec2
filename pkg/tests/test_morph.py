"""
Tests for the morph engine: landmarks, triangulation, warping and blending.
"""

import numpy as np
import pytest

from otbmorph.errors import (
    ConfigurationError,
    DegenerateInputError,
    DuplicatePointError,
    IncompatibleImagesError,
    IncompatibleLandmarksError,
    InvalidImageError,
)
from otbmorph.features.world import SyntheticWorldConfig, build_world, sample_presentation
from otbmorph.morph import (
    FaceImage,
    LandmarkSet,
    MorphParams,
    WarpDiagnostics,
    augment_border,
    average_landmarks,
    blend,
    delaunay_triangulate,
    measure_landmarks,
    morph,
    warp_piecewise_affine,
)
from otbmorph.morph.schemas import LandmarkSchemaRegistry
from otbmorph.tools.types import BorderPolicy


def circumcircle(p: np.ndarray) -> tuple[np.ndarray, float]:
    """Centre and radius of the circle through three points."""
    (ax, ay), (bx, by), (cx, cy) = p
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
    centre = np.array([ux, uy])
    return centre, float(np.hypot(ax - ux, ay - uy))


def assert_empty_circumcircles(points: np.ndarray, triangles: np.ndarray, rtol: float = 1e-9) -> None:
    for tri in triangles:
        centre, radius = circumcircle(points[tri])
        for v in range(len(points)):
            if v in tri:
                continue
            assert np.hypot(*(points[v] - centre)) >= radius * (1.0 - rtol), (tri, v)


def face_pair(size: int = 32, seed: int = 0, channels: int = 1):
    world = build_world(SyntheticWorldConfig(dimension=8, n_subjects=4, image_size=size, channels=channels))
    rng = np.random.default_rng(seed)
    return sample_presentation(world.subject(0), rng), sample_presentation(world.subject(1), rng)


class TestImagesAndLandmarks:
    """Tests for FaceImage and LandmarkSet validation."""

    def test_grey_image_gains_channel_axis(self):
        image = FaceImage(np.zeros((4, 5)))
        assert image.shape == (4, 5, 1)
        assert image.width == 5 and image.height == 4

    def test_out_of_range_intensity_rejected(self):
        with pytest.raises(InvalidImageError):
            FaceImage(np.full((3, 3), 1.5))

    def test_data_is_read_only(self):
        image = FaceImage.uniform(3, 3, 0.5)
        with pytest.raises(ValueError):
            image.data[0, 0, 0] = 0.1

    def test_landmarks_out_of_bounds(self):
        image = FaceImage.uniform(10, 10, 0.5)
        with pytest.raises(IncompatibleLandmarksError):
            LandmarkSet([[0.0, 0.0], [10.0, 4.0]], "t").check_bounds(image)

    def test_border_augmentation(self):
        lm = LandmarkSet([[3.0, 4.0], [5.0, 6.0]], "t")
        augmented = augment_border(lm, 11, 9)
        assert len(augmented) == 10
        assert augmented.has_border
        assert augmented.within(11, 9)
        assert [0.0, 0.0] in augmented.points.tolist()
        assert [10.0, 8.0] in augmented.points.tolist()
        assert [5.0, 0.0] in augmented.points.tolist()
        assert augment_border(augmented, 11, 9) is augmented
        assert augmented.points[:2].tolist() == lm.points.tolist()
        assert augmented.schema_id == "t+border"

    def test_schemas_registered(self):
        assert LandmarkSchemaRegistry.list_schemas() == ["face21", "face68"]
        assert LandmarkSchemaRegistry.get("face68").count() == 68
        canonical = LandmarkSchemaRegistry.get("face21").canonical(64)
        assert len(canonical) == 21
        assert canonical.within(64, 64)

    @pytest.mark.parametrize("schema_id", ["face21"])
    def test_canonical_dots_are_separated(self, schema_id):
        """Neighbouring fiducial dots stay apart at the default render size."""
        points = LandmarkSchemaRegistry.get(schema_id).canonical(64).points
        gaps = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
        np.fill_diagonal(gaps, np.inf)
        assert gaps.min() >= 5.0

    def test_unknown_schema(self):
        with pytest.raises(ConfigurationError):
            LandmarkSchemaRegistry.get("face5")

    def test_measure_ignores_dots_outside_radius(self):
        ys, xs = np.mgrid[0:24, 0:24].astype(np.float64)

        def dot(cx, cy, depth):
            return depth * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * 0.8**2))

        image = FaceImage(0.6 - dot(10.0, 10.0, 0.2) - dot(12.5, 12.5, 0.4))
        measured = measure_landmarks(image, LandmarkSet([[10.0, 10.0]], "t"), radius=2)
        assert np.allclose(measured.points, [[10.0, 10.0]], atol=0.3)

    def test_measure_radius_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            measure_landmarks(FaceImage.uniform(8, 8, 0.5), LandmarkSet([[3.0, 3.0]], "t"), radius=0)


class TestAverageLandmarks:
    """Tests for average_landmarks."""

    def test_endpoints(self):
        a = LandmarkSet([[1.0, 2.0], [3.0, 4.0]], "t")
        b = LandmarkSet([[5.0, 6.0], [7.0, 9.0]], "t")
        assert average_landmarks(a, b, 0.0) == a
        assert np.array_equal(average_landmarks(a, b, 1.0).points, b.points)

    def test_midpoint(self):
        a = LandmarkSet([[0.0, 0.0], [10.0, 0.0]], "t")
        b = LandmarkSet([[4.0, 0.0], [14.0, 0.0]], "t")
        assert average_landmarks(a, b, 0.5).points.tolist() == [[2.0, 0.0], [12.0, 0.0]]

    def test_schema_mismatch(self):
        a = LandmarkSet([[0.0, 0.0], [1.0, 1.0]], "face21")
        b = LandmarkSet([[0.0, 0.0], [1.0, 1.0]], "face68")
        with pytest.raises(IncompatibleLandmarksError):
            average_landmarks(a, b, 0.5)

    def test_alpha_out_of_range(self):
        a = LandmarkSet([[0.0, 0.0]], "t")
        with pytest.raises(ConfigurationError):
            average_landmarks(a, a, 1.5)


class TestDelaunay:
    """Tests for delaunay_triangulate."""

    def test_three_points(self):
        tri = delaunay_triangulate(np.array([[0.0, 0.0], [4.0, 0.0], [1.0, 3.0]]))
        assert tri.triangles.tolist() == [[0, 1, 2]]
        assert tri.vertices == (0, 1, 2)

    def test_unit_square_tie_break(self):
        square = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        tri = delaunay_triangulate(square)
        assert tri.triangles.tolist() == [[0, 1, 3], [0, 2, 3]]
        assert_empty_circumcircles(square, tri.triangles)

    def test_too_few_points(self):
        with pytest.raises(DegenerateInputError):
            delaunay_triangulate(np.array([[0.0, 0.0], [1.0, 1.0]]))

    def test_collinear(self):
        with pytest.raises(DegenerateInputError):
            delaunay_triangulate(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))

    def test_duplicates(self):
        with pytest.raises(DuplicatePointError) as info:
            delaunay_triangulate(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]))
        assert info.value.indices == (1, 3)

    def test_random_sets_pass_circumcircle_check(self):
        """Brute-force empty-circumcircle certificate on 100 seeded sets."""
        for seed in range(100):
            points = np.random.default_rng(seed).uniform(0.0, 100.0, size=(30, 2))
            tri = delaunay_triangulate(points)
            assert_empty_circumcircles(points, tri.triangles)
            assert np.all(tri.areas() > 0)

    def test_fifty_points_cover_hull(self):
        from scipy.spatial import ConvexHull

        points = np.random.default_rng(50).uniform(0.0, 1.0, size=(50, 2))
        tri = delaunay_triangulate(points)
        assert tri.areas().sum() == pytest.approx(ConvexHull(points).volume, rel=1e-9)

    def test_canonical_order_and_determinism(self):
        points = np.random.default_rng(7).uniform(0.0, 10.0, size=(20, 2))
        first, second = delaunay_triangulate(points), delaunay_triangulate(points)
        assert first == second
        rows = first.triangles.tolist()
        assert all(r == sorted(r) for r in rows)
        assert rows == sorted(rows)

    def test_grid_is_deterministic(self):
        """Cocircular grid points resolve to one canonical triangulation."""
        xs, ys = np.meshgrid(np.arange(4.0), np.arange(4.0))
        grid = np.column_stack([xs.ravel(), ys.ravel()])
        tri = delaunay_triangulate(grid)
        assert len(tri) == 18
        assert tri == delaunay_triangulate(grid.copy())
        assert_empty_circumcircles(grid, tri.triangles)


class TestWarp:
    """Tests for warp_piecewise_affine."""

    def test_identity(self):
        image, landmarks = face_pair()[0]
        dst = augment_border(landmarks, image.width, image.height)
        tri = delaunay_triangulate(dst)
        out = warp_piecewise_affine(image, dst, dst, tri)
        assert np.max(np.abs(out.data - image.data)) <= 1e-6

    def test_translation_keeps_uniform_image(self):
        image = FaceImage.uniform(32, 32, 0.37)
        src = LandmarkSet([[5.0, 5.0], [20.0, 6.0], [8.0, 20.0], [18.0, 18.0]], "t")
        dst = src.translated(5.0, 0.0)
        out = warp_piecewise_affine(image, src, dst, delaunay_triangulate(dst))
        assert np.allclose(out.data, 0.37, atol=1e-12)

    def test_scaling_matches_affine_resample(self):
        """A globally affine map agrees with a direct per-pixel resample."""
        size = 31
        ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
        image = FaceImage((xs + 2.0 * ys) / 90.0)
        src = LandmarkSet(
            [[0.0, 0.0], [15.0, 0.0], [0.0, 15.0], [15.0, 15.0], [4.0, 9.0], [11.0, 5.0], [7.5, 12.0]], "t"
        )
        dst = LandmarkSet(src.points * 2.0, "t")
        out = warp_piecewise_affine(image, src, dst, delaunay_triangulate(dst))
        expected = (xs / 2.0 + 2.0 * (ys / 2.0)) / 90.0
        assert np.max(np.abs(out.data[:, :, 0] - expected)) <= 1e-9

    def test_constant_border_policy_fills_uncovered(self):
        image = FaceImage.uniform(20, 20, 0.8)
        src = LandmarkSet([[5.0, 5.0], [14.0, 5.0], [5.0, 14.0], [14.0, 14.0]], "t")
        dst = src.translated(1.0, 1.0)
        diagnostics = WarpDiagnostics()
        out = warp_piecewise_affine(
            image, src, dst, delaunay_triangulate(dst), BorderPolicy.CONSTANT, 0.0, diagnostics
        )
        assert out.data[0, 0, 0] == 0.0
        assert out.data[10, 10, 0] == pytest.approx(0.8)
        assert diagnostics.unassigned_pixels > 0

    def test_vertex_count_mismatch(self):
        image = FaceImage.uniform(10, 10, 0.5)
        src = LandmarkSet([[1.0, 1.0], [8.0, 1.0], [1.0, 8.0], [8.0, 8.0]], "t")
        tri = delaunay_triangulate(src.points[:3])
        with pytest.raises(IncompatibleLandmarksError):
            warp_piecewise_affine(image, src, src.translated(0.5, 0.0), tri)


class TestBlend:
    """Tests for blend."""

    def test_endpoints_and_linearity(self):
        a, b = FaceImage.uniform(4, 4, 0.4), FaceImage.uniform(4, 4, 0.8)
        assert blend(a, b, 0.0) == a
        assert blend(a, b, 1.0) == b
        assert np.allclose(blend(a, b, 0.5).data, 0.6, atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(IncompatibleImagesError):
            blend(FaceImage.uniform(4, 4, 0.4), FaceImage.uniform(4, 5, 0.4), 0.5)

    def test_channel_mismatch(self):
        with pytest.raises(IncompatibleImagesError):
            blend(FaceImage.uniform(4, 4, 0.4), FaceImage.uniform(4, 4, 0.4, channels=3), 0.5)


class TestMorph:
    """Tests for the full morph."""

    @pytest.mark.parametrize("channels", [1, 3])
    def test_endpoint_identity(self, channels):
        (a, la), (b, lb) = face_pair(channels=channels)
        assert np.max(np.abs(morph(a, la, b, lb, MorphParams(alpha=0.0)).data - a.data)) <= 1e-6
        assert np.max(np.abs(morph(a, la, b, lb, MorphParams(alpha=1.0)).data - b.data)) <= 1e-6

    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.77])
    def test_swap_symmetry(self, alpha):
        (a, la), (b, lb) = face_pair(seed=3)
        forward = morph(a, la, b, lb, MorphParams(alpha=alpha))
        backward = morph(b, lb, a, la, MorphParams(alpha=1.0 - alpha))
        assert np.array_equal(forward.data, backward.data)

    def test_range_preserved_without_clipping(self):
        (a, la), (b, lb) = face_pair(seed=4)
        diagnostics = WarpDiagnostics()
        out = morph(a, la, b, lb, MorphParams(alpha=0.4), diagnostics)
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0
        assert diagnostics.clipped_values == 0
        assert diagnostics.degenerate_triangles == 0

    def test_deterministic(self):
        (a, la), (b, lb) = face_pair(seed=5)
        assert morph(a, la, b, lb) == morph(a, la, b, lb)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4, 5, 6])
    def test_midpoint_landmarks(self, seed):
        """Fiducial dots of a half morph sit at the midpoints of the input pairs."""
        (a, la), (b, lb) = face_pair(size=64, seed=seed)
        out = morph(a, la, b, lb, MorphParams(alpha=0.5))
        expected = average_landmarks(la, lb, 0.5)
        measured = measure_landmarks(out, expected)
        error = np.linalg.norm(measured.points - expected.points, axis=1)
        assert error.max() <= 1.0

    def test_incompatible_inputs(self):
        (a, la), (b, lb) = face_pair()
        with pytest.raises(IncompatibleLandmarksError):
            morph(a, la, b, LandmarkSet(lb.points[:-1], lb.schema_id))
        with pytest.raises(IncompatibleImagesError):
            morph(a, la, FaceImage.uniform(16, 16, 0.5), lb)

    def test_invalid_params(self):
        with pytest.raises(ConfigurationError) as info:
            MorphParams(alpha=2.0, blend_rule="cubic")
        assert len(info.value.problems) == 2
