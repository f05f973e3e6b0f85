"""Unit tests for the centroid model and instance extraction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from sinusmil.core.sampling import (
    crop_window,
    derive_seed,
    extract_all,
    extract_instance,
    fit_centroid_model,
    sample_centroids,
)
from sinusmil.errors import CentroidModelError, ExtractionError
from sinusmil.models.anatomy import (
    CentroidAnnotation,
    CentroidModel,
    Label,
    Side,
    SideCentroidModel,
)
from sinusmil.models.settings import PATCH_SIZE_GRID
from sinusmil.models.volume import Volume


def _annotations(points: dict[Side, list[tuple[float, float, float]]]) -> list[CentroidAnnotation]:
    return [
        CentroidAnnotation(subject_id=f"sub-{i:03d}", side=side, centroid=point)
        for side, side_points in points.items()
        for i, point in enumerate(side_points)
    ]


def _window_oracle(centroid: float, patch_size: int, size: int) -> set[int]:
    """Every in-bounds start whose window center is nearest to the centroid."""
    starts = np.arange(size - patch_size + 1)
    distance = np.abs(starts + (patch_size - 1) / 2.0 - centroid)
    return {int(s) for s in starts[np.isclose(distance, distance.min(), atol=1e-9)]}


class TestFitCentroidModel:
    """Tests for fitting per-side Gaussians."""

    def test_mean_and_unbiased_std(self) -> None:
        left = [(40.0, 80.0, 46.0), (44.0, 82.0, 46.0), (48.0, 84.0, 46.0)]
        right = [(80.0, 80.0, 46.0), (84.0, 80.0, 46.0)]
        model = fit_centroid_model(_annotations({Side.LEFT: left, Side.RIGHT: right}))

        assert model.left.mean == pytest.approx((44.0, 82.0, 46.0))
        assert model.left.std == pytest.approx((4.0, 2.0, 0.0))
        assert model.left.n_annotations == 3
        assert model.right.std[0] == pytest.approx(np.std([80.0, 84.0], ddof=1))

    def test_single_annotation_raises(self) -> None:
        annotations = _annotations(
            {Side.LEFT: [(40.0, 80.0, 46.0)], Side.RIGHT: [(80.0, 80.0, 46.0)] * 3}
        )

        with pytest.raises(CentroidModelError, match="left side has 1"):
            fit_centroid_model(annotations)

    def test_annotation_outside_registered_grid_is_rejected(self) -> None:
        with pytest.raises(ValueError, match="outside registered grid"):
            CentroidAnnotation(subject_id="sub-000", side=Side.LEFT, centroid=(128.5, 0.0, 0.0))


class TestSampleCentroids:
    """Tests for centroid draws."""

    def test_draws_reproduce_the_mean(self, centroid_model: CentroidModel) -> None:
        """10,000 draws per side land within 4 sigma / sqrt(n) of the mean per axis."""
        n = 10_000
        for side in Side:
            params = centroid_model.for_side(side)
            draws = np.asarray(sample_centroids(centroid_model, side, n, seed=11))
            bound = 4.0 * np.asarray(params.std) / np.sqrt(n)

            assert draws.shape == (n, 3)
            assert np.all(np.abs(draws.mean(axis=0) - np.asarray(params.mean)) < bound)

    def test_zero_std_collapses_to_mean(self) -> None:
        side_model = SideCentroidModel(mean=(40.5, 70.25, 50.0), std=(0.0, 0.0, 0.0))
        model = CentroidModel(left=side_model, right=side_model)

        draws = sample_centroids(model, Side.LEFT, 25, seed=3)

        assert all(d == (40.5, 70.25, 50.0) for d in draws)

    def test_same_seed_same_draws(self, centroid_model: CentroidModel) -> None:
        a = sample_centroids(centroid_model, Side.RIGHT, 5, seed=42)
        b = sample_centroids(centroid_model, Side.RIGHT, 5, seed=42)

        assert a == b

    def test_n_below_one_raises(self, centroid_model: CentroidModel) -> None:
        with pytest.raises(ValueError, match="n must be"):
            sample_centroids(centroid_model, Side.LEFT, 0, seed=0)


class TestDeriveSeed:
    """Tests for per-(subject, side) seeds."""

    def test_deterministic(self) -> None:
        assert derive_seed(3, "sub-001", Side.LEFT) == derive_seed(3, "sub-001", Side.LEFT)

    def test_depends_on_every_input(self) -> None:
        base = derive_seed(3, "sub-001", Side.LEFT)

        assert base != derive_seed(4, "sub-001", Side.LEFT)
        assert base != derive_seed(3, "sub-002", Side.LEFT)
        assert base != derive_seed(3, "sub-001", Side.RIGHT)


class TestCropWindow:
    """Tests for the clamped crop window arithmetic."""

    @given(
        centroid=st.tuples(*[st.floats(-20.0, 150.0, allow_nan=False)] * 3),
        patch_size=st.integers(1, 128),
    )
    @settings(max_examples=1000, deadline=None)
    def test_matches_index_level_oracle(
        self, centroid: tuple[float, float, float], patch_size: int
    ) -> None:
        """The window is the in-bounds P-run whose center is nearest the centroid."""
        start = crop_window(centroid, patch_size, (128, 128, 128))

        for axis in range(3):
            assert start[axis] in _window_oracle(centroid[axis], patch_size, 128)

    @pytest.mark.parametrize("patch_size", PATCH_SIZE_GRID)
    def test_every_draw_is_in_bounds(self, centroid_model: CentroidModel, patch_size: int) -> None:
        """Clamping keeps 100% of crops inside the registered grid."""
        wide = CentroidModel(
            left=centroid_model.left.model_copy(update={"std": (40.0, 40.0, 40.0)}),
            right=centroid_model.right.model_copy(update={"std": (40.0, 40.0, 40.0)}),
        )
        for side in Side:
            for centroid in sample_centroids(wide, side, 2_000, seed=patch_size):
                start = crop_window(centroid, patch_size, (128, 128, 128))
                assert all(0 <= s <= 128 - patch_size for s in start)

    def test_centered_window(self) -> None:
        assert crop_window((10.0, 10.0, 10.0), 5, (32, 32, 32)) == (8, 8, 8)

    def test_patch_larger_than_grid_raises(self) -> None:
        with pytest.raises(ExtractionError, match="does not fit"):
            crop_window((5.0, 5.0, 5.0), 40, (32, 32, 32))


class TestExtraction:
    """Tests for instance extraction."""

    @pytest.fixture
    def mirrored_volume(self) -> Volume:
        """Smooth noise-free field, symmetric about the sagittal midplane."""
        field = ndimage.gaussian_filter(np.random.default_rng(5).normal(size=(48, 40, 40)), 2.0)
        return Volume(data=(field + field[::-1]) / 2.0)

    def test_left_and_mirrored_right_instances_match(self, mirrored_volume: Volume) -> None:
        left_centroid = (14.3, 20.6, 18.2)
        right_centroid = (47 - 14.3, 20.6, 18.2)

        left = extract_instance(
            mirrored_volume, left_centroid, 15, Side.LEFT, instance_dims=(32, 32, 32)
        )
        right = extract_instance(
            mirrored_volume, right_centroid, 15, Side.RIGHT, instance_dims=(32, 32, 32)
        )

        assert np.max(np.abs(left.data - right.data)) <= 1e-4

    def test_instance_is_resampled_and_normalized(self, mirrored_volume: Volume) -> None:
        instance = extract_instance(
            mirrored_volume, (20.0, 20.0, 20.0), 11, Side.LEFT, instance_dims=(16, 16, 16)
        )

        assert instance.shape == (16, 16, 16)
        assert instance.patch_size == 11
        assert instance.data.mean() == pytest.approx(0.0, abs=1e-9)
        assert instance.data.std() == pytest.approx(1.0)

    def test_extract_all_yields_2n_left_first(self, mirrored_volume: Volume) -> None:
        model = CentroidModel(
            left=SideCentroidModel(mean=(14.0, 20.0, 20.0), std=(1.0, 1.0, 1.0)),
            right=SideCentroidModel(mean=(33.0, 20.0, 20.0), std=(1.0, 1.0, 1.0)),
        )
        instances = extract_all(
            mirrored_volume,
            model,
            n=3,
            patch_size=9,
            seed=0,
            subject_id="sub-000",
            labels={Side.LEFT: Label.ANOMALY, Side.RIGHT: Label.NORMAL},
            instance_dims=(8, 8, 8),
        )

        assert len(instances) == 6
        assert [i.side for i in instances] == [Side.LEFT] * 3 + [Side.RIGHT] * 3
        assert {i.label for i in instances[:3]} == {Label.ANOMALY}
        assert {i.label for i in instances[3:]} == {Label.NORMAL}

    def test_extraction_is_order_independent(self, mirrored_volume: Volume) -> None:
        """Draws depend on (seed, subject, side), not on the processing order."""
        model = CentroidModel(
            left=SideCentroidModel(mean=(14.0, 20.0, 20.0), std=(1.0, 1.0, 1.0)),
            right=SideCentroidModel(mean=(33.0, 20.0, 20.0), std=(1.0, 1.0, 1.0)),
        )

        def centroids(subject_id: str) -> list[tuple[float, float, float]]:
            instances = extract_all(
                mirrored_volume, model, 2, 9, 5, subject_id=subject_id, instance_dims=(8, 8, 8)
            )
            return [i.centroid for i in instances]

        first = [centroids("sub-a"), centroids("sub-b")]
        second = [centroids("sub-b"), centroids("sub-a")]

        assert first == second[::-1]

    def test_single_instance_at_mean(self, mirrored_volume: Volume) -> None:
        model = CentroidModel(
            left=SideCentroidModel(mean=(14.0, 20.0, 20.0), std=(3.0, 3.0, 3.0)),
            right=SideCentroidModel(mean=(33.0, 20.0, 20.0), std=(3.0, 3.0, 3.0)),
        )
        instances = extract_all(
            mirrored_volume, model, 1, 9, 0, instance_dims=(8, 8, 8), use_mean_for_single=True
        )

        assert [i.centroid for i in instances] == [(14.0, 20.0, 20.0), (33.0, 20.0, 20.0)]
