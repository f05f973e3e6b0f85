"""Unit tests for resample, flip, normalize and crop."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinusmil.core.volume import crop, flip_lr, normalize_intensity, resample, resample_grid, zscore
from sinusmil.errors import ExtractionError, VolumeShapeError
from sinusmil.models.volume import Volume


class TestFlip:
    """Tests for the left-right mirror."""

    @given(seed=st.integers(0, 2**32 - 1), shape=st.tuples(*[st.integers(1, 9)] * 3))
    @settings(max_examples=50, deadline=None)
    def test_flip_is_an_exact_involution(self, seed: int, shape: tuple[int, int, int]) -> None:
        """flip(flip(v)) is bitwise equal to v."""
        data = np.random.default_rng(seed).normal(size=shape)
        volume = Volume(data=data)

        assert np.array_equal(flip_lr(flip_lr(volume)).data, volume.data)

    def test_flip_reverses_axis_0_only(self) -> None:
        data = np.arange(24, dtype=np.float64).reshape(2, 3, 4)
        flipped = flip_lr(Volume(data=data))

        assert np.array_equal(flipped.data, data[::-1, :, :])
        assert flipped.spacing == (1.0, 1.0, 1.0)

    def test_flip_does_not_modify_input(self) -> None:
        volume = Volume(data=np.arange(8, dtype=np.float64).reshape(2, 2, 2))
        before = volume.data.copy()
        flip_lr(volume)

        assert np.array_equal(volume.data, before)


class TestResample:
    """Tests for trilinear resampling."""

    def test_output_has_target_dims(self) -> None:
        volume = Volume(data=np.random.default_rng(0).normal(size=(10, 12, 14)))

        assert resample(volume, (64, 64, 64)).shape == (64, 64, 64)

    def test_physical_extent_is_preserved(self) -> None:
        volume = Volume(data=np.zeros((4, 5, 6)), spacing=(1.0, 2.0, 0.5))
        resampled = resample(volume, (8, 10, 12))

        assert resampled.spacing == pytest.approx((0.5, 1.0, 0.25))
        assert resampled.extent_mm == pytest.approx(volume.extent_mm)

    def test_constant_volume_stays_constant(self) -> None:
        grid = resample_grid(np.full((7, 7, 7), 3.25), (13, 5, 9))

        assert np.allclose(grid, 3.25)

    def test_same_dims_is_identity(self) -> None:
        data = np.random.default_rng(1).normal(size=(6, 6, 6))

        assert np.array_equal(resample_grid(data, (6, 6, 6)), data)

    def test_linear_ramp_is_reproduced(self) -> None:
        """Upsampling a linear ramp keeps it linear away from the clamped borders."""
        ramp = np.broadcast_to(np.arange(8, dtype=np.float64)[:, None, None], (8, 2, 2))
        grid = resample_grid(ramp, (16, 2, 2))
        interior = grid[1:-1, 0, 0]

        assert np.allclose(np.diff(interior), 0.5)

    def test_rejects_bad_target(self) -> None:
        with pytest.raises(ValueError, match="3 positive"):
            resample_grid(np.zeros((2, 2, 2)), (2, 0, 2))


class TestNormalize:
    """Tests for z-scoring."""

    def test_zero_mean_unit_std(self) -> None:
        data = np.random.default_rng(2).normal(loc=5.0, scale=3.0, size=(8, 8, 8))
        normalized = normalize_intensity(Volume(data=data)).data

        assert normalized.mean() == pytest.approx(0.0, abs=1e-12)
        assert normalized.std() == pytest.approx(1.0)

    def test_constant_grid_maps_to_zeros(self) -> None:
        assert np.array_equal(zscore(np.full((3, 3, 3), 7.0)), np.zeros((3, 3, 3)))

    @given(
        scale=st.floats(0.01, 100.0),
        shift=st.floats(-1e3, 1e3),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=50, deadline=None)
    def test_affine_intensity_change_is_removed(
        self, scale: float, shift: float, seed: int
    ) -> None:
        data = np.random.default_rng(seed).normal(size=(6, 6, 6))

        assert np.allclose(zscore(scale * data + shift), zscore(data), atol=1e-5)


class TestCrop:
    """Tests for axis-aligned cropping."""

    def test_crop_returns_the_window(self) -> None:
        data = np.arange(1000, dtype=np.float64).reshape(10, 10, 10)
        patch = crop(Volume(data=data), (2, 3, 4), 5)

        assert patch.shape == (5, 5, 5)
        assert np.array_equal(patch.data, data[2:7, 3:8, 4:9])
        assert patch.origin == (2.0, 3.0, 4.0)

    @pytest.mark.parametrize("start", [(-1, 0, 0), (0, 6, 0), (0, 0, 9)])
    def test_crop_outside_raises(self, start: tuple[int, int, int]) -> None:
        with pytest.raises(ExtractionError):
            crop(Volume(data=np.zeros((10, 10, 10))), start, 5)


class TestVolumeModel:
    """Tests for the Volume value type."""

    def test_rejects_non_3d_data(self) -> None:
        with pytest.raises(VolumeShapeError):
            Volume(data=np.zeros((4, 4)))

    def test_rejects_non_positive_spacing(self) -> None:
        with pytest.raises(ValueError, match="spacing"):
            Volume(data=np.zeros((2, 2, 2)), spacing=(1.0, 0.0, 1.0))

    def test_data_is_read_only(self) -> None:
        volume = Volume(data=np.zeros((2, 2, 2)))

        with pytest.raises(ValueError):
            volume.data[0, 0, 0] = 1.0
