"""Pure volume operations: resample, flip, normalize, crop.

All functions return new Volumes and never modify their input.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from sinusmil.errors import ExtractionError
from sinusmil.models.volume import Volume

FloatGrid = npt.NDArray[np.float64]


def _interpolate_axis(data: FloatGrid, axis: int, size: int) -> FloatGrid:
    """Linear interpolation along one axis with boundary clamping.

    Output voxel i samples source position (i + 0.5) * D / size - 0.5, so
    voxel centers of both grids span the same physical extent.
    """
    length = data.shape[axis]
    if size == length:
        return data
    positions = (np.arange(size, dtype=np.float64) + 0.5) * length / size - 0.5
    positions = np.clip(positions, 0.0, length - 1)
    lower = np.floor(positions).astype(np.intp)
    upper = np.minimum(lower + 1, length - 1)
    weight_shape = [1, 1, 1]
    weight_shape[axis] = size
    weights = (positions - lower).reshape(weight_shape)
    a = np.take(data, lower, axis=axis)
    b = np.take(data, upper, axis=axis)
    # a + w * (b - a) keeps constant runs exact
    result: FloatGrid = a + weights * (b - a)
    return result


def resample_grid(data: npt.ArrayLike, target_dims: Sequence[int]) -> FloatGrid:
    """Trilinear resampling of a raw grid (separable per-axis interpolation)."""
    grid = np.asarray(data, dtype=np.float64)
    dims = tuple(int(d) for d in target_dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"target dims must be 3 positive integers, got {tuple(target_dims)}")
    for axis, size in enumerate(dims):
        grid = _interpolate_axis(grid, axis, size)
    return grid


def resample(volume: Volume, target_dims: Sequence[int]) -> Volume:
    """Resample a volume to target_dims, preserving its physical extent.

    Spacing scales by D / target along each axis and the origin moves to the
    center of the new first voxel.
    """
    data = resample_grid(volume.data, target_dims)
    scale = [old / new for old, new in zip(volume.shape, data.shape)]
    spacing = tuple(s * f for s, f in zip(volume.spacing, scale))
    origin = tuple(
        o + s * (0.5 * f - 0.5) for o, s, f in zip(volume.origin, volume.spacing, scale)
    )
    return Volume(data=data, spacing=spacing, origin=origin, orientation=volume.orientation)  # type: ignore[arg-type]


def flip_lr(volume: Volume) -> Volume:
    """Mirror a canonical volume across its sagittal midplane (reverse axis 0)."""
    return volume.with_data(volume.data[::-1, :, :])


def zscore(data: npt.ArrayLike) -> FloatGrid:
    """Zero-mean unit-std grid; a constant grid maps to zeros."""
    grid = np.asarray(data, dtype=np.float64)
    std = float(grid.std())
    if std == 0.0 or not np.isfinite(std):
        return np.zeros_like(grid)
    result: FloatGrid = (grid - grid.mean()) / std
    return result


def normalize_intensity(volume: Volume) -> Volume:
    """Z-score the intensities of a volume."""
    return volume.with_data(zscore(volume.data))


def crop(volume: Volume, start: Sequence[int], size: int | Sequence[int]) -> Volume:
    """Cut an axis-aligned box starting at `start`.

    Raises:
        ExtractionError: If the box does not lie fully inside the volume.
    """
    sizes = (int(size),) * 3 if isinstance(size, int) else tuple(int(s) for s in size)
    begin = tuple(int(s) for s in start)
    for axis in range(3):
        if begin[axis] < 0 or begin[axis] + sizes[axis] > volume.shape[axis] or sizes[axis] < 1:
            raise ExtractionError(
                f"crop window start={begin} size={sizes} exceeds volume {volume.shape}"
            )
    window = tuple(slice(b, b + s) for b, s in zip(begin, sizes))
    origin = tuple(o + b * sp for o, b, sp in zip(volume.origin, begin, volume.spacing))
    return Volume(
        data=volume.data[window],
        spacing=volume.spacing,
        origin=origin,  # type: ignore[arg-type]
        orientation=volume.orientation,
    )
