"""Rigid intensity-based registration.

Normalized cross-correlation is maximized over six parameters (three Euler
angles, three translations) with a coordinate-wise adaptive step search on a
coarse-to-fine pyramid. No warp gradients are needed.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from sinusmil.core.volume import resample
from sinusmil.errors import RegistrationError
from sinusmil.models.settings import RegistrationConfig
from sinusmil.models.transform import RigidTransform
from sinusmil.models.volume import Volume

logger = logging.getLogger(__name__)

_STEP_GROWTH = 1.5
_STEP_SHRINK = 0.5


@dataclass(frozen=True)
class RegistrationResult:
    """Outcome of one registration.

    Attributes:
        transform: Transform mapping the moving volume onto the fixed grid
        warped: Moving volume resampled onto the fixed grid
        converged: True if every level reached its minimum step in budget
        ncc_before: NCC of fixed and moving before alignment
        ncc_after: NCC of fixed and warped
        iterations: Optimizer sweeps spent per pyramid level
    """

    transform: RigidTransform
    warped: Volume
    converged: bool
    ncc_before: float
    ncc_after: float
    iterations: tuple[int, ...]


def normalized_cross_correlation(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Pearson correlation of two equally shaped grids; 0 if either is constant."""
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"grids differ in size: {x.size} vs {y.size}")
    x = x - x.mean()
    y = y - y.mean()
    denominator = float(np.sqrt(np.dot(x, x) * np.dot(y, y)))
    if denominator == 0.0:
        return 0.0
    return float(np.dot(x, y) / denominator)


def apply_transform(
    volume: Volume,
    transform: RigidTransform,
    target_dims: Sequence[int] | None = None,
    target_spacing: Sequence[float] | None = None,
    target_origin: Sequence[float] | None = None,
) -> Volume:
    """Warp a volume onto a target grid with trilinear interpolation.

    The transform moves content: a point x of the source maps to
    T(x) = M (x - c) + c + t on the target, with M and t in target voxels.
    Samples outside the source clamp to the boundary voxel.

    Args:
        volume: Source volume.
        transform: Rigid transform (rotation about the grid center).
        target_dims: Target grid size (default: source size).
        target_spacing: Target voxel size (default: preserves physical extent).
        target_origin: World position of the first target voxel (default: the
            target grid shares the source grid's physical center).
    """
    source_dims = np.asarray(volume.shape, dtype=np.float64)
    dims = tuple(int(d) for d in (target_dims or volume.shape))
    target = np.asarray(dims, dtype=np.float64)
    if target_spacing is None:
        spacing = np.asarray(volume.spacing) * source_dims / target
    else:
        spacing = np.asarray(target_spacing, dtype=np.float64)
    target_spacing_t = (float(spacing[0]), float(spacing[1]), float(spacing[2]))

    scale = np.diag(spacing / np.asarray(volume.spacing))
    m_inv = np.linalg.inv(transform.voxel_matrix(target_spacing_t))
    matrix = scale @ m_inv
    source_center = (source_dims - 1.0) / 2.0
    target_center = (target - 1.0) / 2.0
    offset = source_center - matrix @ (target_center + np.asarray(transform.translation))

    data = ndimage.affine_transform(
        volume.data,
        matrix,
        offset=offset,
        output_shape=dims,
        order=1,
        mode="nearest",
    )
    if target_origin is None:
        source_origin = np.asarray(volume.origin, dtype=np.float64)
        center = source_origin + np.asarray(volume.spacing) * source_center
        origin = center - spacing * target_center
    else:
        origin = np.asarray(target_origin, dtype=np.float64)
    return Volume(
        data=data,
        spacing=target_spacing_t,
        origin=(float(origin[0]), float(origin[1]), float(origin[2])),
        orientation=volume.orientation,
    )


def _pyramid(volume: Volume, factor: int) -> Volume:
    if factor == 1:
        return volume
    smoothed = volume.with_data(ndimage.gaussian_filter(volume.data, sigma=0.5 * factor))
    dims = tuple(max(1, round(d / factor)) for d in volume.shape)
    return resample(smoothed, dims)


def _level_transform(
    params: npt.NDArray[np.float64], scale: npt.NDArray[np.float64]
) -> RigidTransform:
    t = params[3:] * scale
    return RigidTransform(
        rotation=(float(params[0]), float(params[1]), float(params[2])),
        translation=(float(t[0]), float(t[1]), float(t[2])),
    )


def _search_level(
    fixed: Volume,
    moving: Volume,
    params: npt.NDArray[np.float64],
    scale: npt.NDArray[np.float64],
    steps: npt.NDArray[np.float64],
    min_steps: npt.NDArray[np.float64],
    max_iterations: int,
) -> tuple[npt.NDArray[np.float64], int, bool]:
    """Coordinate-wise step search; returns (params, sweeps, converged)."""

    def score(candidate: npt.NDArray[np.float64]) -> float:
        warped = apply_transform(
            moving, _level_transform(candidate, scale), fixed.shape, fixed.spacing
        )
        return normalized_cross_correlation(fixed.data, warped.data)

    best = score(params)
    steps = steps.copy()
    params = params.copy()
    for sweep in range(1, max_iterations + 1):
        for k in range(params.size):
            if steps[k] < min_steps[k]:
                continue
            moved = False
            for direction in (1.0, -1.0):
                candidate = params.copy()
                candidate[k] += direction * steps[k]
                value = score(candidate)
                if value > best:
                    best, params, moved = value, candidate, True
                    break
            steps[k] *= _STEP_GROWTH if moved else _STEP_SHRINK
        if np.all(steps < min_steps):
            return params, sweep, True
    return params, max_iterations, False


def register(
    fixed: Volume,
    moving: Volume,
    config: RegistrationConfig | None = None,
) -> RegistrationResult:
    """Rigidly align `moving` to `fixed` by maximizing NCC.

    The returned transform never scores below identity at full resolution.

    Raises:
        RegistrationError: In strict mode, if a level exhausts its budget.
    """
    config = config or RegistrationConfig()
    full_dims = np.asarray(fixed.shape, dtype=np.float64)
    params = np.zeros(6)
    iterations: list[int] = []
    converged = True
    coarsest = config.levels[0]

    for factor in config.levels:
        fixed_level = _pyramid(fixed, factor)
        moving_level = _pyramid(moving, factor)
        scale = np.asarray(fixed_level.shape, dtype=np.float64) / full_dims
        relative = factor / coarsest
        steps = np.array(
            [config.rotation_step * relative] * 3 + [config.translation_step * relative] * 3
        )
        min_steps = np.array(
            [config.min_rotation_step * factor] * 3 + [config.min_translation_step * factor] * 3
        )
        params, sweeps, level_converged = _search_level(
            fixed_level, moving_level, params, scale, steps, min_steps, config.max_iterations
        )
        iterations.append(sweeps)
        converged = converged and level_converged
        logger.debug(
            "Level %d: %d sweeps, converged=%s, params=%s",
            factor,
            sweeps,
            level_converged,
            np.round(params, 3).tolist(),
        )

    transform = _level_transform(params, np.ones(3))
    identity_warp = apply_transform(
        moving, RigidTransform.identity(), fixed.shape, fixed.spacing, fixed.origin
    )
    ncc_before = normalized_cross_correlation(fixed.data, identity_warp.data)
    warped = apply_transform(moving, transform, fixed.shape, fixed.spacing, fixed.origin)
    ncc_after = normalized_cross_correlation(fixed.data, warped.data)
    if ncc_after < ncc_before:
        logger.warning(
            "Registration worsened NCC (%.4f < %.4f); keeping identity", ncc_after, ncc_before
        )
        transform, warped, ncc_after = RigidTransform.identity(), identity_warp, ncc_before

    result = RegistrationResult(
        transform=transform,
        warped=warped,
        converged=converged,
        ncc_before=ncc_before,
        ncc_after=ncc_after,
        iterations=tuple(iterations),
    )
    if not converged:
        message = f"registration did not converge within {config.max_iterations} sweeps per level"
        if config.strict:
            raise RegistrationError(message, result)
        logger.warning(message)
    return result
