"""Gaussian centroid models and stochastic sub-volume extraction."""

from __future__ import annotations

import hashlib
import logging
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence

import numpy as np

from sinusmil.core.volume import crop, flip_lr, resample_grid, zscore
from sinusmil.errors import CentroidModelError, ExtractionError
from sinusmil.models.anatomy import (
    CentroidAnnotation,
    CentroidModel,
    Label,
    Side,
    SideCentroidModel,
)
from sinusmil.models.settings import INSTANCE_DIMS
from sinusmil.models.volume import Dims3, Instance, Vector3, Volume

logger = logging.getLogger(__name__)

SeedLike = int | np.random.SeedSequence


def fit_centroid_model(annotations: Iterable[CentroidAnnotation]) -> CentroidModel:
    """Per-side, per-axis sample mean and unbiased (n-1) standard deviation.

    Raises:
        CentroidModelError: If either side has fewer than 2 annotations.
    """
    by_side: dict[Side, list[tuple[float, float, float]]] = defaultdict(list)
    for annotation in annotations:
        by_side[annotation.side].append(annotation.centroid)

    fitted: dict[str, SideCentroidModel] = {}
    for side in Side:
        points = np.asarray(by_side[side], dtype=np.float64)
        if len(points) < 2:
            raise CentroidModelError(
                f"{side.value} side has {len(points)} annotation(s); at least 2 are required"
            )
        mean = points.mean(axis=0)
        std = points.std(axis=0, ddof=1)
        fitted[side.value] = SideCentroidModel(
            mean=(float(mean[0]), float(mean[1]), float(mean[2])),
            std=(float(std[0]), float(std[1]), float(std[2])),
            n_annotations=len(points),
        )
        logger.debug("Fitted %s centroid model from %d annotations", side.value, len(points))
    return CentroidModel(left=fitted["left"], right=fitted["right"])


def derive_seed(master: int, subject_id: str, side: Side) -> int:
    """Seed for one (subject, side), independent of processing order."""
    digest = hashlib.sha256(f"{subject_id}\x00{side.value}".encode()).digest()
    sequence = np.random.SeedSequence([master, int.from_bytes(digest[:8], "little")])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def sample_centroids(
    model: CentroidModel,
    side: Side,
    n: int,
    seed: SeedLike,
) -> list[Vector3]:
    """Draw n centroids, each axis from its own univariate Gaussian."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    params = model.for_side(side)
    mean = np.asarray(params.mean)
    std = np.asarray(params.std)
    rng = np.random.default_rng(seed)
    draws = rng.normal(loc=mean, scale=std, size=(n, 3))
    draws = np.where(std == 0.0, mean, draws)
    return [(float(d[0]), float(d[1]), float(d[2])) for d in draws]


def crop_window(centroid: Sequence[float], patch_size: int, dims: Sequence[int]) -> Dims3:
    """First index of the cube of side patch_size centered on the centroid.

    The start is rounded half-to-even and clamped to [0, D - P], so the
    window always lies inside the grid and mirrored centroids give mirrored
    windows.

    Raises:
        ExtractionError: If the cube is larger than the grid.
    """
    starts = []
    for axis in range(3):
        size = int(dims[axis])
        if patch_size < 1 or patch_size > size:
            raise ExtractionError(
                f"patch size {patch_size} does not fit axis {axis} of size {size}"
            )
        start = int(np.rint(centroid[axis] - (patch_size - 1) / 2.0))
        starts.append(min(max(start, 0), size - patch_size))
    return (starts[0], starts[1], starts[2])


def extract_instance(
    volume: Volume,
    centroid: Sequence[float],
    patch_size: int,
    side: Side,
    *,
    subject_id: str = "",
    instance_dims: Sequence[int] = INSTANCE_DIMS,
    label: Label | None = None,
) -> Instance:
    """Crop, flip (right side), resample and z-score one cubic sub-volume.

    Raises:
        ExtractionError: If the patch does not fit the volume.
    """
    start = crop_window(centroid, patch_size, volume.shape)
    patch = crop(volume, start, patch_size)
    if side is Side.RIGHT:
        patch = flip_lr(patch)
    data = zscore(resample_grid(patch.data, instance_dims))
    return Instance(
        subject_id=subject_id,
        side=side,
        centroid=(float(centroid[0]), float(centroid[1]), float(centroid[2])),
        patch_size=patch_size,
        window_start=start,
        data=data,
        label=label,
    )


def extract_all(
    volume: Volume,
    model: CentroidModel,
    n: int,
    patch_size: int,
    seed: int,
    *,
    subject_id: str = "",
    sides: Sequence[Side] = (Side.LEFT, Side.RIGHT),
    labels: Mapping[Side, Label] | None = None,
    instance_dims: Sequence[int] = INSTANCE_DIMS,
    use_mean_for_single: bool = False,
) -> list[Instance]:
    """Extract n instances per side (2n for both sides), left side first.

    Draws use derive_seed(seed, subject_id, side), so results do not depend
    on the order subjects are processed in.
    """
    instances: list[Instance] = []
    for side in sides:
        if n == 1 and use_mean_for_single:
            centroids: list[Vector3] = [model.for_side(side).mean]
        else:
            centroids = sample_centroids(model, side, n, derive_seed(seed, subject_id, side))
        for centroid in centroids:
            instances.append(
                extract_instance(
                    volume,
                    centroid,
                    patch_size,
                    side,
                    subject_id=subject_id,
                    instance_dims=instance_dims,
                    label=labels.get(side) if labels else None,
                )
            )
    return instances
