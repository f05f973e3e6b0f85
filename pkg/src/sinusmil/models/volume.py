"""Volume and Instance value types.

Both carry numpy grids, so they are frozen dataclasses rather than pydantic
models. Grids are stored as read-only float64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from sinusmil.errors import VolumeShapeError
from sinusmil.models.anatomy import Label, Side

Vector3 = tuple[float, float, float]
Dims3 = tuple[int, int, int]

# Axis 0 = left-right, axis 1 = posterior-anterior, axis 2 = inferior-superior.
CANONICAL_ORIENTATION: tuple[str, str, str] = ("R", "A", "S")

_AXIS_PAIRS = ({"L", "R"}, {"P", "A"}, {"I", "S"})


def _frozen_grid(data: npt.ArrayLike) -> npt.NDArray[np.float64]:
    grid = np.asarray(data, dtype=np.float64)
    if grid.flags.writeable:
        grid = grid.copy()
        grid.flags.writeable = False
    return grid


def _check_orientation(orientation: tuple[str, ...]) -> None:
    if len(orientation) != 3:
        raise ValueError(f"orientation needs 3 axis codes, got {orientation}")
    for pair in _AXIS_PAIRS:
        if sum(code in pair for code in orientation) != 1:
            raise ValueError(f"orientation {orientation} is not an axis permutation")


@dataclass(frozen=True, eq=False)
class Volume:
    """A 3D scalar grid with voxel spacing (mm) and orientation metadata.

    Attributes:
        data: Intensity grid, arbitrary units
        spacing: Physical size of a voxel along each grid axis (mm)
        origin: World position of voxel (0, 0, 0) (mm)
        orientation: Anatomical direction each grid axis points to
    """

    data: npt.NDArray[np.float64]
    spacing: Vector3 = (1.0, 1.0, 1.0)
    origin: Vector3 = (0.0, 0.0, 0.0)
    orientation: tuple[str, str, str] = CANONICAL_ORIENTATION

    def __post_init__(self) -> None:
        grid = _frozen_grid(self.data)
        if grid.ndim != 3:
            raise VolumeShapeError(grid.shape)
        if min(grid.shape) < 1:
            raise VolumeShapeError(grid.shape)
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or min(spacing) <= 0:
            raise ValueError(f"spacing must be 3 positive values, got {self.spacing}")
        _check_orientation(self.orientation)
        object.__setattr__(self, "data", grid)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "orientation", tuple(self.orientation))

    @property
    def shape(self) -> Dims3:
        s = self.data.shape
        return (int(s[0]), int(s[1]), int(s[2]))

    @property
    def extent_mm(self) -> Vector3:
        """Physical extent of the grid along each axis."""
        return (
            self.shape[0] * self.spacing[0],
            self.shape[1] * self.spacing[1],
            self.shape[2] * self.spacing[2],
        )

    @property
    def is_canonical(self) -> bool:
        return self.orientation == CANONICAL_ORIENTATION

    def with_data(self, data: npt.ArrayLike) -> Volume:
        """Return a volume with new voxels and this volume's metadata."""
        return Volume(
            data=data, spacing=self.spacing, origin=self.origin, orientation=self.orientation
        )


@dataclass(frozen=True, eq=False)
class Instance:
    """One extracted, flipped-if-right, resampled and normalized sub-volume.

    Attributes:
        subject_id: Subject the sub-volume was cut from
        side: Region side; right-side instances are mirrored before storage
        centroid: Sampled centroid in registered voxel coordinates
        patch_size: Cube side P of the crop before resampling
        window_start: First voxel index of the clamped crop window
        data: Normalized grid at the instance resolution (64^3)
        label: Ground-truth label, once joined with subject records
    """

    subject_id: str
    side: Side
    centroid: Vector3
    patch_size: int
    window_start: Dims3
    data: npt.NDArray[np.float64] = field(repr=False)
    label: Label | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _frozen_grid(self.data))
        if self.data.ndim != 3:
            raise VolumeShapeError(self.data.shape)

    @property
    def shape(self) -> Dims3:
        s = self.data.shape
        return (int(s[0]), int(s[1]), int(s[2]))
