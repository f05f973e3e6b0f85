"""Synthetic phantom specification and ground-truth models."""

from __future__ import annotations

import sys
from enum import Enum
from itertools import combinations

from pydantic import BaseModel, Field, model_validator

from sinusmil.models.anatomy import Side
from sinusmil.models.transform import RigidTransform

if sys.version_info >= (3, 11):
    from typing import Self
else:
    from typing_extensions import Self

Vector3 = tuple[float, float, float]


class LesionAssignment(str, Enum):
    """How anomalous regions are drawn across the cohort."""

    QUOTA = "quota"  # exactly round(p * regions) anomalous regions
    BERNOULLI = "bernoulli"  # independent draw per region


class IntensityLevels(BaseModel, frozen=True):
    """Tissue classes of the phantom (arbitrary units)."""

    tissue: float = 1.0
    cavity: float = 0.1
    lesion: float = 2.2
    shell: float = 1.6


class PhantomSpec(BaseModel, frozen=True):
    """Head-like phantom cohort with two air-filled cavities.

    Geometry is in voxels of the phantom grid; defaults target a 128^3 grid.

    Attributes:
        n_subjects: Cohort size
        dims: Grid size
        spacing: Voxel size (mm)
        head_semi_axes: Semi-axes of the head ellipsoid
        shell_thickness: Thickness of the bright outer shell
        left_centroid: Nominal left cavity centroid
        right_centroid: Nominal right cavity centroid
        centroid_jitter: Inter-subject std of cavity centroids, per axis
        cavity_radius_range: Range of cavity semi-axes
        lesion_probability: Probability that a region carries a lesion
        lesion_assignment: quota or bernoulli
        lesion_radius_range: Range of lesion radii
        lesion_border_bias: Fraction of lesions pushed against the cavity wall
        levels: Intensity levels
        noise_std: Std of additive Gaussian noise
        smoothing_sigma: Gaussian smoothing of the anatomy before noise
        max_rotation: Per-axis rigid perturbation bound (degrees)
        max_translation: Per-axis rigid perturbation bound (voxels)
        n_annotated: Subjects that receive centroid annotations
        excluded_sinuses: Regions explicitly excluded from the dataset
        seed: Master seed
    """

    n_subjects: int = Field(default=299, ge=1)
    dims: tuple[int, int, int] = (128, 128, 128)
    spacing: Vector3 = (1.0, 1.0, 1.0)
    head_semi_axes: Vector3 = (50.0, 56.0, 54.0)
    shell_thickness: float = Field(default=4.0, ge=0.0)
    left_centroid: Vector3 = (44.0, 80.0, 46.0)
    right_centroid: Vector3 = (83.0, 80.0, 46.0)
    centroid_jitter: Vector3 = (2.5, 2.5, 2.5)
    cavity_radius_range: tuple[float, float] = (11.0, 14.0)
    lesion_probability: float = Field(default=0.32, ge=0.0, le=1.0)
    lesion_assignment: LesionAssignment = LesionAssignment.QUOTA
    lesion_radius_range: tuple[float, float] = (3.0, 6.0)
    lesion_border_bias: float = Field(default=0.5, ge=0.0, le=1.0)
    levels: IntensityLevels = IntensityLevels()
    noise_std: float = Field(default=0.05, ge=0.0)
    smoothing_sigma: float = Field(default=1.0, ge=0.0)
    max_rotation: float = Field(default=10.0, ge=0.0)
    max_translation: float = Field(default=10.0, ge=0.0)
    n_annotated: int = Field(default=20, ge=0)
    excluded_sinuses: int = Field(default=0, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def validate_geometry(self) -> Self:
        """Check cavity containment, lesion fit and level separation."""
        if min(self.dims) < 8:
            raise ValueError(f"dims must be at least 8 per axis, got {self.dims}")
        lo, hi = self.cavity_radius_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid cavity_radius_range {self.cavity_radius_range}")
        lesion_lo, lesion_hi = self.lesion_radius_range
        if not 0 < lesion_lo <= lesion_hi:
            raise ValueError(f"invalid lesion_radius_range {self.lesion_radius_range}")
        if lesion_hi >= lo:
            raise ValueError(
                f"lesions up to radius {lesion_hi} do not fit cavities of radius {lo}"
            )
        for name, centroid in (("left", self.left_centroid), ("right", self.right_centroid)):
            for axis in range(3):
                reach = 3.0 * self.centroid_jitter[axis] + hi
                if centroid[axis] - reach < 0 or centroid[axis] + reach > self.dims[axis] - 1:
                    raise ValueError(
                        f"{name} cavity can leave the volume along axis {axis} at 3 sigma"
                    )
        levels = self.levels.model_dump()
        for (a, va), (b, vb) in combinations(levels.items(), 2):
            if abs(va - vb) < 5.0 * self.noise_std:
                raise ValueError(
                    f"levels '{a}' and '{b}' differ by less than 5x noise_std ({self.noise_std})"
                )
        if self.n_annotated > self.n_subjects:
            raise ValueError("n_annotated cannot exceed n_subjects")
        if self.excluded_sinuses > self.n_subjects:
            raise ValueError("at most one region per subject can be excluded")
        return self

    def nominal_centroid(self, side: Side) -> Vector3:
        return self.left_centroid if side is Side.LEFT else self.right_centroid

    def scaled_to(self, size: int) -> Self:
        """Rescale the default 128-voxel geometry to a cubic grid of `size`.

        Intensities, probabilities and rotations are kept; lengths scale by
        size / 128 with voxel centers aligned.
        """
        s = size / 128.0

        def point(v: Vector3) -> Vector3:
            return ((v[0] + 0.5) * s - 0.5, (v[1] + 0.5) * s - 0.5, (v[2] + 0.5) * s - 0.5)

        def length(v: Vector3) -> Vector3:
            return (v[0] * s, v[1] * s, v[2] * s)

        return self.model_validate(
            {
                **self.model_dump(),
                "dims": (size, size, size),
                "head_semi_axes": length(self.head_semi_axes),
                "shell_thickness": self.shell_thickness * s,
                "left_centroid": point(self.left_centroid),
                "right_centroid": point(self.right_centroid),
                "centroid_jitter": length(self.centroid_jitter),
                "cavity_radius_range": (
                    self.cavity_radius_range[0] * s,
                    self.cavity_radius_range[1] * s,
                ),
                "lesion_radius_range": (
                    self.lesion_radius_range[0] * s,
                    self.lesion_radius_range[1] * s,
                ),
                "max_translation": self.max_translation * s,
            }
        )


class RegionTruth(BaseModel, frozen=True):
    """Ground-truth geometry of one region in template space.

    Attributes:
        centroid: Cavity centre (phantom voxels)
        semi_axes: Cavity semi-axes
        lesion_center: Lesion centre, if a lesion is present
        lesion_radius: Lesion radius, if a lesion is present
    """

    centroid: Vector3
    semi_axes: Vector3
    lesion_center: Vector3 | None = None
    lesion_radius: float | None = None

    @property
    def has_lesion(self) -> bool:
        return self.lesion_center is not None


class SubjectTruth(BaseModel, frozen=True):
    """Ground truth for one phantom subject."""

    subject_id: str
    perturbation: RigidTransform
    left: RegionTruth
    right: RegionTruth
    excluded_side: Side | None = None

    def region(self, side: Side) -> RegionTruth:
        return self.left if side is Side.LEFT else self.right
