"""Side/label enums and centroid annotation models."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, field_validator

REGISTERED_MAX_INDEX = 127.0


class Side(str, Enum):
    """Which of the paired regions an annotation or instance belongs to."""

    LEFT = "left"
    RIGHT = "right"


class Label(str, Enum):
    """Per-region class. ANOMALY is the positive class."""

    NORMAL = "normal"
    ANOMALY = "anomaly"

    @property
    def target(self) -> int:
        """Class index used by the classifier (anomaly = 1)."""
        return 1 if self is Label.ANOMALY else 0

    @classmethod
    def from_target(cls, value: int) -> Label:
        return cls.ANOMALY if int(value) == 1 else cls.NORMAL


class CentroidAnnotation(BaseModel, frozen=True):
    """A manually recorded region centroid in the registered 128^3 space.

    Attributes:
        subject_id: Annotated subject
        side: left or right
        centroid: Voxel coordinates (x, y, z), each within [0, 127]
    """

    subject_id: str
    side: Side
    centroid: tuple[float, float, float]

    @field_validator("centroid")
    @classmethod
    def validate_bounds(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        """Ensure the centroid lies inside the registered grid."""
        for coord in value:
            if not 0.0 <= coord <= REGISTERED_MAX_INDEX:
                raise ValueError(
                    f"centroid {value} outside registered grid [0, {REGISTERED_MAX_INDEX:g}]"
                )
        return value


class SideCentroidModel(BaseModel, frozen=True):
    """Three univariate Gaussians (one per axis) for one side.

    Attributes:
        mean: Per-axis mean centroid (voxels)
        std: Per-axis standard deviation (voxels), unbiased estimator
        n_annotations: Number of annotations the estimate is based on
    """

    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    n_annotations: int = 0

    @field_validator("std")
    @classmethod
    def validate_std(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        """Standard deviations are non-negative."""
        if any(s < 0 for s in value):
            raise ValueError(f"standard deviations must be >= 0, got {value}")
        return value


class CentroidModel(BaseModel, frozen=True):
    """Per-side Gaussian centroid model (six Gaussians in total)."""

    left: SideCentroidModel
    right: SideCentroidModel

    def for_side(self, side: Side) -> SideCentroidModel:
        return self.left if side is Side.LEFT else self.right
