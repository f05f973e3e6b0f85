"""Prediction and metric report models."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, computed_field, model_validator

from sinusmil.models.anatomy import Label, Side

StdEstimator = Literal["sample", "population"]


class EnsembleResult(BaseModel, frozen=True):
    """Averaged class probabilities for one (subject, side).

    Attributes:
        subject_id: Subject
        side: Region side
        probabilities: (normal, anomaly) probabilities summing to 1
        prediction: ANOMALY iff the anomaly probability >= threshold
        n_instances: Number of instances averaged
        threshold: Decision threshold used for the prediction
        label: Ground truth, when known
    """

    subject_id: str
    side: Side
    probabilities: tuple[float, float]
    prediction: Label
    n_instances: int = Field(ge=1)
    threshold: float = 0.5
    label: Label | None = None

    @model_validator(mode="after")
    def validate_probabilities(self) -> EnsembleResult:
        """Probabilities are non-negative and sum to one."""
        if min(self.probabilities) < 0:
            raise ValueError(f"negative probability in {self.probabilities}")
        if abs(sum(self.probabilities) - 1.0) > 1e-6:
            raise ValueError(f"probabilities {self.probabilities} do not sum to 1")
        return self

    @property
    def anomaly_probability(self) -> float:
        return self.probabilities[1]


class MetricSummary(BaseModel, frozen=True):
    """Mean and spread of one metric across folds."""

    mean: float
    std: float


class FoldMetrics(BaseModel, frozen=True):
    """Metrics of one cross-validation fold.

    Attributes:
        fold: Fold index
        auprc: Area under the precision-recall curve (average precision)
        f1: F1 of the anomaly class at the report threshold
        n_scores: Number of scored units (instances or regions)
        n_positive: Number of anomalous units
    """

    fold: int
    auprc: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    n_scores: int
    n_positive: int


class MetricsReport(BaseModel, frozen=True):
    """Per-fold metrics with their aggregate.

    Attributes:
        ensembled: True if scores are ensemble averages per region
        threshold: Decision threshold behind the F1 values
        std_estimator: "sample" (n-1) or "population" (n)
        n: Sample size N of the instances, if known
        patch_size: Patch size P of the instances, if known
        folds: Per-fold entries
        auprc: Mean and std of AUPRC across folds
        f1: Mean and std of F1 across folds
    """

    ensembled: bool
    threshold: float = 0.5
    std_estimator: StdEstimator = "sample"
    n: int | None = None
    patch_size: int | None = None
    folds: tuple[FoldMetrics, ...]
    auprc: MetricSummary
    f1: MetricSummary

    @computed_field  # type: ignore[prop-decorator]
    @property
    def fold_count(self) -> int:
        return len(self.folds)


class SweepRow(BaseModel, frozen=True):
    """One row of the N/P sweep results table."""

    n: int
    p: int
    fold: int
    ensembled: bool
    auprc: float
    f1: float


class GradientEntry(BaseModel, frozen=True):
    """Analytic vs finite-difference derivative of one scalar parameter."""

    parameter: str
    index: int
    analytic: float
    numeric: float
    relative_error: float


class GradientCheckReport(BaseModel, frozen=True):
    """Outcome of a finite-difference gradient check.

    Attributes:
        epsilon: Central-difference step
        tolerance: Largest accepted relative error
        entries: One row per sampled parameter entry
    """

    epsilon: float
    tolerance: float
    entries: tuple[GradientEntry, ...]

    @computed_field  # type: ignore[prop-decorator]
    @property
    def max_relative_error(self) -> float:
        return max((e.relative_error for e in self.entries), default=0.0)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance
