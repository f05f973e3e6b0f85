"""Binary classification metrics and cross-fold aggregation.

The anomaly class (target 1) is the positive class throughout.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
from sklearn.metrics import average_precision_score, f1_score

from sinusmil.errors import MetricsError
from sinusmil.models.report import FoldMetrics, MetricSummary, StdEstimator


def compute_auprc(scores: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    """Average precision: sum over thresholds of (R_n - R_{n-1}) * P_n, ties grouped.

    Raises:
        MetricsError: If there is no positive label or a score is not finite.
    """
    y_score = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(labels, dtype=np.int64)
    if not np.any(y_true == 1):
        raise MetricsError("AUPRC is undefined without positive labels")
    if not np.all(np.isfinite(y_score)):
        raise MetricsError("scores must be finite")
    return float(average_precision_score(y_true, y_score, pos_label=1))


def compute_f1(predictions: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    """F1 of the positive class; 0 when precision + recall is 0."""
    y_pred = np.asarray(predictions, dtype=np.int64)
    y_true = np.asarray(labels, dtype=np.int64)
    return float(f1_score(y_true, y_pred, pos_label=1, zero_division=0))


def aggregate(values: Sequence[float], estimator: StdEstimator = "sample") -> MetricSummary:
    """Mean and standard deviation across folds.

    "sample" divides by n - 1, "population" by n. A single value has std 0.
    """
    data = np.asarray(values, dtype=np.float64)
    if data.size == 0:
        raise MetricsError("cannot aggregate an empty list of values")
    ddof = 1 if estimator == "sample" else 0
    std = float(data.std(ddof=ddof)) if data.size > ddof else 0.0
    return MetricSummary(mean=float(data.mean()), std=std)


def score_fold(
    fold: int,
    scores: npt.ArrayLike,
    labels: npt.ArrayLike,
    threshold: float = 0.5,
) -> FoldMetrics:
    """AUPRC on anomaly probabilities and F1 at the threshold for one fold."""
    y_score = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(labels, dtype=np.int64)
    predictions = (y_score >= threshold).astype(np.int64)
    return FoldMetrics(
        fold=fold,
        auprc=compute_auprc(y_score, y_true),
        f1=compute_f1(predictions, y_true),
        n_scores=int(y_true.size),
        n_positive=int(np.sum(y_true == 1)),
    )
