"""Multiple-instance ensembling of per-instance class probabilities."""

from __future__ import annotations

import numpy as np
import numpy.typing as npt
from scipy.special import softmax

from sinusmil.errors import EnsembleError
from sinusmil.models.anatomy import Label, Side
from sinusmil.models.report import EnsembleResult


def probabilities_from_logits(logits: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Row-wise softmax of an (n, 2) logit matrix, in float64."""
    result: npt.NDArray[np.float64] = softmax(np.asarray(logits, dtype=np.float64), axis=-1)
    return result


def average_probabilities(probabilities: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Arithmetic mean of n probability vectors, shape (n, 2) -> (2,).

    Raises:
        EnsembleError: If no vectors are given.
    """
    stacked = np.asarray(probabilities, dtype=np.float64)
    if stacked.ndim != 2 or stacked.shape[0] < 1:
        raise EnsembleError(f"expected an (n, classes) matrix with n >= 1, got {stacked.shape}")
    mean: npt.NDArray[np.float64] = stacked.mean(axis=0)
    return mean


def ensemble_result(
    subject_id: str,
    side: Side,
    probabilities: npt.ArrayLike,
    *,
    threshold: float = 0.5,
    label: Label | None = None,
) -> EnsembleResult:
    """Average per-instance probabilities of one (subject, side) and threshold them."""
    stacked = np.asarray(probabilities, dtype=np.float64)
    mean = average_probabilities(stacked)
    prediction = Label.ANOMALY if mean[1] >= threshold else Label.NORMAL
    return EnsembleResult(
        subject_id=subject_id,
        side=side,
        probabilities=(float(mean[0]), float(mean[1])),
        prediction=prediction,
        n_instances=int(stacked.shape[0]),
        threshold=threshold,
        label=label,
    )
