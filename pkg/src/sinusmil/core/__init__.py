"""Pure numpy/scipy/scikit-learn functions of the pipeline."""

from sinusmil.core.ensemble import (
    average_probabilities,
    ensemble_result,
    probabilities_from_logits,
)
from sinusmil.core.metrics import aggregate, compute_auprc, compute_f1, score_fold
from sinusmil.core.registration import (
    RegistrationResult,
    apply_transform,
    normalized_cross_correlation,
    register,
)
from sinusmil.core.sampling import (
    crop_window,
    derive_seed,
    extract_all,
    extract_instance,
    fit_centroid_model,
    sample_centroids,
)
from sinusmil.core.splits import make_splits
from sinusmil.core.validation import (
    filter_errors,
    filter_warnings,
    has_errors,
    validate_config,
    validate_manifest,
)
from sinusmil.core.volume import crop, flip_lr, normalize_intensity, resample, zscore

__all__ = [
    # volume
    "resample",
    "flip_lr",
    "zscore",
    "normalize_intensity",
    "crop",
    # registration
    "RegistrationResult",
    "register",
    "apply_transform",
    "normalized_cross_correlation",
    # sampling
    "fit_centroid_model",
    "derive_seed",
    "sample_centroids",
    "crop_window",
    "extract_instance",
    "extract_all",
    # splits
    "make_splits",
    # ensemble
    "probabilities_from_logits",
    "average_probabilities",
    "ensemble_result",
    # metrics
    "compute_auprc",
    "compute_f1",
    "aggregate",
    "score_fold",
    # validation
    "validate_manifest",
    "validate_config",
    "has_errors",
    "filter_errors",
    "filter_warnings",
]
