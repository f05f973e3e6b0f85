"""Stage orchestration that reads and writes run directories."""

from sinusmil.experiment.evaluation import (
    CrossValidationResult,
    build_report,
    cross_validate,
    evaluate,
    fold_metrics,
    summarize_sweep,
    sweep,
    write_sweep_series,
)
from sinusmil.experiment.preprocess import (
    Cohort,
    extract_cohort,
    generate_cohort,
    rebase_manifest,
    register_cohort,
)

__all__ = [
    "Cohort",
    "generate_cohort",
    "register_cohort",
    "extract_cohort",
    "rebase_manifest",
    "CrossValidationResult",
    "evaluate",
    "cross_validate",
    "sweep",
    "fold_metrics",
    "build_report",
    "summarize_sweep",
    "write_sweep_series",
]
