"""Evaluation, cross-validation and the N/P sweep harness."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from sinusmil.core.metrics import aggregate, score_fold
from sinusmil.core.splits import make_splits
from sinusmil.errors import MetricsError, PrerequisiteError, SplitError
from sinusmil.experiment.preprocess import MANIFEST_DIR, extract_cohort
from sinusmil.io.checkpoint import load_checkpoint, save_checkpoint
from sinusmil.io.json import dump_report
from sinusmil.io.tables import (
    write_loss_curve,
    write_manifest,
    write_predictions,
    write_series,
    write_sweep_results,
)
from sinusmil.models.anatomy import CentroidModel
from sinusmil.models.manifest import Manifest, Split
from sinusmil.models.report import FoldMetrics, MetricsReport, StdEstimator, SweepRow
from sinusmil.models.settings import PipelineConfig, SweepConfig
from sinusmil.nn.inference import ManifestPrediction, predict_manifest
from sinusmil.nn.network import ResNet3d, build_network
from sinusmil.nn.training import TrainingOutcome, train

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.pt"
LOSS_CURVE_FILE = "loss_curve.tsv"
PREDICTIONS_FILE = "predictions.tsv"
INSTANCE_SCORES_FILE = "instance_scores.tsv"
METRICS_FILE = "metrics.json"
RESULTS_FILE = "results.tsv"


@dataclass(frozen=True)
class CrossValidationResult:
    """Ensembled and per-instance reports of one cross-validation run."""

    ensembled: MetricsReport
    instance: MetricsReport

    def report(self, ensembled: bool) -> MetricsReport:
        return self.ensembled if ensembled else self.instance


def fold_dir(root: Path, fold: int) -> Path:
    return root / f"fold_{fold}"


def fold_metrics(
    prediction: ManifestPrediction, fold: int, *, ensembled: bool, threshold: float = 0.5
) -> FoldMetrics:
    """Score per region (ensembled) or per instance.

    Raises:
        MetricsError: If an ensembled region carries no label.
    """
    if ensembled:
        unlabeled = [
            f"{r.subject_id}/{r.side.value}" for r in prediction.results if r.label is None
        ]
        if unlabeled:
            raise MetricsError(f"fold {fold}: no label for {', '.join(unlabeled)}")
        scores = [r.anomaly_probability for r in prediction.results]
        labels = [r.label.target for r in prediction.results if r.label is not None]
    else:
        scores = prediction.probabilities[:, 1].tolist()
        labels = [r.label.target for r in prediction.records]
    return score_fold(fold, scores, labels, threshold)


def build_report(
    folds: Sequence[FoldMetrics],
    *,
    ensembled: bool,
    threshold: float = 0.5,
    estimator: StdEstimator = "sample",
    n: int | None = None,
    patch_size: int | None = None,
) -> MetricsReport:
    """Attach mean and standard deviation across folds."""
    return MetricsReport(
        ensembled=ensembled,
        threshold=threshold,
        std_estimator=estimator,
        n=n,
        patch_size=patch_size,
        folds=tuple(folds),
        auprc=aggregate([f.auprc for f in folds], estimator),
        f1=aggregate([f.f1 for f in folds], estimator),
    )


def _require_folds(manifest: Manifest) -> tuple[int, ...]:
    folds = manifest.folds()
    if not folds:
        raise SplitError("manifest has no fold assignments; run 'sinusmil split' first")
    return folds


def _require_test(manifest: Manifest, fold: int) -> None:
    if not manifest.instances_in(Split.TEST, fold):
        raise MetricsError(f"test split of fold {fold} has no instances")


def evaluate(
    net: ResNet3d,
    manifest: Manifest,
    *,
    fold: int = 0,
    ensembled: bool = True,
    config: PipelineConfig | None = None,
) -> MetricsReport:
    """Score one trained fold on its test split.

    Raises:
        MetricsError: If the test split is empty or has no anomalous unit.
    """
    config = config or PipelineConfig()
    _require_test(manifest, fold)
    prediction = predict_manifest(
        net,
        manifest,
        fold=fold,
        threshold=config.evaluation.threshold,
        batch_size=config.train.batch_size,
        device=config.train.device,
    )
    metrics = fold_metrics(
        prediction, fold, ensembled=ensembled, threshold=config.evaluation.threshold
    )
    return build_report(
        [metrics],
        ensembled=ensembled,
        threshold=config.evaluation.threshold,
        estimator=config.evaluation.std_estimator,
        n=config.sampling.n,
        patch_size=config.sampling.patch_size,
    )


def train_folds(
    manifest: Manifest, config: PipelineConfig, out_dir: Path
) -> dict[int, TrainingOutcome]:
    """Train one network per fold; writes checkpoint.pt and loss_curve.tsv per fold."""
    outcomes = {}
    for fold in _require_folds(manifest):
        directory = fold_dir(out_dir, fold)
        directory.mkdir(parents=True, exist_ok=True)
        net = build_network(config.network, config.sampling.instance_dims)
        outcome = train(net, manifest, config.train, fold=fold)
        save_checkpoint(outcome.checkpoint, directory / CHECKPOINT_FILE)
        write_loss_curve((s.as_row() for s in outcome.history), directory / LOSS_CURVE_FILE)
        outcomes[fold] = outcome
    return outcomes


def load_fold_network(checkpoint_dir: Path, fold: int, config: PipelineConfig) -> ResNet3d:
    """Rebuild the network of a trained fold.

    Raises:
        PrerequisiteError: If the fold has no checkpoint.
        CheckpointError: If the checkpoint belongs to another configuration.
    """
    path = fold_dir(checkpoint_dir, fold) / CHECKPOINT_FILE
    if not path.exists():
        raise PrerequisiteError("train", path)
    checkpoint = load_checkpoint(path, network=config.network, train=config.train)
    net = build_network(config.network, config.sampling.instance_dims)
    net.load_state_dict(checkpoint.state_dict)
    return net


def write_prediction(prediction: ManifestPrediction, directory: Path) -> None:
    """Persist region-level ensembles and per-instance scores of one fold."""
    directory.mkdir(parents=True, exist_ok=True)
    write_predictions(prediction.results, directory / PREDICTIONS_FILE)
    scores = pd.DataFrame(
        {
            "subject_id": [r.subject_id for r in prediction.records],
            "side": [r.side.value for r in prediction.records],
            "index": [r.index for r in prediction.records],
            "p_normal": prediction.probabilities[:, 0],
            "p_anomaly": prediction.probabilities[:, 1],
            "label": [r.label.value for r in prediction.records],
        }
    )
    write_series(scores, directory / INSTANCE_SCORES_FILE)


def predict_folds(
    manifest: Manifest, config: PipelineConfig, checkpoint_dir: Path
) -> dict[int, ManifestPrediction]:
    """Test-split predictions of every trained fold."""
    predictions = {}
    for fold in _require_folds(manifest):
        _require_test(manifest, fold)
        net = load_fold_network(checkpoint_dir, fold, config)
        predictions[fold] = predict_manifest(
            net,
            manifest,
            fold=fold,
            threshold=config.evaluation.threshold,
            batch_size=config.train.batch_size,
            device=config.train.device,
        )
    return predictions


def reports_from(
    predictions: dict[int, ManifestPrediction], config: PipelineConfig
) -> CrossValidationResult:
    """Ensembled and per-instance reports from per-fold predictions."""
    evaluation = config.evaluation
    reports = {}
    for ensembled in (True, False):
        folds = [
            fold_metrics(p, fold, ensembled=ensembled, threshold=evaluation.threshold)
            for fold, p in sorted(predictions.items())
        ]
        reports[ensembled] = build_report(
            folds,
            ensembled=ensembled,
            threshold=evaluation.threshold,
            estimator=evaluation.std_estimator,
            n=config.sampling.n,
            patch_size=config.sampling.patch_size,
        )
    return CrossValidationResult(ensembled=reports[True], instance=reports[False])


def cross_validate(
    manifest: Manifest, config: PipelineConfig, out_dir: Path
) -> CrossValidationResult:
    """Train, predict and score every fold of the manifest.

    Writes per-fold checkpoints, loss curves and predictions under
    out_dir/fold_<k>/, and metrics.json for both scoring modes under
    out_dir/ensemble/ and out_dir/instance/.

    Raises:
        SplitError: If the manifest has no fold assignments.
    """
    train_folds(manifest, config, out_dir)
    predictions = predict_folds(manifest, config, out_dir)
    for fold, prediction in predictions.items():
        write_prediction(prediction, fold_dir(out_dir, fold))
    result = reports_from(predictions, config)
    for name, report in (("ensemble", result.ensembled), ("instance", result.instance)):
        (out_dir / name).mkdir(parents=True, exist_ok=True)
        dump_report(report, out_dir / name / METRICS_FILE)
    logger.info(
        "Cross-validation N=%d P=%d: ensembled F1 %.3f ± %.3f, per-instance F1 %.3f ± %.3f",
        config.sampling.n,
        config.sampling.patch_size,
        result.ensembled.f1.mean,
        result.ensembled.f1.std,
        result.instance.f1.mean,
        result.instance.f1.std,
    )
    return result


def sweep_rows(n: int, p: int, result: CrossValidationResult) -> list[SweepRow]:
    return [
        SweepRow(n=n, p=p, fold=f.fold, ensembled=report.ensembled, auprc=f.auprc, f1=f.f1)
        for report in (result.ensembled, result.instance)
        for f in report.folds
    ]


def sweep(
    manifest: Manifest,
    model: CentroidModel,
    config: PipelineConfig,
    out_dir: Path,
) -> list[SweepRow]:
    """Run cross-validation for every (N, P) cell of the sweep grid.

    `manifest` must carry registered volumes. Each cell extracts, splits and
    cross-validates under out_dir/n<N>_p<P>/.
    """
    rows: list[SweepRow] = []
    cells = config.sweep.cells()
    for position, (n, p) in enumerate(cells, start=1):
        logger.info("Sweep cell %d/%d: N=%d, P=%d", position, len(cells), n, p)
        cell_config = config.for_cell(n, p)
        cell_dir = out_dir / f"n{n}_p{p}"
        extracted = extract_cohort(
            manifest, model, cell_config.sampling, cell_config.seed, cell_dir / "extract"
        )
        split = make_splits(
            extracted,
            cell_config.splits.ratios,
            seed=cell_config.seed,
            folds=cell_config.splits.folds,
        )
        write_manifest(split, cell_dir / MANIFEST_DIR)
        result = cross_validate(split, cell_config, cell_dir / "cv")
        rows.extend(sweep_rows(n, p, result))

    write_sweep_results(rows, out_dir / RESULTS_FILE)
    write_sweep_series(rows, config.sweep, out_dir, config.evaluation.std_estimator)
    return rows


def summarize_sweep(
    rows: Sequence[SweepRow], keys: Sequence[str], estimator: StdEstimator = "sample"
) -> pd.DataFrame:
    """Mean and std across folds per (keys..., ensembled) group."""
    frame = pd.DataFrame([r.model_dump() for r in rows])
    records = []
    for values, group in frame.groupby([*keys, "ensembled"], sort=True):
        *key_values, ensembled = values
        auprc = aggregate(group["auprc"].tolist(), estimator)
        f1 = aggregate(group["f1"].tolist(), estimator)
        records.append(
            {
                **{key: int(value) for key, value in zip(keys, key_values)},
                "ensembled": bool(ensembled),
                "folds": len(group),
                "auprc_mean": auprc.mean,
                "auprc_std": auprc.std,
                "f1_mean": f1.mean,
                "f1_std": f1.std,
            }
        )
    return pd.DataFrame(records)


def write_sweep_series(
    rows: Sequence[SweepRow],
    config: SweepConfig,
    out_dir: Path,
    estimator: StdEstimator = "sample",
) -> list[Path]:
    """Write F1-vs-P and metrics-vs-N series (mean and std across folds).

    Returns the written paths. PNG plots are added when config.plot is set
    and matplotlib is importable.
    """
    n_values = config.n_grid if config.mode == "full" else (config.axis_n,)
    p_values = config.p_grid if config.mode == "full" else (config.axis_p,)
    written = []
    for n in n_values:
        subset = [r for r in rows if r.n == n]
        if subset:
            path = out_dir / f"f1_vs_p_n{n}.tsv"
            frame = summarize_sweep(subset, ("p",), estimator)
            write_series(frame, path)
            written.append(path)
            if config.plot:
                plot_series(frame, "p", path.with_suffix(".png"))
    for p in p_values:
        subset = [r for r in rows if r.p == p]
        if subset:
            path = out_dir / f"metrics_vs_n_p{p}.tsv"
            frame = summarize_sweep(subset, ("n",), estimator)
            write_series(frame, path)
            written.append(path)
            if config.plot:
                plot_series(frame, "n", path.with_suffix(".png"))
    return written


def plot_series(frame: pd.DataFrame, key: str, path: Path) -> bool:
    """Render a series as PNG; returns False when matplotlib is unavailable."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        logger.warning("matplotlib is not installed; skipping %s (install the 'plot' extra)", path)
        return False

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, metric in zip(axes, ("f1", "auprc")):
        for ensembled, group in frame.groupby("ensembled"):
            x = np.asarray(group[key], dtype=np.float64)
            ax.errorbar(
                x,
                group[f"{metric}_mean"],
                yerr=group[f"{metric}_std"],
                marker="o",
                capsize=3,
                label="ensembled" if ensembled else "per instance",
            )
        ax.set_xlabel("N" if key == "n" else "P")
        ax.set_ylabel(metric.upper())
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True
