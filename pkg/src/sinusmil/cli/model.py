"""Model subcommands: train, predict, evaluate, gradcheck."""

from __future__ import annotations

from typing import Annotated

import typer
from rich.table import Table

from sinusmil.cli.stage import (
    EXIT_FAILURE,
    ConfigOption,
    EnsembleOption,
    NetworkChoice,
    NetworkOption,
    OutOption,
    SeedOption,
    console,
    resolve_config,
    run_stage,
)
from sinusmil.experiment.evaluation import (
    METRICS_FILE,
    fold_dir,
    predict_folds,
    reports_from,
    train_folds,
    write_prediction,
)
from sinusmil.io.json import dump_report
from sinusmil.models.report import MetricsReport
from sinusmil.models.settings import NetworkConfig
from sinusmil.nn.gradcheck import gradient_check


def metrics_table(report: MetricsReport, title: str) -> Table:
    """Per-fold metrics plus mean ± std (estimator named in the header)."""
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("Fold", style="green")
    table.add_column("AUPRC", justify="right")
    table.add_column("F1", justify="right")
    table.add_column("Scored", justify="right")
    table.add_column("Positive", justify="right")
    for f in report.folds:
        table.add_row(
            str(f.fold), f"{f.auprc:.4f}", f"{f.f1:.4f}", str(f.n_scores), str(f.n_positive)
        )
    table.add_row(
        f"mean ± std ({report.std_estimator})",
        f"{report.auprc.mean:.4f} ± {report.auprc.std:.4f}",
        f"{report.f1.mean:.4f} ± {report.f1.std:.4f}",
        "",
        "",
        style="bold",
    )
    return table


def train(
    config: ConfigOption = None,
    network: NetworkOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
) -> None:
    """Train one network per fold and keep the best-validation-loss checkpoint."""
    resolved = resolve_config(config, network=network, seed=seed, out=out)
    with run_stage("train", resolved) as stage:
        manifest = stage.manifest_of("split")
        outcomes = train_folds(manifest, resolved, stage.dir)
        for fold, outcome in outcomes.items():
            console.print(
                f"[green]✓[/green] Fold {fold}: best val loss "
                f"{outcome.checkpoint.val_loss:.4f} at epoch {outcome.checkpoint.epoch}"
            )


def predict(
    config: ConfigOption = None,
    network: NetworkOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
) -> None:
    """Write per-(subject, side) ensemble predictions for every fold's test split."""
    resolved = resolve_config(config, network=network, seed=seed, out=out)
    with run_stage("predict", resolved) as stage:
        manifest = stage.manifest_of("split")
        predictions = predict_folds(manifest, resolved, stage.require("train"))
        for fold, prediction in predictions.items():
            write_prediction(prediction, fold_dir(stage.dir, fold))
            console.print(
                f"[green]✓[/green] Fold {fold}: {len(prediction.results)} regions, "
                f"{len(prediction.records)} instances"
            )


def evaluate(
    config: ConfigOption = None,
    ensemble: EnsembleOption = None,
    network: NetworkOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
) -> None:
    """Score every trained fold and write metrics.json with mean ± std."""
    resolved = resolve_config(config, ensemble=ensemble, network=network, seed=seed, out=out)
    with run_stage("evaluate", resolved) as stage:
        manifest = stage.manifest_of("split")
        predictions = predict_folds(manifest, resolved, stage.require("train"))
        ensembled = resolved.evaluation.ensemble
        report = reports_from(predictions, resolved).report(ensembled)
        directory = stage.dir / ("ensemble" if ensembled else "instance")
        directory.mkdir(parents=True, exist_ok=True)
        dump_report(report, directory / METRICS_FILE)
        mode = "ensembled" if ensembled else "per instance"
        console.print(metrics_table(report, f"Test metrics ({mode})"))


def gradcheck(
    network: NetworkOption = NetworkChoice.TINY,
    params: Annotated[int, typer.Option("--params", help="Parameter entries to check.")] = 20,
    epsilon: Annotated[float, typer.Option("--epsilon", help="Central-difference step.")] = 1e-5,
    seed: SeedOption = None,
) -> None:
    """Compare analytic gradients with central finite differences (double precision)."""
    preset = (network or NetworkChoice.TINY).value
    report = gradient_check(
        NetworkConfig.preset(preset), n_params=params, epsilon=epsilon, seed=seed or 0
    )
    table = Table(title="Gradient check", show_header=True, header_style="bold cyan")
    table.add_column("Parameter", style="green")
    table.add_column("Index", justify="right")
    table.add_column("Analytic", justify="right")
    table.add_column("Numeric", justify="right")
    table.add_column("Rel. error", justify="right")
    for e in report.entries:
        table.add_row(
            e.parameter,
            str(e.index),
            f"{e.analytic:.6e}",
            f"{e.numeric:.6e}",
            f"{e.relative_error:.2e}",
        )
    console.print(table)
    if not report.passed:
        console.print(
            f"[red]✗[/red] max relative error {report.max_relative_error:.2e} "
            f">= {report.tolerance:.0e}"
        )
        raise typer.Exit(EXIT_FAILURE)
    console.print(f"[green]✓[/green] max relative error {report.max_relative_error:.2e}")
