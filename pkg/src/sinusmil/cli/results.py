"""Experiment subcommands: sweep and report."""

from __future__ import annotations

import pandas as pd
from rich.table import Table

from sinusmil.cli.data import CENTROID_MODEL_FILE
from sinusmil.cli.model import metrics_table
from sinusmil.cli.stage import (
    ConfigOption,
    FoldsOption,
    NetworkOption,
    OutOption,
    SeedOption,
    console,
    err_console,
    resolve_config,
    run_stage,
)
from sinusmil.errors import PrerequisiteError
from sinusmil.experiment.evaluation import METRICS_FILE, RESULTS_FILE, sweep as run_sweep
from sinusmil.experiment.evaluation import summarize_sweep, write_sweep_series
from sinusmil.io.json import load_report
from sinusmil.io.tables import read_sweep_results, write_series
from sinusmil.io.yaml import load_centroid_model
from sinusmil.models.report import StdEstimator, SweepRow

SUMMARY_FILE = "metrics.tsv"


def sweep_table(rows: list[SweepRow], estimator: StdEstimator = "sample") -> Table:
    summary = summarize_sweep(rows, ("n", "p"), estimator)
    table = Table(
        title=f"Sweep (mean ± {estimator} std across folds)", header_style="bold cyan"
    )
    for column in ("N", "P", "Ensembled", "AUPRC", "F1"):
        table.add_column(column, justify="right")
    for row in summary.to_dict("records"):
        table.add_row(
            str(row["n"]),
            str(row["p"]),
            "yes" if row["ensembled"] else "no",
            f"{row['auprc_mean']:.4f} ± {row['auprc_std']:.4f}",
            f"{row['f1_mean']:.4f} ± {row['f1_std']:.4f}",
        )
    return table


def sweep(
    config: ConfigOption = None,
    folds: FoldsOption = None,
    network: NetworkOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
) -> None:
    """Cross-validate every (N, P) cell of the sweep grid."""
    resolved = resolve_config(config, folds=folds, network=network, seed=seed, out=out)
    with run_stage("sweep", resolved) as stage:
        manifest = stage.manifest_of("register")
        model = load_centroid_model(stage.require("centroids", CENTROID_MODEL_FILE))
        rows = run_sweep(manifest, model, resolved, stage.dir)
        console.print(sweep_table(rows, resolved.evaluation.std_estimator))
        console.print(f"[green]✓[/green] {len(rows)} rows -> {stage.dir / RESULTS_FILE}")


def report(
    config: ConfigOption = None,
    out: OutOption = None,
) -> None:
    """Render metric tables and plot-ready series from evaluate and sweep outputs."""
    resolved = resolve_config(config, out=out)
    with run_stage("report", resolved) as stage:
        found = False
        summary = []
        for mode in ("ensemble", "instance"):
            path = stage.output_of("evaluate", mode, METRICS_FILE)
            if not path.exists():
                continue
            found = True
            metrics = load_report(path)
            console.print(metrics_table(metrics, f"Test metrics ({mode})"))
            summary.append(
                {
                    "ensembled": metrics.ensembled,
                    "n": metrics.n,
                    "p": metrics.patch_size,
                    "folds": metrics.fold_count,
                    "threshold": metrics.threshold,
                    "std_estimator": metrics.std_estimator,
                    "auprc_mean": metrics.auprc.mean,
                    "auprc_std": metrics.auprc.std,
                    "f1_mean": metrics.f1.mean,
                    "f1_std": metrics.f1.std,
                }
            )
        if summary:
            write_series(pd.DataFrame(summary), stage.dir / SUMMARY_FILE)

        results = stage.output_of("sweep", RESULTS_FILE)
        if results.exists():
            found = True
            rows = read_sweep_results(results)
            console.print(sweep_table(rows, resolved.evaluation.std_estimator))
            written = write_sweep_series(
                rows, resolved.sweep, stage.dir, resolved.evaluation.std_estimator
            )
            for path in written:
                console.print(f"[green]✓[/green] {path}")

        if not found:
            err_console.print("[dim]Nothing to report yet[/dim]")
            raise PrerequisiteError("evaluate", stage.output_of("evaluate"))
