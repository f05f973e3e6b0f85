"""Data preparation subcommands: phantom, register, fit-centroids, extract, split."""

from __future__ import annotations

from pathlib import Path

import pandas as pd
from rich.table import Table

from sinusmil.cli.stage import (
    ConfigOption,
    DataRootOption,
    FoldsOption,
    OutOption,
    PatchSizeOption,
    SampleSizeOption,
    SeedOption,
    Stage,
    console,
    print_diagnostics,
    resolve_config,
    run_stage,
)
from sinusmil.core.sampling import fit_centroid_model
from sinusmil.core.splits import make_splits
from sinusmil.core.validation import validate_manifest
from sinusmil.errors import PrerequisiteError
from sinusmil.experiment.preprocess import (
    ANNOTATIONS_FILE,
    GROUND_TRUTH_FILE,
    MANIFEST_DIR,
    REGISTRATION_LOG,
    extract_cohort,
    generate_cohort,
    register_cohort,
)
from sinusmil.io.tables import read_annotations, read_ground_truth, read_manifest, write_manifest
from sinusmil.io.yaml import dump_centroid_model, load_centroid_model
from sinusmil.models.anatomy import Label, Side
from sinusmil.models.manifest import Manifest, Split

CENTROID_MODEL_FILE = "centroid_model.yaml"


def _label_table(manifest: Manifest, title: str) -> Table:
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("Split", style="green")
    table.add_column("Fold", justify="right")
    table.add_column("Subjects", justify="right")
    table.add_column("Sinuses", justify="right")
    table.add_column("Anomalous", justify="right")
    table.add_column("Instances", justify="right")
    folds = manifest.folds() or (0,)
    for fold in folds:
        for split in Split:
            counts = manifest.sinus_counts(split, fold)
            total = sum(counts.values())
            anomalous = counts.get(Label.ANOMALY, 0)
            fraction = f"{anomalous} ({anomalous / total:.0%})" if total else "0"
            table.add_row(
                split.value,
                str(fold),
                str(len(manifest.subjects_in(split, fold))),
                str(total),
                fraction,
                str(len(manifest.instances_in(split, fold))),
            )
    return table


def _source_manifest(stage: Stage) -> tuple[Manifest, bool]:
    """Phantom manifest of this run, else the user's <data_root>/manifest."""
    phantom = stage.output_of("phantom", MANIFEST_DIR)
    if phantom.exists():
        return read_manifest(phantom), True
    user = stage.data_root / MANIFEST_DIR
    if user.exists():
        return read_manifest(user), False
    raise PrerequisiteError("phantom", phantom)


def phantom(
    config: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
) -> None:
    """Generate a synthetic cohort with known anatomy, lesions and perturbations."""
    resolved = resolve_config(config, seed=seed, out=out)
    with run_stage("phantom", resolved) as stage:
        cohort = generate_cohort(
            resolved.phantom, stage.dir, registered_dims=resolved.registration.registered_dims
        )
        counts = cohort.manifest.sinus_counts()
        total = sum(counts.values())
        console.print(
            f"[green]✓[/green] {len(cohort.manifest.subjects)} subjects, {total} sinuses "
            f"({counts.get(Label.ANOMALY, 0)} anomalous), "
            f"{len(cohort.annotations)} centroid annotations -> {stage.dir}"
        )


def register(
    config: ConfigOption = None,
    data_root: DataRootOption = None,
    out: OutOption = None,
) -> None:
    """Rigidly register every subject to the reference and resample to 128^3."""
    resolved = resolve_config(config, data_root=data_root, out=out)
    with run_stage("register", resolved) as stage:
        manifest, is_phantom = _source_manifest(stage)
        truths = None
        truth_path = stage.output_of("phantom", GROUND_TRUTH_FILE)
        if is_phantom and truth_path.exists():
            truths = {t.subject_id: t for t in read_ground_truth(truth_path)}
        register_cohort(manifest, resolved.registration, stage.dir, truths=truths)

        log = pd.read_csv(stage.dir / REGISTRATION_LOG, sep="\t")
        converged = int(log["converged"].astype(str).str.lower().eq("true").sum())
        console.print(
            f"[green]✓[/green] Registered {len(log)} subjects "
            f"({converged} converged), mean NCC {log['ncc_after'].mean():.4f}"
        )
        if "rotation_error" in log.columns:
            console.print(
                f"  Recovery error: rotation {log['rotation_error'].median():.3f}° median, "
                f"translation {log['translation_error'].median():.3f} voxels median"
            )


def fit_centroids(
    config: ConfigOption = None,
    data_root: DataRootOption = None,
    out: OutOption = None,
) -> None:
    """Fit the per-side Gaussian centroid model from annotations."""
    resolved = resolve_config(config, data_root=data_root, out=out)
    with run_stage("centroids", resolved) as stage:
        if resolved.sampling.annotations is not None:
            path = Path(resolved.sampling.annotations)
            if not path.is_absolute():
                path = stage.data_root / path
        else:
            path = stage.require("phantom", ANNOTATIONS_FILE)
        model = fit_centroid_model(read_annotations(path))
        dump_centroid_model(model, stage.dir / CENTROID_MODEL_FILE)

        table = Table(title="Centroid model", show_header=True, header_style="bold cyan")
        table.add_column("Side", style="green")
        table.add_column("Mean (x, y, z)")
        table.add_column("Std (x, y, z)")
        table.add_column("Annotations", justify="right")
        for side in Side:
            fitted = model.for_side(side)
            table.add_row(
                side.value,
                ", ".join(f"{v:.2f}" for v in fitted.mean),
                ", ".join(f"{v:.2f}" for v in fitted.std),
                str(fitted.n_annotations),
            )
        console.print(table)


def extract(
    config: ConfigOption = None,
    n: SampleSizeOption = None,
    patch_size: PatchSizeOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
) -> None:
    """Sample N centroids per side and extract flipped, resampled instances."""
    resolved = resolve_config(config, n=n, patch_size=patch_size, seed=seed, out=out)
    with run_stage("extract", resolved) as stage:
        manifest = stage.manifest_of("register")
        model = load_centroid_model(stage.require("centroids", CENTROID_MODEL_FILE))
        extracted = extract_cohort(
            manifest, model, resolved.sampling, resolved.seed, stage.dir
        )
        console.print(
            f"[green]✓[/green] {len(extracted.instances)} instances "
            f"(N={resolved.sampling.n}, P={resolved.sampling.patch_size}) -> {stage.dir}"
        )


def split(
    config: ConfigOption = None,
    folds: FoldsOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
) -> None:
    """Assign subjects to train/val/test for every cross-validation fold."""
    resolved = resolve_config(config, folds=folds, seed=seed, out=out)
    with run_stage("split", resolved) as stage:
        manifest = stage.manifest_of("extract")
        assigned = make_splits(
            manifest,
            resolved.splits.ratios,
            seed=resolved.seed,
            folds=resolved.splits.folds,
        )
        write_manifest(assigned, stage.dir / MANIFEST_DIR)
        print_diagnostics(validate_manifest(assigned), "Manifest")
        console.print(_label_table(assigned, "Patient-level splits"))
