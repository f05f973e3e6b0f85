"""Integration tests for cross-validation and sweep outputs on a tiny on-disk cohort."""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from rich.console import Console

from sinusmil.cli.results import sweep_table
from sinusmil.core.splits import make_splits
from sinusmil.errors import MetricsError, SplitError
from sinusmil.experiment.evaluation import (
    build_report,
    cross_validate,
    evaluate,
    fold_metrics,
    summarize_sweep,
    sweep_rows,
    write_sweep_series,
)
from sinusmil.io.json import load_report
from sinusmil.io.nifti import save_volume
from sinusmil.models.anatomy import Label, Side
from sinusmil.models.manifest import InstanceRecord, Manifest
from sinusmil.models.report import EnsembleResult, SweepRow
from sinusmil.models.settings import (
    NetworkConfig,
    PipelineConfig,
    SamplingConfig,
    SplitConfig,
    SweepConfig,
    TrainConfig,
)
from sinusmil.models.volume import Volume
from sinusmil.nn.inference import ManifestPrediction
from sinusmil.nn.network import build_network

DIMS = (16, 16, 16)
N = 2
FOLD_FILES = ("checkpoint.pt", "loss_curve.tsv", "predictions.tsv", "instance_scores.tsv")


@pytest.fixture
def config() -> PipelineConfig:
    return PipelineConfig(
        sampling=SamplingConfig(n=N, patch_size=25, instance_dims=DIMS),
        network=NetworkConfig.preset("tiny"),
        train=TrainConfig(epochs=1, batch_size=4, device="cpu"),
        splits=SplitConfig(ratios=(0.5, 0.25, 0.25), folds=2),
    )


@pytest.fixture
def split_manifest(
    tmp_path: Path, manifest_factory: Callable[..., Manifest], config: PipelineConfig
) -> Manifest:
    """12 subjects with instance files; anomalous instances carry a bright cube."""
    anomalous = {(i, "left") for i in range(0, 12, 3)} | {(1, "right"), (7, "right")}
    base = manifest_factory(12, anomalous)
    rng = np.random.default_rng(0)
    (tmp_path / "instances").mkdir()
    instances = []
    for record in base.subjects:
        for side in Side:
            label = record.label(side)
            for index in range(N):
                data = rng.normal(0.0, 0.1, DIMS)
                if label is Label.ANOMALY:
                    data[6:10, 6:10, 6:10] += 2.0
                name = f"instances/{record.subject_id}_{side.value}_{index:02d}.nii.gz"
                save_volume(Volume(data), tmp_path / name)
                instances.append(
                    InstanceRecord(
                        subject_id=record.subject_id,
                        side=side,
                        index=index,
                        centroid=(8.0, 8.0, 8.0),
                        patch_size=25,
                        path=name,
                        label=label,
                    )
                )
    manifest = base.with_instances(tuple(instances)).with_data_root(tmp_path)
    return make_splits(manifest, config.splits.ratios, seed=0, folds=config.splits.folds)


class TestCrossValidate:
    """Tests for cross_validate."""

    def test_writes_every_fold_and_both_reports(
        self, tmp_path: Path, split_manifest: Manifest, config: PipelineConfig
    ) -> None:
        out = tmp_path / "cv"

        result = cross_validate(split_manifest, config, out)

        for fold in (0, 1):
            for name in FOLD_FILES:
                assert (out / f"fold_{fold}" / name).exists()
        assert load_report(out / "ensemble" / "metrics.json") == result.ensembled
        assert load_report(out / "instance" / "metrics.json") == result.instance

    def test_instance_mode_scores_every_instance(
        self, tmp_path: Path, split_manifest: Manifest, config: PipelineConfig
    ) -> None:
        result = cross_validate(split_manifest, config, tmp_path / "cv")

        assert result.ensembled.fold_count == 2
        assert result.ensembled.n == N
        for ensembled, instance in zip(result.ensembled.folds, result.instance.folds):
            assert instance.n_scores == N * ensembled.n_scores
            assert instance.n_positive == N * ensembled.n_positive

    def test_predictions_table_has_one_row_per_region(
        self, tmp_path: Path, split_manifest: Manifest, config: PipelineConfig
    ) -> None:
        result = cross_validate(split_manifest, config, tmp_path / "cv")

        table = pd.read_csv(tmp_path / "cv" / "fold_0" / "predictions.tsv", sep="\t")
        assert len(table) == result.ensembled.folds[0].n_scores
        assert np.allclose(table["p_normal"] + table["p_anomaly"], 1.0)
        assert set(table["n_instances"]) == {N}

    def test_without_folds_raises(
        self, tmp_path: Path, split_manifest: Manifest, config: PipelineConfig
    ) -> None:
        with pytest.raises(SplitError, match="no fold assignments"):
            cross_validate(split_manifest.with_assignments(()), config, tmp_path / "cv")


class TestEvaluateSingleFold:
    """Tests for evaluate on an untrained network."""

    def test_report_has_one_fold(self, split_manifest: Manifest, config: PipelineConfig) -> None:
        net = build_network(config.network, DIMS)

        report = evaluate(net, split_manifest, fold=1, ensembled=False, config=config)

        assert [f.fold for f in report.folds] == [1]
        assert not report.ensembled
        assert report.auprc.std == 0.0


class TestReports:
    """Tests for report assembly from fold metrics."""

    def test_build_report_aggregates_folds(self) -> None:
        from sinusmil.core.metrics import score_fold

        folds = [
            score_fold(0, [0.9, 0.1, 0.8, 0.3], [1, 0, 1, 0]),
            score_fold(1, [0.4, 0.6, 0.2, 0.7], [1, 0, 0, 1]),
        ]

        report = build_report(folds, ensembled=True, estimator="population", n=5, patch_size=35)

        assert report.f1.mean == pytest.approx(np.mean([f.f1 for f in folds]))
        assert report.f1.std == pytest.approx(np.std([f.f1 for f in folds]))
        assert report.std_estimator == "population"

    def test_sweep_rows_cover_both_modes(self) -> None:
        from sinusmil.core.metrics import score_fold
        from sinusmil.experiment.evaluation import CrossValidationResult

        fold = score_fold(0, [0.9, 0.1], [1, 0])
        result = CrossValidationResult(
            ensembled=build_report([fold], ensembled=True),
            instance=build_report([fold], ensembled=False),
        )

        rows = sweep_rows(5, 35, result)

        assert [(r.n, r.p, r.ensembled) for r in rows] == [(5, 35, True), (5, 35, False)]


def _rows() -> list[SweepRow]:
    rows = []
    for n, p in [(1, 35), (5, 35), (5, 25)]:
        for fold in range(3):
            for ensembled in (True, False):
                f1 = 0.1 * n / 5 + 0.01 * fold + (0.05 if ensembled else 0.0)
                rows.append(
                    SweepRow(n=n, p=p, fold=fold, ensembled=ensembled, auprc=0.5 + f1, f1=f1)
                )
    return rows


class TestSweepSeries:
    """Tests for the plot-ready sweep series."""

    def test_axis_mode_writes_two_series(self, tmp_path: Path) -> None:
        config = SweepConfig(n_grid=(1, 5), p_grid=(25, 35), axis_n=5, axis_p=35)

        written = write_sweep_series(_rows(), config, tmp_path)

        assert [p.name for p in written] == ["f1_vs_p_n5.tsv", "metrics_vs_n_p35.tsv"]

    def test_series_hold_mean_and_std_across_folds(self, tmp_path: Path) -> None:
        config = SweepConfig(n_grid=(1, 5), p_grid=(25, 35), axis_n=5, axis_p=35)
        write_sweep_series(_rows(), config, tmp_path)

        frame = pd.read_csv(tmp_path / "metrics_vs_n_p35.tsv", sep="\t")
        row = frame[(frame["n"] == 1) & frame["ensembled"]].iloc[0]

        assert row["folds"] == 3
        assert row["f1_mean"] == pytest.approx(0.02 + 0.01 + 0.05)
        assert row["f1_std"] == pytest.approx(0.01)

    def test_full_mode_writes_series_per_grid_value(self, tmp_path: Path) -> None:
        config = SweepConfig(n_grid=(1, 5), p_grid=(25, 35), mode="full")

        written = write_sweep_series(_rows(), config, tmp_path)

        assert {p.name for p in written} == {
            "f1_vs_p_n1.tsv",
            "f1_vs_p_n5.tsv",
            "metrics_vs_n_p25.tsv",
            "metrics_vs_n_p35.tsv",
        }


class TestSweepSummary:
    """Tests for the fold summary shared by the sweep table and series."""

    def test_estimator_selects_the_std(self) -> None:
        rows = [r for r in _rows() if r.n == 5 and r.p == 35 and r.ensembled]
        f1 = [r.f1 for r in rows]

        sample = summarize_sweep(rows, ("n", "p"), "sample").iloc[0]
        population = summarize_sweep(rows, ("n", "p"), "population").iloc[0]

        assert sample["f1_std"] == pytest.approx(np.std(f1, ddof=1))
        assert population["f1_std"] == pytest.approx(np.std(f1, ddof=0))
        assert population["f1_std"] < sample["f1_std"]

    def test_groups_by_every_key(self) -> None:
        summary = summarize_sweep(_rows(), ("n", "p"))

        assert len(summary) == 3 * 2
        assert set(summary["folds"]) == {3}

    def test_cli_table_reports_the_configured_estimator(self) -> None:
        console = Console(record=True, width=120)
        rows = [r for r in _rows() if r.n == 5 and r.p == 35]
        f1 = [r.f1 for r in rows if r.ensembled]

        console.print(sweep_table(rows, "population"))
        text = console.export_text()

        assert "population std" in text
        assert f"{np.std(f1, ddof=0):.4f}" in text


def _prediction(labels: list[Label | None]) -> ManifestPrediction:
    results = tuple(
        EnsembleResult(
            subject_id=f"sub-{i:03d}",
            side=Side.LEFT,
            probabilities=(0.3, 0.7),
            prediction=Label.ANOMALY,
            n_instances=1,
            label=label,
        )
        for i, label in enumerate(labels)
    )
    return ManifestPrediction(records=(), probabilities=np.zeros((0, 2)), results=results)


class TestFoldMetrics:
    """Tests for per-fold scoring."""

    def test_labeled_regions_are_scored(self) -> None:
        metrics = fold_metrics(
            _prediction([Label.ANOMALY, Label.NORMAL]), 0, ensembled=True
        )

        assert metrics.n_scores == 2
        assert metrics.n_positive == 1

    def test_unlabeled_region_raises(self) -> None:
        with pytest.raises(MetricsError, match="sub-001/left"):
            fold_metrics(_prediction([Label.ANOMALY, None]), 2, ensembled=True)
