"""Tab-separated tables: manifests, annotations, ground truth, predictions, sweeps.

A manifest is a directory holding subjects.tsv, instances.tsv and
splits.tsv. Each file starts with the versioned header line

    # sinusmil-manifest <schema_version> data_root=<path>

where data_root is stored relative to the manifest directory.
"""

from __future__ import annotations

import os
import re
from collections.abc import Iterable, Sequence
from pathlib import Path

import pandas as pd

from sinusmil.errors import ParseError
from sinusmil.models.anatomy import CentroidAnnotation, Label, Side
from sinusmil.models.manifest import (
    InstanceRecord,
    Manifest,
    Split,
    SplitAssignment,
    SubjectRecord,
)
from sinusmil.models.phantom import RegionTruth, SubjectTruth
from sinusmil.models.report import EnsembleResult, SweepRow
from sinusmil.models.transform import RigidTransform

SUBJECTS_FILE = "subjects.tsv"
INSTANCES_FILE = "instances.tsv"
SPLITS_FILE = "splits.tsv"

_HEADER = re.compile(r"^# sinusmil-manifest (\S+) data_root=(.*)$")

SUBJECT_COLUMNS = [
    "subject_id",
    "left_label",
    "right_label",
    "source_path",
    "registered_path",
    "excluded_sides",
    "annotated",
]
INSTANCE_COLUMNS = ["subject_id", "side", "index", "x", "y", "z", "patch_size", "path", "label"]
SPLIT_COLUMNS = ["subject_id", "fold", "split"]
ANNOTATION_COLUMNS = ["subject_id", "side", "x", "y", "z"]
SWEEP_COLUMNS = ["n", "p", "fold", "ensembled", "auprc", "f1"]


def _write_tsv(frame: pd.DataFrame, path: Path, header: str | None = None) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        if header is not None:
            f.write(header + "\n")
        frame.to_csv(f, sep="\t", index=False, lineterminator="\n")


def _read_tsv(path: Path, *, skip_header: bool = False) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    try:
        return pd.read_csv(
            path,
            sep="\t",
            skiprows=1 if skip_header else 0,
            dtype=str,
            keep_default_na=False,
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(str(e), file_path=path) from e


def _require(frame: pd.DataFrame, columns: Sequence[str], path: Path) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ParseError(f"missing column(s): {', '.join(missing)}", file_path=path, line=2)


def _read_header(path: Path) -> tuple[str, str]:
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    with path.open("r", encoding="utf-8") as f:
        first = f.readline().rstrip("\n")
    match = _HEADER.match(first)
    if match is None:
        raise ParseError(
            "missing '# sinusmil-manifest <version> data_root=<path>' header",
            file_path=path,
            line=1,
            column=1,
        )
    return match.group(1), match.group(2)


# =============================================================================
# Manifest directory
# =============================================================================


def write_manifest(manifest: Manifest, directory: Path) -> None:
    """Write a manifest as three TSV files under `directory`."""
    directory.mkdir(parents=True, exist_ok=True)
    data_root = Path(manifest.data_root)
    relative_root = os.path.relpath(data_root.resolve(), directory.resolve())
    header = f"# sinusmil-manifest {manifest.schema_version} data_root={relative_root}"

    subjects = pd.DataFrame(
        [
            {
                "subject_id": r.subject_id,
                "left_label": r.left_label.value,
                "right_label": r.right_label.value,
                "source_path": r.source_path,
                "registered_path": r.registered_path or "",
                "excluded_sides": ",".join(s.value for s in r.excluded_sides),
                "annotated": "true" if r.annotated else "false",
            }
            for r in manifest.subjects
        ],
        columns=SUBJECT_COLUMNS,
    )
    instances = pd.DataFrame(
        [
            {
                "subject_id": i.subject_id,
                "side": i.side.value,
                "index": i.index,
                "x": repr(i.centroid[0]),
                "y": repr(i.centroid[1]),
                "z": repr(i.centroid[2]),
                "patch_size": i.patch_size,
                "path": i.path,
                "label": i.label.value,
            }
            for i in manifest.instances
        ],
        columns=INSTANCE_COLUMNS,
    )
    splits = pd.DataFrame(
        [
            {"subject_id": a.subject_id, "fold": a.fold, "split": a.split.value}
            for a in manifest.assignments
        ],
        columns=SPLIT_COLUMNS,
    )
    _write_tsv(subjects, directory / SUBJECTS_FILE, header)
    _write_tsv(instances, directory / INSTANCES_FILE, header)
    _write_tsv(splits, directory / SPLITS_FILE, header)


def read_manifest(directory: Path) -> Manifest:
    """Read a manifest directory; instances.tsv and splits.tsv are optional.

    Raises:
        FileNotFoundError: If the directory or subjects.tsv is missing.
        ParseError: If a header or column is malformed.
        pydantic.ValidationError: If a row does not match the schema.
    """
    subjects_path = directory / SUBJECTS_FILE
    version, relative_root = _read_header(subjects_path)
    data_root = (directory / relative_root).resolve()

    frame = _read_tsv(subjects_path, skip_header=True)
    _require(frame, SUBJECT_COLUMNS[:4], subjects_path)
    subjects = tuple(
        SubjectRecord(
            subject_id=row["subject_id"],
            left_label=Label(row["left_label"]),
            right_label=Label(row["right_label"]),
            source_path=row["source_path"],
            registered_path=row.get("registered_path") or None,
            excluded_sides=tuple(
                Side(s) for s in str(row.get("excluded_sides", "")).split(",") if s
            ),
            annotated=str(row.get("annotated", "false")).lower() == "true",
        )
        for row in frame.to_dict("records")
    )

    instances: tuple[InstanceRecord, ...] = ()
    instances_path = directory / INSTANCES_FILE
    if instances_path.exists():
        _read_header(instances_path)
        frame = _read_tsv(instances_path, skip_header=True)
        _require(frame, INSTANCE_COLUMNS, instances_path)
        instances = tuple(
            InstanceRecord(
                subject_id=row["subject_id"],
                side=Side(row["side"]),
                index=int(row["index"]),
                centroid=(float(row["x"]), float(row["y"]), float(row["z"])),
                patch_size=int(row["patch_size"]),
                path=row["path"],
                label=Label(row["label"]),
            )
            for row in frame.to_dict("records")
        )

    assignments: tuple[SplitAssignment, ...] = ()
    splits_path = directory / SPLITS_FILE
    if splits_path.exists():
        _read_header(splits_path)
        frame = _read_tsv(splits_path, skip_header=True)
        _require(frame, SPLIT_COLUMNS, splits_path)
        assignments = tuple(
            SplitAssignment(
                subject_id=row["subject_id"], fold=int(row["fold"]), split=Split(row["split"])
            )
            for row in frame.to_dict("records")
        )

    return Manifest(
        schema_version=version,
        data_root=str(data_root),
        subjects=subjects,
        instances=instances,
        assignments=assignments,
    )


# =============================================================================
# Centroid annotations
# =============================================================================


def write_annotations(annotations: Iterable[CentroidAnnotation], path: Path) -> None:
    frame = pd.DataFrame(
        [
            {
                "subject_id": a.subject_id,
                "side": a.side.value,
                "x": a.centroid[0],
                "y": a.centroid[1],
                "z": a.centroid[2],
            }
            for a in annotations
        ],
        columns=ANNOTATION_COLUMNS,
    )
    _write_tsv(frame, path)


def read_annotations(path: Path) -> list[CentroidAnnotation]:
    """Read a (subject_id, side, x, y, z) annotation table."""
    frame = _read_tsv(path)
    _require(frame, ANNOTATION_COLUMNS, path)
    return [
        CentroidAnnotation(
            subject_id=row["subject_id"],
            side=Side(row["side"].lower()),
            centroid=(float(row["x"]), float(row["y"]), float(row["z"])),
        )
        for row in frame.to_dict("records")
    ]


# =============================================================================
# Phantom ground truth
# =============================================================================


def _region_columns(prefix: str, region: RegionTruth) -> dict[str, object]:
    lesion = region.lesion_center or (None, None, None)
    return {
        f"{prefix}_cx": region.centroid[0],
        f"{prefix}_cy": region.centroid[1],
        f"{prefix}_cz": region.centroid[2],
        f"{prefix}_ax": region.semi_axes[0],
        f"{prefix}_ay": region.semi_axes[1],
        f"{prefix}_az": region.semi_axes[2],
        f"{prefix}_lesion_x": lesion[0],
        f"{prefix}_lesion_y": lesion[1],
        f"{prefix}_lesion_z": lesion[2],
        f"{prefix}_lesion_radius": region.lesion_radius,
    }


def _region_from(prefix: str, row: dict[str, str]) -> RegionTruth:
    def triple(a: str, b: str, c: str) -> tuple[float, float, float]:
        return (float(row[a]), float(row[b]), float(row[c]))

    has_lesion = bool(row[f"{prefix}_lesion_radius"])
    return RegionTruth(
        centroid=triple(f"{prefix}_cx", f"{prefix}_cy", f"{prefix}_cz"),
        semi_axes=triple(f"{prefix}_ax", f"{prefix}_ay", f"{prefix}_az"),
        lesion_center=(
            triple(f"{prefix}_lesion_x", f"{prefix}_lesion_y", f"{prefix}_lesion_z")
            if has_lesion
            else None
        ),
        lesion_radius=float(row[f"{prefix}_lesion_radius"]) if has_lesion else None,
    )


def write_ground_truth(truths: Iterable[SubjectTruth], path: Path) -> None:
    """Perturbation and region geometry sidecar, one row per subject."""
    rows = []
    for truth in truths:
        p = truth.perturbation
        rows.append(
            {
                "subject_id": truth.subject_id,
                "rx": p.rotation[0],
                "ry": p.rotation[1],
                "rz": p.rotation[2],
                "tx": p.translation[0],
                "ty": p.translation[1],
                "tz": p.translation[2],
                "excluded_side": truth.excluded_side.value if truth.excluded_side else "",
                **_region_columns("left", truth.left),
                **_region_columns("right", truth.right),
            }
        )
    _write_tsv(pd.DataFrame(rows), path)


def read_ground_truth(path: Path) -> list[SubjectTruth]:
    frame = _read_tsv(path)
    _require(frame, ["subject_id", "rx", "ry", "rz", "tx", "ty", "tz"], path)
    truths = []
    for row in frame.to_dict("records"):
        truths.append(
            SubjectTruth(
                subject_id=row["subject_id"],
                perturbation=RigidTransform(
                    rotation=(float(row["rx"]), float(row["ry"]), float(row["rz"])),
                    translation=(float(row["tx"]), float(row["ty"]), float(row["tz"])),
                ),
                left=_region_from("left", row),
                right=_region_from("right", row),
                excluded_side=Side(row["excluded_side"]) if row["excluded_side"] else None,
            )
        )
    return truths


# =============================================================================
# Transform records, predictions, loss curves, sweeps
# =============================================================================


def write_transform_record(transform: RigidTransform, path: Path) -> None:
    path.write_text(transform.to_record() + "\n", encoding="utf-8")


def read_transform_record(path: Path) -> RigidTransform:
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    return RigidTransform.from_record(path.read_text(encoding="utf-8"))


def write_predictions(results: Iterable[EnsembleResult], path: Path) -> None:
    frame = pd.DataFrame(
        [
            {
                "subject_id": r.subject_id,
                "side": r.side.value,
                "p_normal": r.probabilities[0],
                "p_anomaly": r.probabilities[1],
                "prediction": r.prediction.value,
                "n_instances": r.n_instances,
                "threshold": r.threshold,
                "label": r.label.value if r.label else "",
            }
            for r in results
        ]
    )
    _write_tsv(frame, path)


def write_loss_curve(rows: Iterable[dict[str, float]], path: Path) -> None:
    frame = pd.DataFrame(list(rows), columns=["epoch", "train_loss", "val_loss", "lr"])
    _write_tsv(frame, path)


def read_loss_curve(path: Path) -> pd.DataFrame:
    frame = _read_tsv(path)
    _require(frame, ["epoch", "train_loss", "val_loss", "lr"], path)
    return frame.astype({"epoch": int, "train_loss": float, "val_loss": float, "lr": float})


def write_sweep_results(rows: Iterable[SweepRow], path: Path) -> None:
    frame = pd.DataFrame([r.model_dump() for r in rows], columns=SWEEP_COLUMNS)
    _write_tsv(frame, path)


def read_sweep_results(path: Path) -> list[SweepRow]:
    frame = _read_tsv(path)
    _require(frame, SWEEP_COLUMNS, path)
    return [
        SweepRow(
            n=int(row["n"]),
            p=int(row["p"]),
            fold=int(row["fold"]),
            ensembled=str(row["ensembled"]).lower() == "true",
            auprc=float(row["auprc"]),
            f1=float(row["f1"]),
        )
        for row in frame.to_dict("records")
    ]


def write_series(frame: pd.DataFrame, path: Path) -> None:
    """Plot-ready series (any columns) as TSV."""
    _write_tsv(frame, path)
