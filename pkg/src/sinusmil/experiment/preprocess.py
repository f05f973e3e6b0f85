"""File-writing stages that turn raw volumes into instance datasets.

Each stage reads a manifest, writes its artifacts below its own output
directory and returns a manifest whose data root is that directory.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from sinusmil.core.phantom import (
    annotations_for,
    generate_subject_records,
    render_subject,
    subject_truths,
)
from sinusmil.core.registration import register
from sinusmil.core.sampling import extract_all
from sinusmil.core.volume import resample
from sinusmil.errors import ExtractionError
from sinusmil.io.nifti import load_volume, save_volume
from sinusmil.io.tables import (
    write_annotations,
    write_ground_truth,
    write_manifest,
    write_series,
    write_transform_record,
)
from sinusmil.models.anatomy import CentroidAnnotation, CentroidModel, Label
from sinusmil.models.manifest import InstanceRecord, Manifest
from sinusmil.models.phantom import PhantomSpec, SubjectTruth
from sinusmil.models.settings import REGISTERED_DIMS, RegistrationConfig, SamplingConfig
from sinusmil.models.transform import RigidTransform
from sinusmil.models.volume import Volume

logger = logging.getLogger(__name__)

MANIFEST_DIR = "manifest"
ANNOTATIONS_FILE = "annotations.tsv"
GROUND_TRUTH_FILE = "ground_truth.tsv"
REGISTRATION_LOG = "registration.tsv"

# Volumes and instances are stored in single precision
_DISK_DTYPE = np.float32


@dataclass(frozen=True)
class Cohort:
    """A generated phantom cohort."""

    manifest: Manifest
    annotations: tuple[CentroidAnnotation, ...]
    truths: tuple[SubjectTruth, ...]


def rebase_manifest(manifest: Manifest, data_root: Path) -> Manifest:
    """Re-express every relative path of a manifest against a new data root."""
    root = data_root.resolve()

    def move(path: str | None) -> str | None:
        if path is None:
            return None
        return os.path.relpath(manifest.resolve(path).resolve(), root)

    subjects = tuple(
        r.model_copy(
            update={
                "source_path": move(r.source_path),
                "registered_path": move(r.registered_path),
            }
        )
        for r in manifest.subjects
    )
    instances = tuple(i.model_copy(update={"path": move(i.path)}) for i in manifest.instances)
    return manifest.model_copy(
        update={"data_root": str(root), "subjects": subjects, "instances": instances}
    )


def generate_cohort(
    spec: PhantomSpec,
    out_dir: Path,
    *,
    registered_dims: tuple[int, int, int] = REGISTERED_DIMS,
) -> Cohort:
    """Render every phantom subject and write volumes, manifest and sidecars."""
    (out_dir / "volumes").mkdir(parents=True, exist_ok=True)
    records = generate_subject_records(spec)
    truths = subject_truths(spec)

    for index, (record, truth) in enumerate(zip(records, truths)):
        rendered = render_subject(spec, truth, index)
        save_volume(rendered.volume, out_dir / record.source_path, dtype=_DISK_DTYPE)
        if (index + 1) % 25 == 0 or index + 1 == len(records):
            logger.info("Rendered %d/%d phantom subjects", index + 1, len(records))

    annotations = annotations_for(spec, truths, records, registered_dims)
    manifest = Manifest(data_root=str(out_dir.resolve()), subjects=tuple(records))
    write_manifest(manifest, out_dir / MANIFEST_DIR)
    write_annotations(annotations, out_dir / ANNOTATIONS_FILE)
    write_ground_truth(truths, out_dir / GROUND_TRUTH_FILE)

    counts = manifest.sinus_counts()
    logger.info(
        "Phantom cohort: %d subjects, %d sinuses (%d anomalous), %d annotated",
        len(records),
        sum(counts.values()),
        counts.get(Label.ANOMALY, 0),
        sum(r.annotated for r in records),
    )
    return Cohort(manifest=manifest, annotations=tuple(annotations), truths=tuple(truths))


def recovery_error(recovered: RigidTransform, perturbation: RigidTransform) -> tuple[float, float]:
    """(rotation degrees, translation voxels) left after undoing a known perturbation."""
    residual = recovered.compose(perturbation)
    return residual.rotation_angle(), residual.translation_norm()


def register_cohort(
    manifest: Manifest,
    config: RegistrationConfig,
    out_dir: Path,
    *,
    truths: Mapping[str, SubjectTruth] | None = None,
) -> Manifest:
    """Register every subject to the fixed subject and resample to the registered grid.

    Writes registered/<id>.nii.gz, transforms/<id>.txt and a registration.tsv
    log (with recovery errors when ground truth is given).
    """
    if not manifest.subjects:
        raise ValueError("manifest has no subjects to register")
    fixed_id = config.fixed_subject or manifest.subjects[0].subject_id
    fixed = load_volume(manifest.resolve(manifest.subject(fixed_id).source_path))
    (out_dir / "registered").mkdir(parents=True, exist_ok=True)
    (out_dir / "transforms").mkdir(parents=True, exist_ok=True)
    logger.info("Registering %d subjects to %s", len(manifest.subjects), fixed_id)

    subjects = []
    rows = []
    for record in manifest.subjects:
        if record.subject_id == fixed_id:
            transform, warped = RigidTransform.identity(), fixed
            row: dict[str, object] = {"converged": True, "ncc_before": 1.0, "ncc_after": 1.0}
        else:
            moving = load_volume(manifest.resolve(record.source_path))
            result = register(fixed, moving, config)
            transform, warped = result.transform, result.warped
            row = {
                "converged": result.converged,
                "ncc_before": result.ncc_before,
                "ncc_after": result.ncc_after,
            }
        if warped.shape != tuple(config.registered_dims):
            warped = resample(warped, config.registered_dims)

        registered_path = Path("registered") / f"{record.subject_id}.nii.gz"
        save_volume(warped, out_dir / registered_path, dtype=_DISK_DTYPE)
        write_transform_record(transform, out_dir / "transforms" / f"{record.subject_id}.txt")

        row = {"subject_id": record.subject_id, **row, "transform": transform.to_record()}
        if truths is not None and record.subject_id in truths:
            rotation_error, translation_error = recovery_error(
                transform, truths[record.subject_id].perturbation
            )
            row["rotation_error"] = rotation_error
            row["translation_error"] = translation_error
        rows.append(row)
        logger.debug("Registered %s: %s", record.subject_id, row)

        subjects.append(
            record.model_copy(update={"registered_path": str(out_dir.resolve() / registered_path)})
        )

    write_series(pd.DataFrame(rows), out_dir / REGISTRATION_LOG)
    registered = rebase_manifest(manifest.with_subjects(tuple(subjects)), out_dir)
    write_manifest(registered, out_dir / MANIFEST_DIR)
    return registered


def extract_cohort(
    manifest: Manifest,
    model: CentroidModel,
    sampling: SamplingConfig,
    seed: int,
    out_dir: Path,
    *,
    subject_ids: Iterable[str] | None = None,
) -> Manifest:
    """Extract N instances per included sinus and record them in the manifest.

    Raises:
        ExtractionError: If a subject has no registered volume yet.
    """
    (out_dir / "instances").mkdir(parents=True, exist_ok=True)
    wanted = set(subject_ids) if subject_ids is not None else None
    instances: list[InstanceRecord] = []

    for record in manifest.subjects:
        if wanted is not None and record.subject_id not in wanted:
            continue
        if record.registered_path is None:
            raise ExtractionError(f"subject {record.subject_id} has no registered volume")
        volume = load_volume(manifest.resolve(record.registered_path))
        sides = record.included_sides()
        extracted = extract_all(
            volume,
            model,
            sampling.n,
            sampling.patch_size,
            seed,
            subject_id=record.subject_id,
            sides=sides,
            labels={side: record.label(side) for side in sides},
            instance_dims=sampling.instance_dims,
            use_mean_for_single=sampling.use_mean_for_single,
        )
        for position, instance in enumerate(extracted):
            index = position % sampling.n
            relative = Path("instances") / (
                f"{record.subject_id}_{instance.side.value}_{index:02d}.nii.gz"
            )
            save_volume(Volume(data=instance.data), out_dir / relative, dtype=_DISK_DTYPE)
            instances.append(
                InstanceRecord(
                    subject_id=record.subject_id,
                    side=instance.side,
                    index=index,
                    centroid=instance.centroid,
                    patch_size=instance.patch_size,
                    path=str(out_dir.resolve() / relative),
                    label=record.label(instance.side),
                )
            )

    logger.info(
        "Extracted %d instances (N=%d, P=%d)", len(instances), sampling.n, sampling.patch_size
    )
    extracted_manifest = rebase_manifest(manifest.with_instances(tuple(instances)), out_dir)
    write_manifest(extracted_manifest, out_dir / MANIFEST_DIR)
    return extracted_manifest
