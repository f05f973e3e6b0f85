"""Validation rules for manifests and pipeline configurations.

Each rule returns a (possibly empty) list of Diagnostic objects; rules never
raise on bad content.
"""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from pathlib import Path

from sinusmil.models.anatomy import Label
from sinusmil.models.diagnostic import Diagnostic, Severity
from sinusmil.models.manifest import MANIFEST_SCHEMA_VERSION, Manifest, Split
from sinusmil.models.settings import PATCH_SIZE_GRID, SAMPLE_SIZE_GRID, PipelineConfig

SEMVER = re.compile(r"^(0|[1-9]\d*)\.(0|[1-9]\d*)\.(0|[1-9]\d*)$")

FRACTION_DRIFT_LIMIT = 0.03

# =============================================================================
# MANIFEST Rules
# =============================================================================


def validate_unique_subjects(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-001: Subject ids must be unique."""
    diagnostics: list[Diagnostic] = []
    seen: set[str] = set()

    for i, record in enumerate(manifest.subjects):
        if record.subject_id in seen:
            diagnostics.append(
                Diagnostic(
                    rule_id="MANIFEST-001",
                    severity=Severity.ERROR,
                    message=f"Duplicate subject id '{record.subject_id}'",
                    path=f"subjects[{i}].subject_id",
                    fix="Give every subject a unique id",
                )
            )
        seen.add(record.subject_id)

    return diagnostics


def validate_instance_subjects(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-002: Every instance must belong to a known subject."""
    diagnostics: list[Diagnostic] = []
    known = {record.subject_id for record in manifest.subjects}

    for i, instance in enumerate(manifest.instances):
        if instance.subject_id not in known:
            diagnostics.append(
                Diagnostic(
                    rule_id="MANIFEST-002",
                    severity=Severity.ERROR,
                    message=f"Instance of ({instance.subject_id}, {instance.side.value}) "
                    f"has no subject record",
                    path=f"instances[{i}]",
                    fix="Add the subject to subjects.tsv or drop its instances",
                )
            )

    return diagnostics


def validate_no_leakage(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-003: A subject is in exactly one split per fold."""
    diagnostics: list[Diagnostic] = []
    splits: dict[tuple[str, int], set[Split]] = defaultdict(set)

    for assignment in manifest.assignments:
        splits[(assignment.subject_id, assignment.fold)].add(assignment.split)

    for (subject_id, fold), members in sorted(splits.items()):
        if len(members) > 1:
            names = ", ".join(sorted(s.value for s in members))
            diagnostics.append(
                Diagnostic(
                    rule_id="MANIFEST-003",
                    severity=Severity.ERROR,
                    message=f"Subject '{subject_id}' leaks across splits in fold {fold}: {names}",
                    path=f"assignments[{subject_id}, fold={fold}]",
                    fix="Re-run 'sinusmil split' so each subject gets a single split",
                )
            )

    return diagnostics


def validate_instance_labels(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-004: Instance labels match their subject's side label."""
    diagnostics: list[Diagnostic] = []
    subjects = {record.subject_id: record for record in manifest.subjects}

    for i, instance in enumerate(manifest.instances):
        record = subjects.get(instance.subject_id)
        if record is not None and record.label(instance.side) != instance.label:
            diagnostics.append(
                Diagnostic(
                    rule_id="MANIFEST-004",
                    severity=Severity.ERROR,
                    message=f"Instance label '{instance.label.value}' disagrees with "
                    f"{instance.side.value} label '{record.label(instance.side).value}' "
                    f"of subject '{instance.subject_id}'",
                    path=f"instances[{i}].label",
                    fix="Re-run 'sinusmil extract' after fixing the subject labels",
                )
            )

    return diagnostics


def validate_excluded_sides(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-005: Excluded sinuses have no instances."""
    diagnostics: list[Diagnostic] = []
    subjects = {record.subject_id: record for record in manifest.subjects}

    for i, instance in enumerate(manifest.instances):
        record = subjects.get(instance.subject_id)
        if record is not None and instance.side in record.excluded_sides:
            diagnostics.append(
                Diagnostic(
                    rule_id="MANIFEST-005",
                    severity=Severity.ERROR,
                    message=f"Instance for excluded {instance.side.value} sinus of "
                    f"subject '{instance.subject_id}'",
                    path=f"instances[{i}]",
                    fix="Drop instances of excluded sinuses",
                )
            )

    return diagnostics


def validate_assignments_complete(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-006: With splits present, every subject has one per fold."""
    diagnostics: list[Diagnostic] = []
    if not manifest.assignments:
        return diagnostics

    assigned = {(a.subject_id, a.fold) for a in manifest.assignments}
    for fold in manifest.folds():
        for i, record in enumerate(manifest.subjects):
            if (record.subject_id, fold) not in assigned:
                diagnostics.append(
                    Diagnostic(
                        rule_id="MANIFEST-006",
                        severity=Severity.ERROR,
                        message=f"Subject '{record.subject_id}' has no split in fold {fold}",
                        path=f"subjects[{i}]",
                        fix="Re-run 'sinusmil split'",
                    )
                )

    return diagnostics


def validate_patch_sizes(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-007: All instances share one patch size."""
    diagnostics: list[Diagnostic] = []
    sizes = Counter(instance.patch_size for instance in manifest.instances)

    if len(sizes) > 1:
        expected = sizes.most_common(1)[0][0]
        for i, instance in enumerate(manifest.instances):
            if instance.patch_size != expected:
                diagnostics.append(
                    Diagnostic(
                        rule_id="MANIFEST-007",
                        severity=Severity.ERROR,
                        message=f"Instance patch size {instance.patch_size} differs from "
                        f"the manifest's {expected}",
                        path=f"instances[{i}].patch_size",
                        fix="Extract all instances with one patch size",
                    )
                )

    return diagnostics


def validate_schema_version(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-008: schema_version is semver with a supported major version."""
    diagnostics: list[Diagnostic] = []
    supported_major = MANIFEST_SCHEMA_VERSION.split(".")[0]

    if not SEMVER.match(manifest.schema_version):
        message = f"Invalid schema_version: '{manifest.schema_version}'. Must be MAJOR.MINOR.PATCH"
    elif manifest.schema_version.split(".")[0] != supported_major:
        message = (
            f"Unsupported schema_version '{manifest.schema_version}' "
            f"(this version reads {supported_major}.x.y)"
        )
    else:
        return diagnostics

    diagnostics.append(
        Diagnostic(
            rule_id="MANIFEST-008",
            severity=Severity.ERROR,
            message=message,
            path="schema_version",
            fix=f"Regenerate the manifest with schema {MANIFEST_SCHEMA_VERSION}",
        )
    )
    return diagnostics


def warn_uneven_instances(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-W01: Every included sinus has the same number of instances."""
    diagnostics: list[Diagnostic] = []
    if not manifest.instances:
        return diagnostics

    counts = Counter((i.subject_id, i.side) for i in manifest.instances)
    for subject_id, side, _label in manifest.included_sinuses():
        counts.setdefault((subject_id, side), 0)
    distinct = sorted(set(counts.values()))

    if len(distinct) > 1:
        diagnostics.append(
            Diagnostic(
                rule_id="MANIFEST-W01",
                severity=Severity.WARN,
                message=f"Instance counts per sinus are uneven: {distinct}",
                path="instances",
                fix="Re-run 'sinusmil extract' to draw N instances for every sinus",
            )
        )

    return diagnostics


def warn_fraction_drift(manifest: Manifest) -> list[Diagnostic]:
    """MANIFEST-W02: Split anomalous fractions stay within 3 points of the cohort."""
    diagnostics: list[Diagnostic] = []
    overall = manifest.sinus_counts()
    total = sum(overall.values())
    if not manifest.assignments or total == 0:
        return diagnostics

    cohort_fraction = overall[Label.ANOMALY] / total
    for fold in manifest.folds():
        for split in Split:
            counts = manifest.sinus_counts(split, fold)
            size = sum(counts.values())
            if size == 0:
                continue
            fraction = counts[Label.ANOMALY] / size
            if abs(fraction - cohort_fraction) > FRACTION_DRIFT_LIMIT:
                diagnostics.append(
                    Diagnostic(
                        rule_id="MANIFEST-W02",
                        severity=Severity.WARN,
                        message=f"Anomalous fraction of {split.value} in fold {fold} is "
                        f"{fraction:.1%} vs {cohort_fraction:.1%} overall",
                        path=f"assignments[fold={fold}, split={split.value}]",
                        fix="Use a larger cohort or another split seed",
                    )
                )

    return diagnostics


# =============================================================================
# CONFIG Rules
# =============================================================================


def validate_sample_size(config: PipelineConfig) -> list[Diagnostic]:
    """CONFIG-001: N values lie on the supported grid unless overridden."""
    diagnostics: list[Diagnostic] = []
    if config.sampling.allow_off_grid:
        return diagnostics

    checks = [("sampling.n", config.sampling.n)]
    checks += [(f"sweep.n_grid[{i}]", n) for i, n in enumerate(config.sweep.n_grid)]
    checks += [("sweep.axis_n", config.sweep.axis_n)]
    for path, value in checks:
        if value not in SAMPLE_SIZE_GRID:
            diagnostics.append(
                Diagnostic(
                    rule_id="CONFIG-001",
                    severity=Severity.ERROR,
                    message=f"Sample size N={value} is outside the supported grid "
                    f"{list(SAMPLE_SIZE_GRID)}",
                    path=path,
                    fix="Pick a grid value or set sampling.allow_off_grid: true",
                )
            )

    return diagnostics


def validate_patch_size(config: PipelineConfig) -> list[Diagnostic]:
    """CONFIG-002: P values lie on the supported grid unless overridden."""
    diagnostics: list[Diagnostic] = []
    if config.sampling.allow_off_grid:
        return diagnostics

    checks = [("sampling.patch_size", config.sampling.patch_size)]
    checks += [(f"sweep.p_grid[{i}]", p) for i, p in enumerate(config.sweep.p_grid)]
    checks += [("sweep.axis_p", config.sweep.axis_p)]
    for path, value in checks:
        if value not in PATCH_SIZE_GRID:
            diagnostics.append(
                Diagnostic(
                    rule_id="CONFIG-002",
                    severity=Severity.ERROR,
                    message=f"Patch size P={value} is outside the supported grid "
                    f"{list(PATCH_SIZE_GRID)}",
                    path=path,
                    fix="Pick a grid value or set sampling.allow_off_grid: true",
                )
            )

    return diagnostics


def validate_patch_fits(config: PipelineConfig) -> list[Diagnostic]:
    """CONFIG-003: P never exceeds the registered grid."""
    diagnostics: list[Diagnostic] = []
    limit = min(config.registration.registered_dims)

    sizes = [("sampling.patch_size", config.sampling.patch_size)]
    sizes += [(f"sweep.p_grid[{i}]", p) for i, p in enumerate(config.sweep.p_grid)]
    for path, value in sizes:
        if value > limit:
            diagnostics.append(
                Diagnostic(
                    rule_id="CONFIG-003",
                    severity=Severity.ERROR,
                    message=f"Patch size {value} exceeds the registered grid ({limit} voxels)",
                    path=path,
                    fix=f"Use a patch size <= {limit}",
                )
            )

    return diagnostics


def validate_split_ratios(config: PipelineConfig) -> list[Diagnostic]:
    """CONFIG-004: Split ratios sum to 1."""
    diagnostics: list[Diagnostic] = []
    total = sum(config.splits.ratios)

    if abs(total - 1.0) > 1e-6:
        diagnostics.append(
            Diagnostic(
                rule_id="CONFIG-004",
                severity=Severity.ERROR,
                message=f"Split ratios {list(config.splits.ratios)} sum to {total:g}, not 1",
                path="splits.ratios",
                fix="Adjust train/val/test ratios so they sum to 1",
            )
        )

    return diagnostics


def validate_annotations_exist(config: PipelineConfig) -> list[Diagnostic]:
    """CONFIG-005: A referenced annotation table exists."""
    diagnostics: list[Diagnostic] = []
    if config.sampling.annotations is None:
        return diagnostics

    path = Path(config.sampling.annotations)
    if not path.is_absolute():
        path = Path(config.data_root) / path
    if not path.is_file():
        diagnostics.append(
            Diagnostic(
                rule_id="CONFIG-005",
                severity=Severity.ERROR,
                message=f"Annotation file not found: {path}",
                path="sampling.annotations",
                fix="Point sampling.annotations at a TSV (relative to data_root) or remove it",
            )
        )

    return diagnostics


def warn_full_network_on_cpu(config: PipelineConfig) -> list[Diagnostic]:
    """CONFIG-W01: The full network is slow on CPU."""
    diagnostics: list[Diagnostic] = []

    if config.network.name == "full" and config.train.device == "cpu":
        diagnostics.append(
            Diagnostic(
                rule_id="CONFIG-W01",
                severity=Severity.WARN,
                message="Training the full network on CPU will take a long time",
                path="train.device",
                fix="Use --network tiny for desk-scale runs or train on a GPU",
            )
        )

    return diagnostics
