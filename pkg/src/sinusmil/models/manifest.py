"""Dataset manifest models.

The manifest binds subjects, per-side labels, extracted instances and the
fold/split assignment of every subject.
"""

from __future__ import annotations

from collections import Counter
from enum import Enum
from pathlib import Path

from pydantic import BaseModel

from sinusmil.models.anatomy import Label, Side

MANIFEST_SCHEMA_VERSION = "1.0.0"


class Split(str, Enum):
    """Dataset partition."""

    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class SubjectRecord(BaseModel, frozen=True):
    """One subject with a label for each side.

    Attributes:
        subject_id: Stable identifier, also used in file names
        left_label: Label of the left region
        right_label: Label of the right region
        source_path: Native volume (relative to the manifest data root or absolute)
        registered_path: Volume registered and resampled to 128^3, once available
        excluded_sides: Sides explicitly left out of the dataset
        annotated: True if the subject contributed centroid annotations
    """

    subject_id: str
    left_label: Label
    right_label: Label
    source_path: str
    registered_path: str | None = None
    excluded_sides: tuple[Side, ...] = ()
    annotated: bool = False

    def label(self, side: Side) -> Label:
        return self.left_label if side is Side.LEFT else self.right_label

    def included_sides(self) -> tuple[Side, ...]:
        return tuple(side for side in Side if side not in self.excluded_sides)


class InstanceRecord(BaseModel, frozen=True):
    """Manifest row for one extracted instance.

    Attributes:
        subject_id: Owning subject
        side: Region side
        index: Position of the instance among the N draws of its (subject, side)
        centroid: Sampled centroid (registered voxel coordinates)
        patch_size: Crop size P
        path: Instance file (relative to the manifest data root or absolute)
        label: Label shared by all instances of the (subject, side)
    """

    subject_id: str
    side: Side
    index: int = 0
    centroid: tuple[float, float, float]
    patch_size: int
    path: str
    label: Label


class SplitAssignment(BaseModel, frozen=True):
    """Split of one subject in one cross-validation fold."""

    subject_id: str
    fold: int
    split: Split


class Manifest(BaseModel, frozen=True):
    """Root dataset ledger.

    Attributes:
        schema_version: Manifest schema version (semver)
        data_root: Directory relative paths are resolved against
        subjects: Subject table
        instances: One row per extracted instance
        assignments: One row per (subject, fold)
    """

    schema_version: str = MANIFEST_SCHEMA_VERSION
    data_root: str = "."
    subjects: tuple[SubjectRecord, ...] = ()
    instances: tuple[InstanceRecord, ...] = ()
    assignments: tuple[SplitAssignment, ...] = ()

    def resolve(self, path: str) -> Path:
        """Resolve a manifest path against the data root."""
        candidate = Path(path)
        if candidate.is_absolute():
            return candidate
        return Path(self.data_root) / candidate

    def subject(self, subject_id: str) -> SubjectRecord:
        for record in self.subjects:
            if record.subject_id == subject_id:
                return record
        raise KeyError(f"Unknown subject '{subject_id}'")

    def folds(self) -> tuple[int, ...]:
        return tuple(sorted({a.fold for a in self.assignments}))

    def split_of(self, subject_id: str, fold: int = 0) -> Split | None:
        for assignment in self.assignments:
            if assignment.subject_id == subject_id and assignment.fold == fold:
                return assignment.split
        return None

    def subjects_in(self, split: Split, fold: int = 0) -> tuple[str, ...]:
        return tuple(
            a.subject_id for a in self.assignments if a.fold == fold and a.split is split
        )

    def instances_in(self, split: Split, fold: int = 0) -> tuple[InstanceRecord, ...]:
        members = set(self.subjects_in(split, fold))
        return tuple(i for i in self.instances if i.subject_id in members)

    def included_sinuses(self) -> tuple[tuple[str, Side, Label], ...]:
        """Every (subject, side, label) that is part of the dataset."""
        return tuple(
            (record.subject_id, side, record.label(side))
            for record in self.subjects
            for side in record.included_sides()
        )

    def sinus_counts(self, split: Split | None = None, fold: int = 0) -> Counter[Label]:
        """Count included regions per label, optionally restricted to a split."""
        members = None if split is None else set(self.subjects_in(split, fold))
        return Counter(
            label
            for subject_id, _side, label in self.included_sinuses()
            if members is None or subject_id in members
        )

    def with_subjects(self, subjects: tuple[SubjectRecord, ...]) -> Manifest:
        return self.model_copy(update={"subjects": subjects})

    def with_instances(self, instances: tuple[InstanceRecord, ...]) -> Manifest:
        return self.model_copy(update={"instances": instances})

    def with_assignments(self, assignments: tuple[SplitAssignment, ...]) -> Manifest:
        return self.model_copy(update={"assignments": assignments})

    def with_data_root(self, data_root: Path | str) -> Manifest:
        return self.model_copy(update={"data_root": str(data_root)})
