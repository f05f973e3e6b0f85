"""Stratified patient-level train/val/test splits and fold rotation.

A subject, both of its sides and all of its instances always land in one
split. Stratification works on included sinuses: each split aims at its
share of the cohort's normal and anomalous sinus counts.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
from sklearn.model_selection import StratifiedGroupKFold

from sinusmil.errors import SplitError
from sinusmil.models.anatomy import Label
from sinusmil.models.manifest import Manifest, Split, SplitAssignment, SubjectRecord

logger = logging.getLogger(__name__)

_SPLITS = (Split.TRAIN, Split.VAL, Split.TEST)


def _label_counts(record: SubjectRecord) -> npt.NDArray[np.float64]:
    labels = [record.label(side) for side in record.included_sides()]
    return np.array(
        [labels.count(Label.NORMAL), labels.count(Label.ANOMALY)], dtype=np.float64
    )


def _ordered(records: Sequence[SubjectRecord], rng: np.random.Generator) -> list[SubjectRecord]:
    """Seeded shuffle, then subjects with more included sides first."""
    shuffled = [records[i] for i in rng.permutation(len(records))]
    return sorted(shuffled, key=lambda r: -len(r.included_sides()))


def _apportion(
    records: Sequence[SubjectRecord],
    targets: npt.NDArray[np.float64],
) -> list[int]:
    """Greedy bin choice per subject minimizing squared count deviation.

    Args:
        records: Subjects in processing order.
        targets: (bins, 2) target (normal, anomaly) sinus counts per bin.

    Returns:
        Bin index per record.
    """
    counts = np.zeros_like(targets)
    chosen: list[int] = []
    for record in records:
        v = _label_counts(record)
        # growth of sum((counts - targets)^2) when v is added to each bin
        cost = 2.0 * (counts - targets) @ v + v @ v
        best = int(np.argmin(cost))
        counts[best] += v
        chosen.append(best)
    return chosen


def _select_validation(
    records: Sequence[SubjectRecord],
    target: npt.NDArray[np.float64],
) -> set[str]:
    """Pick subjects from a chunk whose counts approach the validation target."""
    counts = np.zeros(2)
    picked: set[str] = set()
    for record in records:
        v = _label_counts(record)
        if np.sum((counts + v - target) ** 2) < np.sum((counts - target) ** 2):
            counts += v
            picked.add(record.subject_id)
    if not picked and records:
        picked.add(records[0].subject_id)
    return picked


def _check_strata(totals: npt.NDArray[np.float64]) -> None:
    for label, count in zip(Label, totals):
        if 0 < count < len(_SPLITS):
            raise SplitError(
                f"only {int(count)} {label.value} sinus(es); "
                f"at least {len(_SPLITS)} are needed to populate every split"
            )


def make_splits(
    manifest: Manifest,
    ratios: Sequence[float] = (0.807, 0.091, 0.102),
    seed: int = 0,
    folds: int = 3,
) -> Manifest:
    """Assign every subject to train/val/test for each fold.

    The test set is shared by all folds. The train+val pool is cut into
    `folds` disjoint chunks with StratifiedGroupKFold (groups = subjects,
    y = sinus labels); fold f draws its validation subjects from chunk f and
    trains on the rest of the pool.

    Raises:
        SplitError: If a label stratum or the pool is too small.
    """
    if len(ratios) != 3 or min(ratios) <= 0 or abs(sum(ratios) - 1.0) > 1e-6:
        raise SplitError(f"ratios must be 3 positive values summing to 1, got {tuple(ratios)}")
    if folds < 2:
        raise SplitError(f"folds must be >= 2, got {folds}")

    records = list(manifest.subjects)
    totals = np.sum([_label_counts(r) for r in records], axis=0) if records else np.zeros(2)
    _check_strata(totals)

    rng = np.random.default_rng(seed)
    order = _ordered(records, rng)
    targets = np.outer(np.asarray(ratios, dtype=np.float64), totals)
    bins = _apportion(order, targets)
    test_ids = {r.subject_id for r, b in zip(order, bins) if _SPLITS[b] is Split.TEST}
    pool = [r for r in order if r.subject_id not in test_ids]
    if not test_ids:
        raise SplitError("test split would be empty; the cohort is too small")

    pool_groups = {r.subject_id for r in pool if r.included_sides()}
    if len(pool_groups) < folds:
        raise SplitError(f"{len(pool_groups)} subjects in train+val cannot fill {folds} folds")

    rows = [(r.subject_id, r.label(side).target) for r in pool for side in r.included_sides()]
    groups = np.array([subject_id for subject_id, _ in rows])
    y = np.array([target for _, target in rows])
    splitter = StratifiedGroupKFold(n_splits=folds, shuffle=True, random_state=seed % 2**32)
    val_target = targets[1]

    assignments: list[SplitAssignment] = []
    for fold, (_, chunk_index) in enumerate(splitter.split(np.zeros(len(rows)), y, groups)):
        chunk_ids = set(groups[chunk_index])
        chunk = [r for r in pool if r.subject_id in chunk_ids]
        val_ids = _select_validation(chunk, val_target)
        for record in records:
            if record.subject_id in test_ids:
                split = Split.TEST
            elif record.subject_id in val_ids:
                split = Split.VAL
            else:
                split = Split.TRAIN
            assignments.append(
                SplitAssignment(subject_id=record.subject_id, fold=fold, split=split)
            )
        logger.info(
            "Fold %d: %d train / %d val / %d test subjects",
            fold,
            len(pool) - len(val_ids),
            len(val_ids),
            len(test_ids),
        )

    return manifest.with_assignments(tuple(assignments))
