"""Per-instance scoring and multiple-instance ensemble prediction."""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import torch
from torch import nn
from torch.utils.data import DataLoader

from sinusmil.core.ensemble import ensemble_result, probabilities_from_logits
from sinusmil.errors import EnsembleError
from sinusmil.models.anatomy import Side
from sinusmil.models.manifest import InstanceRecord, Manifest, Split
from sinusmil.models.report import EnsembleResult
from sinusmil.models.volume import Instance
from sinusmil.nn.dataset import InstanceDataset
from sinusmil.nn.training import resolve_device

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ManifestPrediction:
    """Scores of every instance in a split plus their per-region ensembles.

    Attributes:
        records: Scored instances, in manifest order
        probabilities: (n, 2) softmax probabilities, row i for records[i]
        results: One ensemble result per (subject, side), in first-seen order
    """

    records: tuple[InstanceRecord, ...]
    probabilities: npt.NDArray[np.float64]
    results: tuple[EnsembleResult, ...]


def predict_logits(
    net: nn.Module,
    batch: npt.ArrayLike | torch.Tensor,
    device: torch.device | None = None,
) -> npt.NDArray[np.float64]:
    """Logits of a (B, D, H, W) or (B, 1, D, H, W) batch in evaluation mode."""
    device = device or next(net.parameters()).device
    tensor = torch.as_tensor(batch, dtype=next(net.parameters()).dtype)
    if tensor.dim() == 4:
        tensor = tensor.unsqueeze(1)
    net.eval()
    with torch.no_grad():
        logits = net(tensor.to(device))
    result: npt.NDArray[np.float64] = logits.detach().cpu().double().numpy()
    return result


def ensemble_predict(
    net: nn.Module,
    instances: Sequence[Instance],
    *,
    threshold: float = 0.5,
    device: torch.device | None = None,
) -> EnsembleResult:
    """Average the softmax of n instances of one (subject, side).

    Raises:
        EnsembleError: If no instances are given or they mix regions.
    """
    if not instances:
        raise EnsembleError("ensemble needs at least one instance")
    keys = {(i.subject_id, i.side) for i in instances}
    if len(keys) != 1:
        raise EnsembleError(f"instances span {len(keys)} (subject, side) pairs; expected one")
    first = instances[0]
    logits = predict_logits(net, np.stack([i.data for i in instances]), device)
    return ensemble_result(
        first.subject_id,
        first.side,
        probabilities_from_logits(logits),
        threshold=threshold,
        label=first.label,
    )


def score_dataset(
    net: nn.Module,
    dataset: InstanceDataset,
    *,
    batch_size: int = 16,
    device: torch.device | None = None,
) -> npt.NDArray[np.float64]:
    """Softmax probabilities of every instance, shape (n, 2)."""
    device = device or next(net.parameters()).device
    loader: DataLoader[tuple[torch.Tensor, torch.Tensor]] = DataLoader(
        dataset, batch_size=batch_size, shuffle=False
    )
    rows = [predict_logits(net, inputs, device) for inputs, _ in loader]
    if not rows:
        return np.zeros((0, 2), dtype=np.float64)
    return probabilities_from_logits(np.concatenate(rows, axis=0))


def predict_manifest(
    net: nn.Module,
    manifest: Manifest,
    *,
    fold: int = 0,
    split: Split = Split.TEST,
    threshold: float = 0.5,
    batch_size: int = 16,
    device: str = "auto",
) -> ManifestPrediction:
    """Score one split of a fold and ensemble the instances of each region."""
    torch_device = resolve_device(device)
    net.to(torch_device)
    dataset = InstanceDataset.from_manifest(manifest, split, fold)
    probabilities = score_dataset(net, dataset, batch_size=batch_size, device=torch_device)

    groups: dict[tuple[str, Side], list[int]] = defaultdict(list)
    for row, record in enumerate(dataset.records):
        groups[(record.subject_id, record.side)].append(row)

    results = tuple(
        ensemble_result(
            subject_id,
            side,
            probabilities[rows],
            threshold=threshold,
            label=dataset.records[rows[0]].label,
        )
        for (subject_id, side), rows in groups.items()
    )
    logger.info(
        "Fold %d %s split: %d instances, %d regions",
        fold,
        split.value,
        len(dataset),
        len(results),
    )
    return ManifestPrediction(
        records=dataset.records, probabilities=probabilities, results=results
    )
