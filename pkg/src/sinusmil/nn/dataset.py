"""Torch dataset over extracted instance files."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import numpy.typing as npt
import torch
from torch.utils.data import Dataset

from sinusmil.io.nifti import load_volume
from sinusmil.models.manifest import InstanceRecord, Manifest, Split

logger = logging.getLogger(__name__)


class InstanceDataset(Dataset[tuple[torch.Tensor, torch.Tensor]]):
    """Instances of one split and fold, as (1, D, H, W) float32 tensors.

    Items are (instance, target) pairs with target 1 for anomaly.
    """

    def __init__(
        self,
        records: Sequence[InstanceRecord],
        data_root: Path | str,
        *,
        cache: bool = True,
    ) -> None:
        self.records = tuple(records)
        self.data_root = Path(data_root)
        self.cache = cache
        self._cache: dict[int, npt.NDArray[np.float32]] = {}

    @classmethod
    def from_manifest(
        cls, manifest: Manifest, split: Split, fold: int = 0, *, cache: bool = True
    ) -> InstanceDataset:
        records = manifest.instances_in(split, fold)
        logger.debug("%s split of fold %d: %d instances", split.value, fold, len(records))
        return cls(records, manifest.data_root, cache=cache)

    def __len__(self) -> int:
        return len(self.records)

    def _path(self, record: InstanceRecord) -> Path:
        path = Path(record.path)
        return path if path.is_absolute() else self.data_root / path

    def load(self, index: int) -> npt.NDArray[np.float32]:
        """Voxel grid of one instance."""
        if index in self._cache:
            return self._cache[index]
        data = load_volume(self._path(self.records[index])).data.astype(np.float32)
        if self.cache:
            self._cache[index] = data
        return data

    def targets(self) -> npt.NDArray[np.int64]:
        return np.array([r.label.target for r in self.records], dtype=np.int64)

    def __getitem__(self, index: int) -> tuple[torch.Tensor, torch.Tensor]:
        data = torch.from_numpy(self.load(index)).unsqueeze(0)
        target = torch.tensor(self.records[index].label.target, dtype=torch.int64)
        return data, target
