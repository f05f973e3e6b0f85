"""Supervised training with Adam, a plateau schedule and best-validation selection."""

from __future__ import annotations

import copy
import logging
import math
import random
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import torch
from torch import nn
from torch.optim import Adam, Optimizer
from torch.optim.lr_scheduler import ReduceLROnPlateau
from torch.utils.data import DataLoader, Dataset

from sinusmil.errors import TrainingError
from sinusmil.io.checkpoint import Checkpoint
from sinusmil.models.manifest import Manifest, Split
from sinusmil.models.settings import TrainConfig
from sinusmil.nn.dataset import InstanceDataset
from sinusmil.nn.network import ResNet3d

logger = logging.getLogger(__name__)

Batch = tuple[torch.Tensor, torch.Tensor]


@dataclass(frozen=True)
class EpochStats:
    """One row of the loss curve."""

    epoch: int
    train_loss: float
    val_loss: float
    lr: float

    def as_row(self) -> dict[str, float]:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "lr": self.lr,
        }


@dataclass(frozen=True)
class TrainingOutcome:
    """Best checkpoint and the full loss history."""

    checkpoint: Checkpoint
    history: tuple[EpochStats, ...]


def resolve_device(name: str) -> torch.device:
    if name == "auto":
        return torch.device("cuda" if torch.cuda.is_available() else "cpu")
    return torch.device(name)


def seed_everything(seed: int, deterministic: bool = False) -> None:
    """Seed python, numpy and torch; optionally force deterministic kernels."""
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.backends.cudnn.benchmark = False


def make_scheduler(optimizer: Optimizer, config: TrainConfig) -> ReduceLROnPlateau:
    """Divide the LR by plateau_factor after plateau_patience epochs without improvement."""
    # torch reduces once the bad-epoch count exceeds `patience`
    return ReduceLROnPlateau(
        optimizer,
        mode="min",
        factor=1.0 / config.plateau_factor,
        patience=config.plateau_patience - 1,
    )


def class_weights(targets: npt.NDArray[np.int64]) -> torch.Tensor:
    """Inverse class frequency weights, normalized to mean 1."""
    counts = np.bincount(np.asarray(targets, dtype=np.int64), minlength=2).astype(np.float64)
    counts[counts == 0] = 1.0
    weights = counts.sum() / (len(counts) * counts)
    return torch.tensor(weights, dtype=torch.float32)


def _targets(dataset: Dataset[Batch]) -> npt.NDArray[np.int64]:
    if isinstance(dataset, InstanceDataset):
        return dataset.targets()
    return np.array(
        [int(dataset[i][1]) for i in range(len(dataset))],  # type: ignore[arg-type]
        dtype=np.int64,
    )


def _mean_loss(
    net: nn.Module, loader: DataLoader[Batch], criterion: nn.Module, device: torch.device
) -> float:
    net.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for inputs, targets in loader:
            inputs, targets = inputs.to(device), targets.to(device)
            loss = criterion(net(inputs), targets)
            total += float(loss) * len(targets)
            count += len(targets)
    return total / max(count, 1)


def fit(
    net: ResNet3d,
    train_data: Dataset[Batch],
    val_data: Dataset[Batch],
    config: TrainConfig | None = None,
) -> TrainingOutcome:
    """Train `net` in place and return the best-validation-loss checkpoint.

    Raises:
        TrainingError: If a dataset is empty or the loss becomes non-finite.
    """
    config = config or TrainConfig()
    n_train = len(train_data)  # type: ignore[arg-type]
    n_val = len(val_data)  # type: ignore[arg-type]
    if n_train == 0 or n_val == 0:
        raise TrainingError(
            "train and validation splits must be non-empty", train=n_train, val=n_val
        )

    seed_everything(config.seed, config.deterministic)
    device = resolve_device(config.device)
    net.to(device)

    generator = torch.Generator().manual_seed(config.seed)
    train_loader: DataLoader[Batch] = DataLoader(
        train_data,
        batch_size=config.batch_size,
        shuffle=True,
        generator=generator,
        num_workers=config.num_workers,
    )
    val_loader: DataLoader[Batch] = DataLoader(
        val_data, batch_size=config.batch_size, shuffle=False, num_workers=config.num_workers
    )

    weight = class_weights(_targets(train_data)).to(device) if config.class_weighted else None
    criterion = nn.CrossEntropyLoss(weight=weight)
    optimizer = Adam(net.parameters(), lr=config.learning_rate)
    scheduler = make_scheduler(optimizer, config)

    history: list[EpochStats] = []
    best_loss = math.inf
    best_state: dict[str, torch.Tensor] = {}
    best_epoch = 0

    for epoch in range(1, config.epochs + 1):
        net.train()
        lr = float(optimizer.param_groups[0]["lr"])
        total, count = 0.0, 0
        for batch, (inputs, targets) in enumerate(train_loader):
            inputs, targets = inputs.to(device), targets.to(device)
            optimizer.zero_grad()
            loss = criterion(net(inputs), targets)
            value = float(loss)
            if not math.isfinite(value):
                raise TrainingError("non-finite training loss", epoch=epoch, batch=batch, lr=lr)
            loss.backward()
            optimizer.step()
            total += value * len(targets)
            count += len(targets)

        train_loss = total / count
        val_loss = _mean_loss(net, val_loader, criterion, device)
        if not math.isfinite(val_loss):
            raise TrainingError("non-finite validation loss", epoch=epoch, lr=lr)
        history.append(EpochStats(epoch=epoch, train_loss=train_loss, val_loss=val_loss, lr=lr))
        logger.info(
            "Epoch %d/%d: train %.4f, val %.4f, lr %.2e",
            epoch,
            config.epochs,
            train_loss,
            val_loss,
            lr,
        )

        if val_loss < best_loss:
            best_loss, best_epoch = val_loss, epoch
            best_state = copy.deepcopy({k: v.detach().cpu() for k, v in net.state_dict().items()})
        scheduler.step(val_loss)

    net.load_state_dict(best_state)
    logger.info("Best validation loss %.4f at epoch %d", best_loss, best_epoch)
    checkpoint = Checkpoint(
        state_dict=best_state,
        epoch=best_epoch,
        val_loss=best_loss,
        network=net.config,
        train=config,
    )
    return TrainingOutcome(checkpoint=checkpoint, history=tuple(history))


def train(
    net: ResNet3d,
    manifest: Manifest,
    config: TrainConfig | None = None,
    *,
    fold: int = 0,
) -> TrainingOutcome:
    """Train on the train split of a fold, selecting on its val split."""
    config = config or TrainConfig()
    train_data = InstanceDataset.from_manifest(manifest, Split.TRAIN, fold, cache=config.cache)
    val_data = InstanceDataset.from_manifest(manifest, Split.VAL, fold, cache=config.cache)
    logger.info(
        "Fold %d: training on %d instances, validating on %d",
        fold,
        len(train_data),
        len(val_data),
    )
    return fit(net, train_data, val_data, config)
