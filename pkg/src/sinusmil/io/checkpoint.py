"""Self-describing network checkpoints.

A checkpoint stores the weights, the epoch and validation loss it was taken
at, the network and training configs, and a SHA-256 digest over both
configs. Loading recomputes the digest and, when expected configs are
given, compares them too.
"""

from __future__ import annotations

import hashlib
import json
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import torch

from sinusmil.errors import CheckpointError
from sinusmil.models.settings import NetworkConfig, TrainConfig

CHECKPOINT_FORMAT = 1

# Runtime knobs that do not change what is learned
_RUNTIME_FIELDS = {"device", "num_workers", "cache"}


def config_digest(network: NetworkConfig, train: TrainConfig) -> str:
    """SHA-256 over the canonical JSON of both configs."""
    payload = {
        "network": network.model_dump(mode="json"),
        "train": train.model_dump(mode="json", exclude=_RUNTIME_FIELDS),
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Checkpoint:
    """Weights plus the context they were trained in.

    Attributes:
        state_dict: Network parameters and buffers
        epoch: 1-based epoch the weights come from
        val_loss: Validation loss at that epoch
        network: Network layout
        train: Training settings
    """

    state_dict: dict[str, torch.Tensor] = field(repr=False)
    epoch: int
    val_loss: float
    network: NetworkConfig
    train: TrainConfig

    @property
    def digest(self) -> str:
        return config_digest(self.network, self.train)


def save_checkpoint(checkpoint: Checkpoint, path: Path) -> None:
    """Write a checkpoint; the parent directory must exist."""
    if not path.parent.exists():
        raise FileNotFoundError(f"Directory not found: {path.parent}")
    payload: dict[str, Any] = {
        "format": CHECKPOINT_FORMAT,
        "state_dict": {k: v.detach().cpu() for k, v in checkpoint.state_dict.items()},
        "epoch": checkpoint.epoch,
        "val_loss": float(checkpoint.val_loss),
        "network": checkpoint.network.model_dump(mode="json"),
        "train": checkpoint.train.model_dump(mode="json"),
        "digest": checkpoint.digest,
    }
    torch.save(payload, path)


def load_checkpoint(
    path: Path,
    *,
    network: NetworkConfig | None = None,
    train: TrainConfig | None = None,
) -> Checkpoint:
    """Read a checkpoint and verify its config digest.

    Raises:
        FileNotFoundError: If the file does not exist.
        CheckpointError: If the file is not a checkpoint, its digest does not
            match its configs, or it was trained with other configs than the
            expected ones.
    """
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except (RuntimeError, EOFError, OSError, pickle.UnpicklingError) as e:
        raise CheckpointError(f"unreadable checkpoint: {e}", path) from e
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError("not a sinusmil checkpoint", path)

    stored_network = NetworkConfig.model_validate(payload["network"])
    stored_train = TrainConfig.model_validate(payload["train"])
    digest = config_digest(stored_network, stored_train)
    if digest != payload["digest"]:
        raise CheckpointError("config digest does not match the stored configs", path)

    if network is not None or train is not None:
        expected = config_digest(network or stored_network, train or stored_train)
        if expected != digest:
            raise CheckpointError(
                "checkpoint was trained with a different network or training config", path
            )

    return Checkpoint(
        state_dict=payload["state_dict"],
        epoch=int(payload["epoch"]),
        val_loss=float(payload["val_loss"]),
        network=stored_network,
        train=stored_train,
    )
