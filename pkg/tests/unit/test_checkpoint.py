"""Unit tests for self-describing checkpoints."""

from pathlib import Path

import pytest
import torch

from sinusmil.errors import CheckpointError
from sinusmil.io.checkpoint import Checkpoint, config_digest, load_checkpoint, save_checkpoint
from sinusmil.models.settings import NetworkConfig, TrainConfig
from sinusmil.nn.network import ResNet3d

TINY = NetworkConfig.preset("tiny")


@pytest.fixture
def checkpoint() -> Checkpoint:
    torch.manual_seed(0)
    net = ResNet3d(TINY, (16, 16, 16))
    return Checkpoint(
        state_dict=net.state_dict(),
        epoch=7,
        val_loss=0.4321,
        network=TINY,
        train=TrainConfig(epochs=10),
    )


class TestDigest:
    """Tests for the config digest."""

    def test_runtime_fields_do_not_change_digest(self) -> None:
        a = config_digest(TINY, TrainConfig(device="cpu", num_workers=0, cache=True))
        b = config_digest(TINY, TrainConfig(device="cuda", num_workers=4, cache=False))

        assert a == b

    def test_learning_settings_change_digest(self) -> None:
        assert config_digest(TINY, TrainConfig()) != config_digest(
            TINY, TrainConfig(learning_rate=1e-3)
        )
        assert config_digest(TINY, TrainConfig()) != config_digest(
            NetworkConfig.preset("full"), TrainConfig()
        )


class TestSaveLoad:
    """Tests for writing and reading checkpoints."""

    def test_weights_and_metadata_survive(self, tmp_path: Path, checkpoint: Checkpoint) -> None:
        path = tmp_path / "checkpoint.pt"
        save_checkpoint(checkpoint, path)

        loaded = load_checkpoint(path, network=TINY, train=TrainConfig(epochs=10, device="cpu"))

        assert loaded.epoch == 7
        assert loaded.val_loss == pytest.approx(0.4321)
        assert loaded.network == TINY
        assert loaded.digest == checkpoint.digest
        for key, value in checkpoint.state_dict.items():
            assert torch.equal(loaded.state_dict[key], value)

    def test_loaded_weights_rebuild_the_network(
        self, tmp_path: Path, checkpoint: Checkpoint
    ) -> None:
        path = tmp_path / "checkpoint.pt"
        save_checkpoint(checkpoint, path)
        loaded = load_checkpoint(path)

        net = ResNet3d(loaded.network, (16, 16, 16))
        net.load_state_dict(loaded.state_dict)

        assert torch.equal(net.fc.weight, checkpoint.state_dict["fc.weight"])

    def test_other_expected_config_raises(self, tmp_path: Path, checkpoint: Checkpoint) -> None:
        path = tmp_path / "checkpoint.pt"
        save_checkpoint(checkpoint, path)

        with pytest.raises(CheckpointError, match="different network or training config"):
            load_checkpoint(path, train=TrainConfig(epochs=20))

    def test_tampered_digest_raises(self, tmp_path: Path, checkpoint: Checkpoint) -> None:
        path = tmp_path / "checkpoint.pt"
        save_checkpoint(checkpoint, path)
        payload = torch.load(path, weights_only=True)
        payload["train"]["learning_rate"] = 0.5
        torch.save(payload, path)

        with pytest.raises(CheckpointError, match="digest"):
            load_checkpoint(path)

    def test_foreign_file_raises(self, tmp_path: Path) -> None:
        path = tmp_path / "checkpoint.pt"
        torch.save({"weights": torch.zeros(2)}, path)

        with pytest.raises(CheckpointError, match="not a sinusmil checkpoint"):
            load_checkpoint(path)

    def test_garbage_file_raises(self, tmp_path: Path) -> None:
        path = tmp_path / "checkpoint.pt"
        path.write_bytes(b"definitely not a checkpoint")

        with pytest.raises(CheckpointError, match="unreadable"):
            load_checkpoint(path)

    def test_missing_file_raises(self, tmp_path: Path) -> None:
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "checkpoint.pt")

    def test_missing_directory_raises(self, tmp_path: Path, checkpoint: Checkpoint) -> None:
        with pytest.raises(FileNotFoundError):
            save_checkpoint(checkpoint, tmp_path / "absent" / "checkpoint.pt")
