"""Unit tests for the training loop."""

import numpy as np
import pytest
import torch
from torch.optim import Adam
from torch.utils.data import TensorDataset

from sinusmil.errors import TrainingError
from sinusmil.models.settings import NetworkConfig, TrainConfig
from sinusmil.nn.network import ResNet3d
from sinusmil.nn.training import class_weights, fit, make_scheduler, resolve_device

DIMS = (16, 16, 16)
TINY = NetworkConfig.preset("tiny")


def _blobs(n: int, seed: int) -> TensorDataset:
    """Noise volumes; anomalies carry a bright cube in the middle."""
    generator = torch.Generator().manual_seed(seed)
    data = torch.randn(n, 1, *DIMS, generator=generator) * 0.1
    targets = torch.arange(n, dtype=torch.int64) % 2
    data[targets == 1, :, 6:10, 6:10, 6:10] += 2.0
    return TensorDataset(data, targets)


@pytest.fixture
def config() -> TrainConfig:
    return TrainConfig(epochs=3, batch_size=4, learning_rate=1e-3, device="cpu", seed=5)


class TestScheduler:
    """Tests for the plateau schedule."""

    def test_lr_drops_after_patience_epochs_without_improvement(self) -> None:
        param = torch.nn.Parameter(torch.zeros(1))
        optimizer = Adam([param], lr=1e-4)
        scheduler = make_scheduler(optimizer, TrainConfig(plateau_patience=5, plateau_factor=10))

        scheduler.step(1.0)
        for _ in range(4):
            scheduler.step(1.0)
        assert optimizer.param_groups[0]["lr"] == pytest.approx(1e-4)

        scheduler.step(1.0)
        assert optimizer.param_groups[0]["lr"] == pytest.approx(1e-5)

    def test_improvement_resets_patience(self) -> None:
        param = torch.nn.Parameter(torch.zeros(1))
        optimizer = Adam([param], lr=1e-4)
        scheduler = make_scheduler(optimizer, TrainConfig(plateau_patience=2))

        for loss in (1.0, 1.0, 0.5, 0.5):
            scheduler.step(loss)
        assert optimizer.param_groups[0]["lr"] == pytest.approx(1e-4)

        scheduler.step(0.5)
        assert optimizer.param_groups[0]["lr"] == pytest.approx(1e-5)


class TestClassWeights:
    """Tests for inverse-frequency weights."""

    def test_balanced_classes_weigh_one(self) -> None:
        weights = class_weights(np.array([0, 1, 0, 1]))

        assert torch.allclose(weights, torch.ones(2))

    def test_rare_class_weighs_more(self) -> None:
        weights = class_weights(np.array([0, 0, 0, 1]))

        assert weights[1] == pytest.approx(3 * weights[0])
        assert float(weights.mean()) == pytest.approx(4 / 3)

    def test_missing_class_does_not_divide_by_zero(self) -> None:
        weights = class_weights(np.array([0, 0]))

        assert torch.isfinite(weights).all()


class TestFit:
    """Tests for fit on in-memory datasets."""

    def test_history_covers_every_epoch(self, config: TrainConfig) -> None:
        outcome = fit(ResNet3d(TINY, DIMS), _blobs(12, 0), _blobs(6, 1), config)

        assert [s.epoch for s in outcome.history] == [1, 2, 3]
        assert all(np.isfinite(s.train_loss) and np.isfinite(s.val_loss) for s in outcome.history)
        assert outcome.history[0].lr == pytest.approx(1e-3)

    @pytest.mark.slow
    def test_loss_decreases_on_separable_instances(self) -> None:
        config = TrainConfig(epochs=20, batch_size=8, learning_rate=1e-3, device="cpu", seed=0)

        outcome = fit(ResNet3d(TINY, DIMS), _blobs(50, 0), _blobs(10, 1), config)
        losses = [stats.train_loss for stats in outcome.history]

        assert len(losses) == 20
        assert losses[4] < losses[0]
        assert losses[-1] < losses[0]

    def test_checkpoint_is_best_validation_epoch(self, config: TrainConfig) -> None:
        net = ResNet3d(TINY, DIMS)
        outcome = fit(net, _blobs(12, 0), _blobs(6, 1), config)

        best = min(outcome.history, key=lambda s: s.val_loss)
        assert outcome.checkpoint.epoch == best.epoch
        assert outcome.checkpoint.val_loss == pytest.approx(best.val_loss)
        assert outcome.checkpoint.train == config
        for key, value in net.state_dict().items():
            assert torch.equal(value, outcome.checkpoint.state_dict[key])

    def test_same_seed_same_history(self, config: TrainConfig) -> None:
        runs = []
        for _ in range(2):
            torch.manual_seed(0)
            outcome = fit(ResNet3d(TINY, DIMS), _blobs(8, 0), _blobs(4, 1), config)
            runs.append([(s.train_loss, s.val_loss) for s in outcome.history])

        assert np.allclose(runs[0], runs[1], rtol=1e-5)

    def test_class_weighted_loss_trains(self, config: TrainConfig) -> None:
        weighted = config.model_copy(update={"class_weighted": True, "epochs": 1})

        outcome = fit(ResNet3d(TINY, DIMS), _blobs(8, 0), _blobs(4, 1), weighted)

        assert len(outcome.history) == 1

    def test_empty_split_raises(self, config: TrainConfig) -> None:
        empty = TensorDataset(torch.zeros(0, 1, *DIMS), torch.zeros(0, dtype=torch.int64))

        with pytest.raises(TrainingError, match="non-empty"):
            fit(ResNet3d(TINY, DIMS), _blobs(4, 0), empty, config)

    def test_non_finite_loss_raises(self, config: TrainConfig) -> None:
        poisoned = _blobs(4, 0)
        poisoned.tensors[0][0, 0, 0, 0, 0] = float("nan")

        with pytest.raises(TrainingError, match="non-finite training loss"):
            fit(ResNet3d(TINY, DIMS), poisoned, _blobs(4, 1), config)


def test_resolve_device() -> None:
    assert resolve_device("cpu") == torch.device("cpu")
    assert resolve_device("auto").type in {"cpu", "cuda"}
