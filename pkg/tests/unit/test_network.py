"""Unit tests for the 3D residual classifier."""

import pytest
import torch

from sinusmil.models.settings import NetworkConfig
from sinusmil.nn.network import BasicBlock3d, ResNet3d, build_network, count_parameters

TINY = NetworkConfig.preset("tiny")
SMALL_DIMS = (16, 16, 16)


def closed_form_parameter_count(config: NetworkConfig) -> int:
    """Weights of bias-free convolutions, batch norms and the linear head."""
    c = config.channels
    k = config.stem_kernel
    total = k**3 * config.in_channels * c[0] + 2 * c[0]
    previous = c[0]
    for stage, (channels, blocks) in enumerate(zip(c, config.blocks)):
        for block in range(blocks):
            inputs = previous if block == 0 else channels
            stride = 2 if stage > 0 and block == 0 else 1
            total += 27 * inputs * channels + 2 * channels
            total += 27 * channels * channels + 2 * channels
            if stride != 1 or inputs != channels:
                total += inputs * channels + 2 * channels
        previous = channels
    return total + c[-1] * config.num_classes + config.num_classes


class TestArchitecture:
    """Tests for layout and shapes."""

    def test_output_is_two_logits(self) -> None:
        net = ResNet3d(TINY, SMALL_DIMS).eval()

        logits = net(torch.randn(3, 1, *SMALL_DIMS))

        assert logits.shape == (3, 2)

    def test_default_instance_size(self) -> None:
        net = build_network(TINY).eval()

        assert net(torch.randn(1, 1, 64, 64, 64)).shape == (1, 2)

    @pytest.mark.parametrize("shape", [(2, 1, 16, 16, 8), (2, 2, 16, 16, 16), (1, 16, 16, 16)])
    def test_wrong_input_shape_raises(self, shape: tuple[int, ...]) -> None:
        net = ResNet3d(TINY, SMALL_DIMS)

        with pytest.raises(ValueError, match="expected input of shape"):
            net(torch.randn(*shape))

    def test_tiny_parameter_count_matches_closed_form(self) -> None:
        assert count_parameters(ResNet3d(TINY, SMALL_DIMS)) == closed_form_parameter_count(TINY)

    def test_full_parameter_count(self) -> None:
        full = NetworkConfig.preset("full")

        assert closed_form_parameter_count(full) == 33_161_026
        assert count_parameters(build_network(full)) == 33_161_026

    def test_projection_only_when_shape_changes(self) -> None:
        assert BasicBlock3d(8, 8).downsample is None
        assert BasicBlock3d(8, 16).downsample is not None
        assert BasicBlock3d(8, 8, stride=2).downsample is not None

    def test_batch_norm_starts_at_identity(self) -> None:
        net = ResNet3d(TINY, SMALL_DIMS)
        norms = [m for m in net.modules() if isinstance(m, torch.nn.BatchNorm3d)]

        assert all(torch.all(m.weight == 1) and torch.all(m.bias == 0) for m in norms)


class TestDeterminism:
    """Same seed, same weights, same outputs."""

    def test_same_seed_same_logits(self) -> None:
        inputs = torch.randn(2, 1, *SMALL_DIMS)

        torch.manual_seed(0)
        a = ResNet3d(TINY, SMALL_DIMS).eval()
        torch.manual_seed(0)
        b = ResNet3d(TINY, SMALL_DIMS).eval()

        with torch.no_grad():
            assert torch.equal(a(inputs), b(inputs))

    def test_eval_mode_is_batch_independent(self) -> None:
        net = ResNet3d(TINY, SMALL_DIMS).eval()
        inputs = torch.randn(4, 1, *SMALL_DIMS)

        with torch.no_grad():
            together = net(inputs)
            alone = torch.cat([net(inputs[i : i + 1]) for i in range(4)])

        assert torch.allclose(together, alone, atol=1e-5)
