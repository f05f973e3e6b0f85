"""3D residual classifier (ResNet-18 layout for volumes).

Stem: 7^3 convolution with stride 2, batch norm, ReLU and a 3^3 max-pool
with stride 2. Four stages of basic blocks follow; stages 2-4 halve the
resolution in their first block and use a 1^3 projection shortcut whenever
the shape changes. Global average pooling feeds a linear map to 2 logits.
"""

from __future__ import annotations

from collections.abc import Sequence

import torch
from torch import nn

from sinusmil.models.settings import INSTANCE_DIMS, NetworkConfig


class BasicBlock3d(nn.Module):
    """Two 3^3 convolutions with an identity or projection shortcut."""

    def __init__(self, in_channels: int, out_channels: int, stride: int = 1) -> None:
        super().__init__()
        self.conv1 = nn.Conv3d(
            in_channels, out_channels, kernel_size=3, stride=stride, padding=1, bias=False
        )
        self.bn1 = nn.BatchNorm3d(out_channels)
        self.conv2 = nn.Conv3d(
            out_channels, out_channels, kernel_size=3, stride=1, padding=1, bias=False
        )
        self.bn2 = nn.BatchNorm3d(out_channels)
        self.relu = nn.ReLU(inplace=True)

        self.downsample: nn.Module | None = None
        if stride != 1 or in_channels != out_channels:
            self.downsample = nn.Sequential(
                nn.Conv3d(in_channels, out_channels, kernel_size=1, stride=stride, bias=False),
                nn.BatchNorm3d(out_channels),
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        identity = x if self.downsample is None else self.downsample(x)

        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        out = out + identity
        result: torch.Tensor = self.relu(out)
        return result


class ResNet3d(nn.Module):
    """Volume classifier mapping (B, C, D, H, W) instances to (B, 2) logits.

    Attributes:
        config: Layout the network was built from
        input_dims: Spatial shape every input must have
    """

    def __init__(
        self,
        config: NetworkConfig | None = None,
        input_dims: Sequence[int] = INSTANCE_DIMS,
    ) -> None:
        super().__init__()
        self.config = config or NetworkConfig()
        self.input_dims = tuple(int(d) for d in input_dims)
        channels = self.config.channels

        self.stem = nn.Sequential(
            nn.Conv3d(
                self.config.in_channels,
                channels[0],
                kernel_size=self.config.stem_kernel,
                stride=self.config.stem_stride,
                padding=self.config.stem_kernel // 2,
                bias=False,
            ),
            nn.BatchNorm3d(channels[0]),
            nn.ReLU(inplace=True),
            nn.MaxPool3d(kernel_size=3, stride=2, padding=1),
        )

        stages = []
        in_channels = channels[0]
        for index, (out_channels, blocks) in enumerate(zip(channels, self.config.blocks)):
            stride = 1 if index == 0 else 2
            layers = [BasicBlock3d(in_channels, out_channels, stride)]
            layers += [BasicBlock3d(out_channels, out_channels) for _ in range(1, blocks)]
            stages.append(nn.Sequential(*layers))
            in_channels = out_channels
        self.stages = nn.Sequential(*stages)

        self.pool = nn.AdaptiveAvgPool3d(1)
        self.fc = nn.Linear(channels[-1], self.config.num_classes)

        self._init_weights()

    def _init_weights(self) -> None:
        for module in self.modules():
            if isinstance(module, nn.Conv3d):
                nn.init.kaiming_normal_(module.weight, mode="fan_out", nonlinearity="relu")
            elif isinstance(module, nn.BatchNorm3d):
                nn.init.ones_(module.weight)
                nn.init.zeros_(module.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Return logits of shape (B, 2).

        Raises:
            ValueError: If the input is not (B, in_channels, *input_dims).
        """
        expected = (self.config.in_channels, *self.input_dims)
        if x.dim() != 5 or tuple(x.shape[1:]) != expected:
            raise ValueError(
                f"expected input of shape (B, {', '.join(map(str, expected))}), "
                f"got {tuple(x.shape)}"
            )
        x = self.stem(x)
        x = self.stages(x)
        x = torch.flatten(self.pool(x), 1)
        logits: torch.Tensor = self.fc(x)
        return logits


def build_network(
    config: NetworkConfig | None = None, input_dims: Sequence[int] = INSTANCE_DIMS
) -> ResNet3d:
    return ResNet3d(config, input_dims)


def count_parameters(net: nn.Module) -> int:
    """Number of trainable scalars."""
    return sum(p.numel() for p in net.parameters() if p.requires_grad)
