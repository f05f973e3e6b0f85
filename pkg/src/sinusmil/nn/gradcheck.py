"""Finite-difference check of the network's analytic gradients."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
import torch
from torch import nn

from sinusmil.errors import TrainingError
from sinusmil.models.report import GradientCheckReport, GradientEntry
from sinusmil.models.settings import INSTANCE_DIMS, NetworkConfig
from sinusmil.nn.network import ResNet3d

logger = logging.getLogger(__name__)

# Denominator floor for entries whose gradient is numerically zero
_SCALE_FLOOR = 1e-6


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), _SCALE_FLOOR)


def _loss(net: nn.Module, inputs: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    result: torch.Tensor = nn.functional.cross_entropy(net(inputs), targets)
    return result


def gradient_check(
    config: NetworkConfig | None = None,
    *,
    n_params: int = 20,
    epsilon: float = 1e-5,
    tolerance: float = 1e-4,
    batch_size: int = 2,
    input_dims: Sequence[int] = INSTANCE_DIMS,
    seed: int = 0,
) -> GradientCheckReport:
    """Compare autograd with central differences on sampled parameter entries.

    The network runs in double precision and evaluation mode, so batch norm
    uses its fixed running statistics and the loss is a smooth function of
    every weight away from ReLU and max-pool kinks. Entries are drawn
    without replacement, uniformly over all weights, so larger tensors get
    proportionally more checks.

    Raises:
        TrainingError: If a trainable parameter receives no gradient.
    """
    config = config or NetworkConfig.preset("tiny")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)

    net = ResNet3d(config, input_dims).double().eval()
    inputs = torch.randn(batch_size, config.in_channels, *net.input_dims, dtype=torch.float64)
    targets = torch.arange(batch_size, dtype=torch.int64) % config.num_classes

    net.zero_grad()
    _loss(net, inputs, targets).backward()

    named = [(name, p) for name, p in net.named_parameters() if p.requires_grad]
    offsets = np.cumsum([0] + [p.numel() for _, p in named])
    total = int(offsets[-1])
    flat_picks = rng.choice(total, size=min(n_params, total), replace=False)

    entries = []
    with torch.no_grad():
        for pick in flat_picks:
            which = int(np.searchsorted(offsets, pick, side="right")) - 1
            name, param = named[which]
            flat = param.view(-1)
            index = int(pick - offsets[which])
            if param.grad is None:
                raise TrainingError("parameter received no gradient", parameter=name)
            analytic = float(param.grad.view(-1)[index])

            original = float(flat[index])
            flat[index] = original + epsilon
            plus = float(_loss(net, inputs, targets))
            flat[index] = original - epsilon
            minus = float(_loss(net, inputs, targets))
            flat[index] = original
            numeric = (plus - minus) / (2.0 * epsilon)

            entries.append(
                GradientEntry(
                    parameter=name,
                    index=index,
                    analytic=analytic,
                    numeric=numeric,
                    relative_error=relative_error(analytic, numeric),
                )
            )

    report = GradientCheckReport(epsilon=epsilon, tolerance=tolerance, entries=tuple(entries))
    logger.info(
        "Gradient check on %d entries: max relative error %.2e (%s)",
        len(entries),
        report.max_relative_error,
        "pass" if report.passed else "FAIL",
    )
    return report
