"""Torch side of the pipeline: network, data, training and inference."""

from sinusmil.nn.dataset import InstanceDataset
from sinusmil.nn.gradcheck import gradient_check
from sinusmil.nn.inference import (
    ManifestPrediction,
    ensemble_predict,
    predict_logits,
    predict_manifest,
    score_dataset,
)
from sinusmil.nn.network import BasicBlock3d, ResNet3d, build_network, count_parameters
from sinusmil.nn.training import EpochStats, TrainingOutcome, fit, train

__all__ = [
    # network
    "BasicBlock3d",
    "ResNet3d",
    "build_network",
    "count_parameters",
    # data
    "InstanceDataset",
    # training
    "EpochStats",
    "TrainingOutcome",
    "fit",
    "train",
    "gradient_check",
    # inference
    "ManifestPrediction",
    "predict_logits",
    "ensemble_predict",
    "score_dataset",
    "predict_manifest",
]
