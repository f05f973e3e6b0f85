"""Stage configuration models.

Defaults reproduce the reference protocol: N=15, P=35, full ResNet18-style
network, 100 epochs, batch 16, lr 1e-4, splits 0.807/0.091/0.102, 3 folds.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator

from sinusmil.models.phantom import PhantomSpec

SAMPLE_SIZE_GRID: tuple[int, ...] = (1, 5, 10, 15, 20)
PATCH_SIZE_GRID: tuple[int, ...] = (25, 30, 35, 40, 45)
REGISTERED_DIMS: tuple[int, int, int] = (128, 128, 128)
INSTANCE_DIMS: tuple[int, int, int] = (64, 64, 64)

NetworkPreset = Literal["full", "tiny"]

_PRESET_CHANNELS: dict[str, tuple[int, int, int, int]] = {
    "full": (64, 128, 256, 512),
    "tiny": (8, 16, 32, 64),
}


class NetworkConfig(BaseModel, frozen=True):
    """3D residual classifier layout.

    Attributes:
        name: Preset the layout was derived from
        channels: Output channels of the four residual stages
        blocks: Basic blocks per stage
        in_channels: Input channels of an instance
        num_classes: Output logits (always 2)
        stem_kernel: Cubic kernel of the stem convolution
        stem_stride: Stride of the stem convolution
    """

    name: str = "full"
    channels: tuple[int, int, int, int] = _PRESET_CHANNELS["full"]
    blocks: tuple[int, int, int, int] = (2, 2, 2, 2)
    in_channels: int = Field(default=1, ge=1)
    num_classes: Literal[2] = 2
    stem_kernel: int = Field(default=7, ge=1)
    stem_stride: int = Field(default=2, ge=1)

    @field_validator("channels", "blocks")
    @classmethod
    def validate_positive(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        """Every stage needs at least one block and one channel."""
        if any(v < 1 for v in value):
            raise ValueError(f"stage values must be >= 1, got {value}")
        return value

    @classmethod
    def preset(cls, name: str) -> NetworkConfig:
        """Return the named layout ('full' or 'tiny')."""
        if name not in _PRESET_CHANNELS:
            available = ", ".join(_PRESET_CHANNELS)
            raise ValueError(f"Unknown network preset '{name}'. Available: {available}")
        return cls(name=name, channels=_PRESET_CHANNELS[name])


class TrainConfig(BaseModel, frozen=True):
    """Optimization settings.

    Attributes:
        epochs: Training epochs
        batch_size: Instances per batch
        learning_rate: Initial Adam learning rate
        optimizer: Optimizer name (Adam only)
        plateau_patience: Epochs without validation improvement before a drop
        plateau_factor: Divisor applied to the learning rate on a drop
        class_weighted: Weight cross-entropy by inverse class frequency
        num_workers: DataLoader worker processes
        deterministic: Force deterministic torch kernels
        device: "cpu", "cuda" or "auto"
        cache: Keep decoded instances in memory between epochs
        seed: Seed for weight init and batch order
    """

    epochs: int = Field(default=100, ge=1)
    batch_size: int = Field(default=16, ge=1)
    learning_rate: float = Field(default=1e-4, gt=0.0)
    optimizer: Literal["adam"] = "adam"
    plateau_patience: int = Field(default=5, ge=1)
    plateau_factor: float = Field(default=10.0, gt=1.0)
    class_weighted: bool = False
    num_workers: int = Field(default=0, ge=0)
    deterministic: bool = False
    device: Literal["cpu", "cuda", "auto"] = "auto"
    cache: bool = True
    seed: int = 0


class RegistrationConfig(BaseModel, frozen=True):
    """Rigid registration settings.

    Attributes:
        levels: Pyramid downsampling factors, coarse to fine
        max_iterations: Optimizer sweeps per level
        translation_step: Initial translation step (voxels)
        rotation_step: Initial rotation step (degrees)
        min_translation_step: Translation step at which a level converges
        min_rotation_step: Rotation step at which a level converges
        strict: Raise on non-convergence instead of flagging it
        fixed_subject: Reference subject id (default: first in manifest)
        registered_dims: Grid registered volumes are resampled to
    """

    levels: tuple[int, ...] = (4, 2, 1)
    max_iterations: int = Field(default=200, ge=1)
    translation_step: float = Field(default=4.0, gt=0.0)
    rotation_step: float = Field(default=4.0, gt=0.0)
    min_translation_step: float = Field(default=0.05, gt=0.0)
    min_rotation_step: float = Field(default=0.05, gt=0.0)
    strict: bool = False
    fixed_subject: str | None = None
    registered_dims: tuple[int, int, int] = REGISTERED_DIMS

    @field_validator("levels")
    @classmethod
    def validate_levels(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        """Levels are positive and strictly decreasing."""
        if not value or any(f < 1 for f in value):
            raise ValueError(f"levels must be positive factors, got {value}")
        if any(a <= b for a, b in zip(value, value[1:])):
            raise ValueError(f"levels must be strictly decreasing, got {value}")
        return value


class SamplingConfig(BaseModel, frozen=True):
    """Instance extraction settings.

    Attributes:
        n: Instances drawn per side per subject
        patch_size: Cube side P in registered voxels
        instance_dims: Grid every crop is resampled to
        use_mean_for_single: With n=1, crop at the model mean instead of a draw
        annotations: Centroid annotation table (TSV), relative to data_root
        allow_off_grid: Accept n and P outside the experimental grids
    """

    n: int = Field(default=15, ge=1)
    patch_size: int = Field(default=35, ge=1)
    instance_dims: tuple[int, int, int] = INSTANCE_DIMS
    use_mean_for_single: bool = False
    annotations: str | None = None
    allow_off_grid: bool = False


class SplitConfig(BaseModel, frozen=True):
    """Patient-level split settings."""

    ratios: tuple[float, float, float] = (0.807, 0.091, 0.102)
    folds: int = Field(default=3, ge=2)

    @field_validator("ratios")
    @classmethod
    def validate_ratios(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        """Ratios are positive (their sum is a config rule)."""
        if any(r <= 0 for r in value):
            raise ValueError(f"split ratios must be positive, got {value}")
        return value


class EvaluationConfig(BaseModel, frozen=True):
    """Scoring settings."""

    ensemble: bool = True
    threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    std_estimator: Literal["sample", "population"] = "sample"


class SweepConfig(BaseModel, frozen=True):
    """N/P sweep settings.

    Attributes:
        n_grid: Sample sizes to sweep
        p_grid: Patch sizes to sweep
        mode: "axis" (N-sweep at axis_p, P-sweep at axis_n) or "full" factorial
        axis_n: N held fixed during the P-sweep
        axis_p: P held fixed during the N-sweep
        plot: Render PNG plots next to the series (needs matplotlib)
    """

    n_grid: tuple[int, ...] = SAMPLE_SIZE_GRID
    p_grid: tuple[int, ...] = PATCH_SIZE_GRID
    mode: Literal["axis", "full"] = "axis"
    axis_n: int = Field(default=15, ge=1)
    axis_p: int = Field(default=35, ge=1)
    plot: bool = False

    @field_validator("n_grid", "p_grid")
    @classmethod
    def validate_grid(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        """Grids are non-empty and positive."""
        if not value or any(v < 1 for v in value):
            raise ValueError(f"grid must be non-empty and positive, got {value}")
        return value

    def cells(self) -> list[tuple[int, int]]:
        """(N, P) pairs to run, without duplicates, in grid order."""
        if self.mode == "full":
            pairs = [(n, p) for n in self.n_grid for p in self.p_grid]
        else:
            pairs = [(n, self.axis_p) for n in self.n_grid]
            pairs += [(self.axis_n, p) for p in self.p_grid]
        return list(dict.fromkeys(pairs))


class PipelineConfig(BaseModel, frozen=True):
    """Resolved configuration of a pipeline run.

    Attributes:
        data_root: Input data directory (user-supplied manifest, annotations)
        output_dir: Root of the per-stage output directories
        seed: Master seed
    """

    data_root: str = "data"
    output_dir: str = "runs"
    seed: int = 0
    phantom: PhantomSpec = PhantomSpec()
    registration: RegistrationConfig = RegistrationConfig()
    sampling: SamplingConfig = SamplingConfig()
    network: NetworkConfig = NetworkConfig()
    train: TrainConfig = TrainConfig()
    splits: SplitConfig = SplitConfig()
    evaluation: EvaluationConfig = EvaluationConfig()
    sweep: SweepConfig = SweepConfig()

    def with_overrides(
        self,
        *,
        data_root: str | None = None,
        output_dir: str | None = None,
        seed: int | None = None,
        n: int | None = None,
        patch_size: int | None = None,
        folds: int | None = None,
        network: str | None = None,
        ensemble: bool | None = None,
    ) -> PipelineConfig:
        """Apply command-line overrides; None leaves a value untouched.

        The master seed also reseeds the phantom and training stages.
        """
        update: dict[str, Any] = {}
        if data_root is not None:
            update["data_root"] = data_root
        if output_dir is not None:
            update["output_dir"] = output_dir
        if seed is not None:
            update["seed"] = seed
            update["phantom"] = self.phantom.model_copy(update={"seed": seed})
            update["train"] = self.train.model_copy(update={"seed": seed})
        sampling: dict[str, Any] = {}
        if n is not None:
            sampling["n"] = n
        if patch_size is not None:
            sampling["patch_size"] = patch_size
        if sampling:
            update["sampling"] = self.sampling.model_copy(update=sampling)
        if folds is not None:
            update["splits"] = SplitConfig(ratios=self.splits.ratios, folds=folds)
        if network is not None:
            update["network"] = NetworkConfig.preset(network)
        if ensemble is not None:
            update["evaluation"] = self.evaluation.model_copy(update={"ensemble": ensemble})
        if not update:
            return self
        return PipelineConfig.model_validate({**self.model_dump(), **_dumped(update)})

    def for_cell(self, n: int, patch_size: int) -> PipelineConfig:
        """Config of one sweep cell."""
        return self.with_overrides(n=n, patch_size=patch_size)


def _dumped(update: dict[str, Any]) -> dict[str, Any]:
    return {k: v.model_dump() if isinstance(v, BaseModel) else v for k, v in update.items()}
