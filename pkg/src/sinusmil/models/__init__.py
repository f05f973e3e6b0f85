"""Immutable models for volumes, manifests, configs and reports."""

from sinusmil.models.anatomy import (
    CentroidAnnotation,
    CentroidModel,
    Label,
    Side,
    SideCentroidModel,
)
from sinusmil.models.diagnostic import Diagnostic, Severity
from sinusmil.models.manifest import (
    MANIFEST_SCHEMA_VERSION,
    InstanceRecord,
    Manifest,
    Split,
    SplitAssignment,
    SubjectRecord,
)
from sinusmil.models.phantom import (
    IntensityLevels,
    LesionAssignment,
    PhantomSpec,
    RegionTruth,
    SubjectTruth,
)
from sinusmil.models.report import (
    EnsembleResult,
    FoldMetrics,
    GradientCheckReport,
    GradientEntry,
    MetricsReport,
    MetricSummary,
    SweepRow,
)
from sinusmil.models.settings import (
    EvaluationConfig,
    NetworkConfig,
    PipelineConfig,
    RegistrationConfig,
    SamplingConfig,
    SplitConfig,
    SweepConfig,
    TrainConfig,
)
from sinusmil.models.transform import RigidTransform
from sinusmil.models.volume import Instance, Volume

__all__ = [
    "MANIFEST_SCHEMA_VERSION",
    "CentroidAnnotation",
    "CentroidModel",
    "Diagnostic",
    "EnsembleResult",
    "EvaluationConfig",
    "FoldMetrics",
    "GradientCheckReport",
    "GradientEntry",
    "Instance",
    "InstanceRecord",
    "IntensityLevels",
    "Label",
    "LesionAssignment",
    "Manifest",
    "MetricSummary",
    "MetricsReport",
    "NetworkConfig",
    "PhantomSpec",
    "PipelineConfig",
    "RegionTruth",
    "RegistrationConfig",
    "RigidTransform",
    "SamplingConfig",
    "Severity",
    "Side",
    "SideCentroidModel",
    "Split",
    "SplitAssignment",
    "SplitConfig",
    "SubjectRecord",
    "SubjectTruth",
    "SweepConfig",
    "SweepRow",
    "TrainConfig",
    "Volume",
]
