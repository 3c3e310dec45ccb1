"""Domain models: enums, specs, run config and reports"""
from .base import ArchKind, DatasetKind, DecayMode, LayerKind, LossNorm, NetworkRole, Objective
from .config import ModelOptions, TrainConfig
from .outputs import (
    EpochRecord,
    GradCheckResult,
    LossReport,
    MetricReport,
    MorphWeights,
    RunSummary,
    StepRecord,
)
from .specs import DatasetSpec, LayerSpec, ModelSpec

__all__ = [
    "ArchKind",
    "DatasetKind",
    "DecayMode",
    "LayerKind",
    "LossNorm",
    "NetworkRole",
    "Objective",
    "ModelOptions",
    "TrainConfig",
    "EpochRecord",
    "GradCheckResult",
    "LossReport",
    "MetricReport",
    "MorphWeights",
    "RunSummary",
    "StepRecord",
    "DatasetSpec",
    "LayerSpec",
    "ModelSpec",
]
