# Schemas module init
from .signal_schema import Signal, SignalLabel, WaveletBasis, ScaleGrid, Scalogram
from .dataset_schema import Dataset, SynthConfig, SplitSpec, ManifestEntry
from .model_schema import LayerKind, LayerSpec, AdamState, TrainConfig, LossBreakdown, LatentCode
from .detection_schema import (
    Verdict,
    ErrorSample,
    ThresholdSet,
    ConfusionMetrics,
    SampleVerdict,
    DetectionReport,
    LatentRow,
)


__all__ = [
    "Signal",
    "SignalLabel",
    "WaveletBasis",
    "ScaleGrid",
    "Scalogram",
    "Dataset",
    "SynthConfig",
    "SplitSpec",
    "ManifestEntry",
    "LayerKind",
    "LayerSpec",
    "AdamState",
    "TrainConfig",
    "LossBreakdown",
    "LatentCode",
    "Verdict",
    "ErrorSample",
    "ThresholdSet",
    "ConfusionMetrics",
    "SampleVerdict",
    "DetectionReport",
    "LatentRow",
]
