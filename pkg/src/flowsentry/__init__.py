"""Self-supervised anomaly detection for computational workflow DAGs."""

from .augment import AugmentConfig, augment
from .decoder import LossConfig, ScoreConfig, ScoreReport, decide
from .encoder import EncoderConfig, LatentConfig
from .graph import DatasetSplit, WorkflowGraph, split_dataset
from .io import load_dataset
from .kernel import BACKEND
from .model import ModelConfig
from .synth import SynthConfig, generate_dataset, generate_synthetic
from .trainer import TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig", "BACKEND", "DatasetSplit", "EncoderConfig", "LatentConfig", "LossConfig",
    "ModelConfig", "ScoreConfig", "ScoreReport", "SynthConfig", "TrainConfig", "WorkflowGraph",
    "augment", "decide", "evaluate", "generate_dataset", "generate_synthetic", "load_dataset",
    "split_dataset", "train",
]
