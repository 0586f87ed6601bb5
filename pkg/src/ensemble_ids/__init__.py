"""Ensemble intrusion detection on NSL-KDD: a GRU network, a LeNet-style CNN
and a random forest whose binary votes are fused by majority or OR logic."""
from .dataset import BinaryClass, ConnectionRecord, Dataset, binarize_label, parse_file, stratified_split
from .ensemble import (
    ConfusionMatrix, DeciderLogic, MetricsReport, UndefinedMetricError, VoteSet,
    confusion, decide, decide_batch, metrics,
)
from .pipeline import Ensemble, LearnerConfigs, train_ensemble

__version__ = "0.1.0"

__all__ = [
    "BinaryClass", "ConfusionMatrix", "ConnectionRecord", "Dataset", "DeciderLogic", "Ensemble",
    "LearnerConfigs", "MetricsReport", "UndefinedMetricError", "VoteSet", "binarize_label",
    "confusion", "decide", "decide_batch", "metrics", "parse_file", "stratified_split",
    "train_ensemble",
]
