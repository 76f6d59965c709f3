"""Temporal graph re-ranker for cross-domain profile candidates.

Consumes the per-day graph exports written by the timing matcher
(nodes.csv plus labeled and candidate edge files) and learns an edge
classifier over recurrently updated, attention-mixed node embeddings.
"""

__version__ = "0.1.0"

from .data import Edge, GraphDay, SnapshotSequence, load_snapshots
from .features import FEATURE_DIMENSION, day_features, feature_names
from .model import ReRanker, prepare_sequence, run_sequence
from .rerank import ScoredEdge, score_day, write_reranked_csv
from .train import TrainConfig, class_weights, load_model, save_model, temporal_split, train

__all__ = [
    "Edge",
    "GraphDay",
    "SnapshotSequence",
    "load_snapshots",
    "FEATURE_DIMENSION",
    "day_features",
    "feature_names",
    "ReRanker",
    "prepare_sequence",
    "run_sequence",
    "ScoredEdge",
    "score_day",
    "write_reranked_csv",
    "TrainConfig",
    "class_weights",
    "load_model",
    "save_model",
    "temporal_split",
    "train",
    "__version__",
]
