"""cgprune: learn to prune false edges from static call graphs.

Static call graphs over-approximate; dynamic traces give the ground truth.
This package labels static edges against dynamic oracles, trains a weighted
binary classifier over per-edge features, prunes under a confidence
threshold, and evaluates the result (precision/recall/F-beta, vulnerability
reachability, runtime accounting).
"""

__version__ = "0.1.0"

from .graph import (
    CallEdge,
    CallGraph,
    GraphKind,
    LabeledEdge,
    MethodId,
    Scope,
    filter_stdlib_edges,
    label_edges,
    load_call_graph,
    pr_ratio,
    sample_large_program,
)
from .learner import PrunerModel, RandomClassifier, TrainConfig, train
from .pruning import PrunedGraph, decide, prune_graph, threshold_sweep
from .evaluation import evaluate_program, f_beta, macro_average, precision_recall
from .vuln import VulnConfig, cg_size_stats, mark_vulnerable, reachability, timed_analysis

__all__ = [
    "__version__",
    "CallEdge",
    "CallGraph",
    "GraphKind",
    "LabeledEdge",
    "MethodId",
    "Scope",
    "filter_stdlib_edges",
    "label_edges",
    "load_call_graph",
    "pr_ratio",
    "sample_large_program",
    "PrunerModel",
    "RandomClassifier",
    "TrainConfig",
    "train",
    "PrunedGraph",
    "decide",
    "prune_graph",
    "threshold_sweep",
    "evaluate_program",
    "f_beta",
    "macro_average",
    "precision_recall",
    "VulnConfig",
    "cg_size_stats",
    "mark_vulnerable",
    "reachability",
    "timed_analysis",
]
