"""Multilayer synchronous threshold systems and PAC learning of their thresholds."""

from .dynamics import MasterKind, ThresholdSystem, layer_scores, random_thresholds, successor, trajectory
from .graph import MultilayerNetwork, generate_multi_gnp, load_edge_list, read_edge_list, write_edge_list
from .learner import (
    BernoulliDistribution,
    LearningProblem,
    TrainingSet,
    estimate_pmac_error,
    estimate_true_error,
    make_training_set,
    pac_learn,
    sample_size_generic,
    sample_size_pac,
    sample_size_pmac,
)

__version__ = "0.1.0"

__all__ = [
    "BernoulliDistribution",
    "LearningProblem",
    "MasterKind",
    "MultilayerNetwork",
    "ThresholdSystem",
    "TrainingSet",
    "estimate_pmac_error",
    "estimate_true_error",
    "generate_multi_gnp",
    "layer_scores",
    "load_edge_list",
    "make_training_set",
    "pac_learn",
    "random_thresholds",
    "read_edge_list",
    "sample_size_generic",
    "sample_size_pac",
    "sample_size_pmac",
    "successor",
    "trajectory",
    "write_edge_list",
]
