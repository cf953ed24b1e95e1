"""Natarajan-dimension tools: canonical sets, shattering decisions, Q-sets."""

from .canonical import as_config_set, dfs_canonical_set, dfs_discovery, is_canonical, is_landmark, landmark_sets
from .formats import candidate_text, dump_candidate, dump_qset, load_candidate, load_qset
from .qset import (
    QSet,
    VertexLayerPair,
    all_pairs,
    estimate_full_qset_probability,
    is_nested,
    nesting_matrix,
    pnn_coloring,
    pnn_lower_bound,
    pnn_set,
    q_set_check,
    qset_proportion_bound,
    shatterable_from_qset,
)
from .shatter import (
    GuardExceeded,
    ShatterCandidate,
    find_shattering,
    natarajan_dimension,
    shatter_oracle,
    verify_shattering,
)

__all__ = [
    "GuardExceeded",
    "QSet",
    "ShatterCandidate",
    "VertexLayerPair",
    "all_pairs",
    "as_config_set",
    "candidate_text",
    "dfs_canonical_set",
    "dfs_discovery",
    "dump_candidate",
    "dump_qset",
    "estimate_full_qset_probability",
    "find_shattering",
    "is_canonical",
    "is_landmark",
    "is_nested",
    "landmark_sets",
    "load_candidate",
    "load_qset",
    "natarajan_dimension",
    "nesting_matrix",
    "pnn_coloring",
    "pnn_lower_bound",
    "pnn_set",
    "q_set_check",
    "qset_proportion_bound",
    "shatter_oracle",
    "shatterable_from_qset",
    "verify_shattering",
]
