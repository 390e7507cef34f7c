"""Bayes-optimal decoding of leaf probabilities over a class hierarchy.

Given a probability vector over the leaves of a rooted tree and a target
hierarchical metric, return the leaf, node or node set with the best expected
score. Heuristic baselines, brute-force references and an evaluation harness
are included.
"""
from .errors import DataError, OracleMismatch
from .hierarchy import (
    Hierarchy,
    aggregate,
    augment_with_stop_nodes,
    balanced_tree,
    build_from_edges,
    check_distribution,
    lca,
    random_tree,
    read_hierarchy,
    shaped_tree,
    write_hierarchy,
)
from .prediction import Prediction
from .metrics import (
    CostModel,
    MetricKind,
    Orientation,
    ReasonablenessVerdict,
    Space,
    build_cost_matrix,
    check_reasonable,
    parse_metric,
    score,
)
from .node import (
    ReasonableDecoder,
    Thresholds,
    compute_thresholds,
    decode_leaf_bayes,
    decode_reasonable,
    decode_threshold_closed_form,
    find_candidate_set,
)
from .hfbeta import HFBetaContext, decode_hfbeta, delta_table, q_set
from .heuristics import HeuristicKind, decode_heuristic, parse_heuristic
from .oracle import (
    brute_force_node,
    brute_force_set,
    enumerate_antichains,
    phi_roundtrip_check,
)
from .datasets import Dataset, load_dataset, synth_generate
from .evaluation import agreement_map, bench, evaluate, make_decoder, smooth_sweep

__version__ = "0.1.0"
