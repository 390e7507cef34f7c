"""Hypothesis strategies for random trees and distributions."""
import numpy as np
from hypothesis import strategies as st

from hierdecode import random_tree


@st.composite
def trees(draw, max_nodes=30, min_children=None):
    n = draw(st.integers(3, max_nodes))
    k = draw(st.sampled_from([1, 2])) if min_children is None else min_children
    seed = draw(st.integers(0, 2**31 - 1))
    return random_tree(n, seed, min_children=k)


@st.composite
def tree_and_probs(draw, max_nodes=30, min_children=None):
    h = draw(trees(max_nodes, min_children))
    seed = draw(st.integers(0, 2**31 - 1))
    alpha = draw(st.sampled_from([0.1, 0.5, 1.0]))
    p = np.random.default_rng(seed).dirichlet(np.full(h.leaf_count, alpha))
    return h, p
