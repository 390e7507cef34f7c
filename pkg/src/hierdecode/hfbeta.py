"""Optimal set decoding for the hierarchical F-beta score.

The expected score of an ancestor-closed set ``H`` of size ``k`` splits into
per-node terms::

    U(H) = sum over n in H of  sum over l below n of
           p(l) * (1 + beta^2) / (k + beta^2 * (depth(l) + 1))

so for a fixed size the best set is the ``k`` nodes with the largest terms.
Only nodes with ``p(n) >= 1 / (1 + beta^2 * (d_max + 1))``, where ``d_max``
is the deepest leaf of the tree, can belong to an optimal set, which keeps
both ``k`` and the search small.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam
from .hierarchy import Hierarchy, aggregate, check_distribution
from .prediction import Prediction

__all__ = ["HFBetaContext", "HFBetaResult", "q_set", "delta_table", "decode_hfbeta"]


class HFBetaContext:
    """Per-hierarchy constants for one value of beta.

    ``n_max`` bounds the size of the pruned set and ``lower_bound`` is the
    expected score of predicting the root alone in the worst case.
    """

    def __init__(self, h: Hierarchy, beta: float):
        beta = float(beta)
        if not np.isfinite(beta) or beta <= 0:
            raise InvalidParam(f"beta must be positive, got {beta}")
        self.h = h
        self.beta = beta
        self.b2 = beta * beta
        q = np.full(h.node_count, 1.0 / (1.0 + self.b2 * (h.max_depth + 1.0)))
        q.setflags(write=False)
        self.q_thresholds = q
        self.n_max = (1.0 + self.b2 * (h.max_depth + 1)) * (h.max_depth + 1)
        self.lower_bound = (1.0 + self.b2) / (1.0 + self.b2 * (h.max_depth + 1))
        self._depth_masks = [h.leaf_depth == d for d in range(h.max_depth + 1)]

    def q_set(self, p_nodes) -> np.ndarray:
        """Sorted ids of the nodes passing the probability threshold.

        Descent stops at the first failing node since probabilities shrink
        going down.
        """
        q = self.q_thresholds
        children = self.h.children
        out = [0]
        stack = list(children[0])
        while stack:
            n = stack.pop()
            if p_nodes[n] >= q[n]:
                out.append(n)
                stack.extend(children[n])
        out.sort()
        return np.array(out, dtype=np.int64)

    def delta_table(self, p_leaves, nodes, k_max: int) -> np.ndarray:
        """``(k_max, len(nodes))`` array; row ``k-1`` holds the size-``k`` terms."""
        h = self.h
        nodes = np.asarray(nodes, dtype=np.int64)
        lo, hi = h.leaf_lo[nodes], h.leaf_hi[nodes]
        k = np.arange(1, k_max + 1, dtype=np.float64)[:, None]
        out = np.zeros((k_max, len(nodes)))
        zero = np.zeros(1)
        # leaf mass below each node, split by leaf depth
        for d, mask in enumerate(self._depth_masks):
            cs = np.concatenate((zero, np.cumsum(np.where(mask, p_leaves, 0.0))))
            mass = cs[hi] - cs[lo]
            if not mass.any():
                continue
            out += ((1.0 + self.b2) / (k + self.b2 * (d + 1))) * mass
        return out

    def decode_detail(self, p_leaves, p_nodes=None) -> "HFBetaResult":
        h = self.h
        p_leaves = np.asarray(p_leaves, dtype=np.float64)
        if p_nodes is None:
            p_nodes = aggregate(h, p_leaves)
        qs = self.q_set(p_nodes)
        size = len(qs)
        delta = self.delta_table(p_leaves, qs, size)
        depth = h.depth[qs]
        best_u, best_sel = -np.inf, None
        for k in range(1, size + 1):
            row = delta[k - 1]
            order = np.lexsort((qs, depth, -row))
            sel = order[:k]
            u = float(row[sel].sum())
            if u > best_u:
                best_u, best_sel = u, sel
        chosen = qs[best_sel]
        closed = set(chosen.tolist())
        if any(h.parent[n] not in closed for n in closed if n != 0):
            raise AssertionError("top-k selection is not ancestor-closed")
        leaves = [n for n in chosen if not any(c in closed for c in h.children[n])]
        return HFBetaResult(Prediction.node_set(h, leaves), best_u, len(chosen), qs)

    def decode(self, p_leaves, p_nodes=None) -> Prediction:
        return self.decode_detail(p_leaves, p_nodes).prediction


@dataclass(frozen=True)
class HFBetaResult:
    prediction: Prediction
    utility: float
    k: int
    q: np.ndarray


def q_set(h: Hierarchy, p_nodes, beta: float) -> np.ndarray:
    return HFBetaContext(h, beta).q_set(np.asarray(p_nodes, dtype=np.float64))


def delta_table(h: Hierarchy, p_leaves, beta: float, k_max: int, nodes=None) -> np.ndarray:
    """Marginal terms for sizes ``1..k_max``; columns follow ``nodes`` (default all)."""
    if nodes is None:
        nodes = np.arange(h.node_count)
    return HFBetaContext(h, beta).delta_table(np.asarray(p_leaves, dtype=np.float64), nodes, k_max)


def decode_hfbeta(h: Hierarchy, p_leaves, beta: float) -> Prediction:
    """Set of mutually exclusive nodes maximising the expected hF-beta score.

    Examples
    --------
    >>> from hierdecode.hierarchy import build_from_edges
    >>> h = build_from_edges([("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b")])
    >>> decode_hfbeta(h, [0.4, 0.3, 0.3], 1.0).names(h)
    ['a1']
    """
    ctx = HFBetaContext(h, beta)
    return ctx.decode(check_distribution(h, p_leaves))
