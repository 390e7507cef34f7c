"""Optimal single-node decoding for hierarchically reasonable costs.

For a non-root node ``n`` let ``delta(l) = C(n, l) - C(parent(n), l)``.
Bounding ``delta`` separately over the leaves below ``n`` (inside) and the
remaining leaves (outside) gives two probability thresholds per node:

* ``p(n) > q_max(n)`` proves ``n`` beats its parent, so the parent is dropped;
* ``p(n) < q_min(n)`` proves the parent beats ``n``, so ``n`` is dropped.

The nodes that survive form a small candidate set whose risks are then
compared directly. In the rooted variant the outside leaves are restricted
to the subtree of the shallowest non-root ancestor (the anchor), and every
threshold is scaled by the anchor's probability.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTau, NotReasonable, SpaceMismatch
from .hierarchy import Hierarchy, aggregate, check_distribution
from .metrics import (
    EQ_TOL,
    CostModel,
    ReasonablenessVerdict,
    Space,
    check_reasonable,
    iter_parent_differences,
)
from .prediction import Prediction

__all__ = [
    "STRICT",
    "ROOTED",
    "Thresholds",
    "compute_thresholds",
    "find_candidate_set",
    "decode_reasonable",
    "ReasonableDecoder",
    "decode_threshold_closed_form",
    "threshold_nodes",
    "decode_leaf_bayes",
]

STRICT = "strict"
ROOTED = "rooted"


@dataclass(frozen=True)
class Thresholds:
    """Per-node pruning bounds. Entry 0 (the root) is unused and set to 1."""

    q_min: np.ndarray
    q_max: np.ndarray
    q_min_floor: float
    variant: str
    anchor: np.ndarray | None = None

    def size_bound(self, h: Hierarchy) -> float:
        """Upper bound on the candidate-set size.

        Strict variant: ``(d_max + 1) / q_min_floor``. Rooted variant: one
        term of ``d_max / q_min_floor`` per depth-one subtree, plus the root.
        """
        if self.variant == STRICT:
            return (h.max_depth + 1) / self.q_min_floor
        return 1 + len(h.children[0]) * h.max_depth / self.q_min_floor


def _constants(model: CostModel, h: Hierarchy, variant: str):
    """Scan parent differences once; return the four bound arrays and a witness."""
    n = h.node_count
    in_hi = np.zeros(n)  # max delta inside, must be <= 0
    in_lo = np.zeros(n)  # min delta inside
    out_hi = np.zeros(n)  # max delta outside
    out_lo = np.zeros(n)  # min delta outside, must be > 0
    has_out = np.zeros(n, dtype=bool)
    pos = np.arange(h.leaf_count)
    witness = None
    for nodes, d in iter_parent_differences(model, h):
        inside = (pos >= h.leaf_lo[nodes, None]) & (pos < h.leaf_hi[nodes, None])
        if variant == ROOTED:
            anc = h.anchor[nodes]
            scope = (pos >= h.leaf_lo[anc, None]) & (pos < h.leaf_hi[anc, None])
            far = ~scope
            bad_far = far & ~(np.abs(d) <= EQ_TOL)
        else:
            scope = np.ones_like(inside)
            bad_far = np.zeros_like(inside)
        outside = scope & ~inside
        bad = (inside & (d > 0)) | (outside & ~(d > 0)) | bad_far
        if witness is None and bad.any():
            r, c = np.argwhere(bad)[0]
            witness = (int(nodes[r]), int(h.leaves[c]))
        in_hi[nodes] = np.where(inside, d, -np.inf).max(axis=1)
        in_lo[nodes] = np.where(inside, d, np.inf).min(axis=1)
        has_out[nodes] = outside.any(axis=1)
        out_hi[nodes] = np.where(outside, d, -np.inf).max(axis=1)
        out_lo[nodes] = np.where(outside, d, np.inf).min(axis=1)
    return in_hi, in_lo, out_hi, out_lo, has_out, witness


def compute_thresholds(model: CostModel, h: Hierarchy, variant: str | None = None) -> Thresholds:
    """Pruning thresholds for a node-space cost model.

    ``variant`` is ``"strict"``, ``"rooted"`` or ``None`` to pick from
    :func:`check_reasonable`. Inside differences may be zero (the bounds stay
    valid as long as outside differences are strictly positive); any other
    violation raises :class:`NotReasonable`.
    """
    if model.space is not Space.NODES:
        raise SpaceMismatch("thresholds need a node-space model")
    if variant is None:
        verdict = check_reasonable(model, h)
        variant = ROOTED if verdict.tag == ReasonablenessVerdict.ROOTED else STRICT
    if variant not in (STRICT, ROOTED):
        raise ValueError(f"unknown variant {variant!r}")
    n = h.node_count
    q_min = np.ones(n)
    q_max = np.ones(n)
    if n > 1:
        in_hi, in_lo, out_hi, out_lo, has_out, witness = _constants(model, h, variant)
        if witness is not None:
            a, l = witness
            raise NotReasonable(
                f"cost is not {variant}-reasonable at node {h.names[a]!r}, leaf {h.names[l]!r}",
                witness=witness)
        gain_in = -in_hi[1:]   # smallest improvement inside, >= 0
        loss_in = -in_lo[1:]   # largest improvement inside
        with np.errstate(invalid="ignore", divide="ignore"):
            lo = out_lo[1:] / (out_lo[1:] + loss_in)
            hi = out_hi[1:] / (out_hi[1:] + gain_in)
        # no outside leaves: n always has the anchor's mass, so any q_min in
        # (0, 1] is exact; the parent may go only when inside gains are positive
        empty = ~has_out[1:]
        lo[empty] = 0.5
        hi[empty] = np.where(gain_in[empty] > 0, 0.5, 1.0)
        q_min[1:] = lo
        q_max[1:] = hi
    floor = float(q_min[1:].min()) if n > 1 else 1.0
    for a in (q_min, q_max):
        a.setflags(write=False)
    return Thresholds(q_min, q_max, floor, variant,
                      h.anchor if variant == ROOTED else None)


def find_candidate_set(h: Hierarchy, p_nodes, t: Thresholds) -> np.ndarray:
    """Sorted ids of the nodes that survive threshold pruning.

    Traversal stops below a node once its probability drops under
    ``q_min_floor`` (times the anchor mass in the rooted variant): node
    probabilities only shrink going down, so nothing deeper can survive.
    """
    p = p_nodes
    rooted = t.variant == ROOTED
    anchor = t.anchor
    q_min, q_max, floor = t.q_min, t.q_max, t.q_min_floor
    children = h.children
    out = []
    stack = [0]
    while stack:
        n = stack.pop()
        if n == 0:
            keep = True
        else:
            s = p[anchor[n]] if rooted else 1.0
            keep = not p[n] < q_min[n] * s
        for c in children[n]:
            pc = p[c]
            s = p[anchor[c]] if rooted else 1.0
            if pc > q_max[c] * s:
                keep = False
            if s > 0 and not pc < floor * s:
                stack.append(c)
        if keep:
            out.append(n)
    out.sort()
    return np.array(out, dtype=np.int64)


class ReasonableDecoder:
    """Risk minimiser over the pruned candidate set, thresholds built once."""

    def __init__(self, model: CostModel, h: Hierarchy, variant: str | None = None,
                 thresholds: Thresholds | None = None):
        self.model = model
        self.h = h
        self.thresholds = thresholds or compute_thresholds(model, h, variant)

    def decode_detail(self, p_leaves, p_nodes=None):
        """Return ``(node, risk, candidates)`` for one leaf distribution."""
        p_leaves = np.asarray(p_leaves, dtype=np.float64)
        if p_nodes is None:
            p_nodes = aggregate(self.h, p_leaves)
        cand = find_candidate_set(self.h, p_nodes, self.thresholds)
        risks = self.model.risks(p_leaves, cand)
        i = int(np.argmin(risks))
        return int(cand[i]), float(risks[i]), cand

    def decode(self, p_leaves, p_nodes=None) -> int:
        return self.decode_detail(p_leaves, p_nodes)[0]


def decode_reasonable(model: CostModel, h: Hierarchy, p_leaves,
                      t: Thresholds | None = None) -> Prediction:
    """Risk-minimising node (ties go to the smallest id).

    Examples
    --------
    >>> from hierdecode.hierarchy import build_from_edges
    >>> h = build_from_edges([("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b")])
    >>> m = CostModel.builtin("dl", h)
    >>> h.names[decode_reasonable(m, h, [0.4, 0.3, 0.3]).single]
    'A'
    """
    p_leaves = check_distribution(h, p_leaves)
    dec = ReasonableDecoder(model, h, thresholds=t)
    return Prediction.node(h, dec.decode(p_leaves))


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.5 <= tau <= 1.0:
        raise InvalidTau(f"threshold must lie in [0.5, 1], got {tau}")
    return tau


def threshold_nodes(h: Hierarchy, p_nodes, tau: float) -> np.ndarray:
    """Deepest node with ``p(n) > tau`` for each row of ``p_nodes``; root if none.

    Equal depth is resolved toward the smaller id.
    """
    p_nodes = np.atleast_2d(p_nodes)
    n = h.node_count
    key = h.depth * n + (n - 1 - np.arange(n))
    scored = np.where(p_nodes > tau, key, -1)
    return np.argmax(scored, axis=1)


def decode_threshold_closed_form(h: Hierarchy, p_leaves, tau: float) -> Prediction:
    """Deepest node whose probability exceeds ``tau`` (``tau`` in [0.5, 1]).

    This is the exact optimum for the tree distance and for the tree
    distance plus ``c`` times depth with ``tau = (1 + c) / 2``.
    """
    tau = _check_tau(tau)
    p = aggregate(h, check_distribution(h, p_leaves))
    return Prediction.node(h, int(threshold_nodes(h, p, tau)[0]))


def decode_leaf_bayes(model: CostModel, h: Hierarchy, p_leaves) -> Prediction:
    """Risk-minimising leaf under a leaf-space cost model.

    Top-1 reduces to the argmax. For the LCA height, a leaf with more than
    half of the mass is returned without scanning.
    """
    if model.space is not Space.LEAVES:
        raise SpaceMismatch("leaf decoding needs a leaf-space model")
    p = check_distribution(h, p_leaves)
    return Prediction.leaf(h, int(h.leaves[_bayes_leaf_index(model, p)]))


def first_min(risks: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Index of the first entry within ``tol`` of each row's minimum.

    Matrix and matrix-vector products round differently, so exact ties are
    resolved with a tolerance to keep batch and single-row results equal.
    """
    risks = np.asarray(risks)
    lo = risks.min(axis=-1, keepdims=True)
    return np.argmax(risks <= lo + tol * np.maximum(1.0, np.abs(lo)), axis=-1)


def _bayes_leaf_index(model: CostModel, p: np.ndarray) -> int:
    tag = model.kind.tag if model.kind is not None else None
    if tag == "top1":
        return int(np.argmax(p))
    if tag == "eta_lca":
        i = int(np.argmax(p))
        if p[i] > 0.5:
            return i
    return int(first_min(model.cost_matrix() @ p))
