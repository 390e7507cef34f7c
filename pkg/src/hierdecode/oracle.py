"""Brute-force references used to validate the fast decoders.

Nothing here reuses the closed forms or LCA tables of the fast paths: metric
values are recomputed from explicit ancestor sets, and set decoding walks
every antichain of the tree.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import SpaceMismatch, TooLarge
from .hierarchy import Hierarchy
from .metrics import CostModel, MetricKind, Orientation, Space, parse_metric

__all__ = [
    "MAX_ENUM_NODES",
    "ancestor_set",
    "direct_value",
    "direct_matrix",
    "brute_force_node",
    "brute_force_leaf",
    "enumerate_antichains",
    "count_antichains",
    "brute_force_set",
    "expected_set_value",
    "phi_roundtrip_check",
]

MAX_ENUM_NODES = 25


def ancestor_set(h: Hierarchy, n: int) -> set[int]:
    out = set()
    n = int(n)
    while n != -1:
        out.add(n)
        n = int(h.parent[n])
    return out


def _leaf_set(h: Hierarchy, n: int) -> set[int]:
    out, stack = set(), [int(n)]
    while stack:
        v = stack.pop()
        if h.children[v]:
            stack.extend(h.children[v])
        else:
            out.add(v)
    return out


def _depth(h, n):
    return len(ancestor_set(h, n)) - 1


def _lowest_common(h, a, b):
    common = ancestor_set(h, a) & ancestor_set(h, b)
    return max(common, key=lambda v: _depth(h, v))


def _height(h, n):
    return max(_depth(h, l) for l in _leaf_set(h, n)) - _depth(h, n)


def _info(h, n):
    return math.log(len(_leaf_set(h, 0)) / len(_leaf_set(h, n)))


def direct_value(kind: MetricKind | str, h: Hierarchy, n: int, y: int) -> float:
    """Metric value of node ``n`` against leaf ``y``, from first principles."""
    if isinstance(kind, str):
        kind = parse_metric(kind)
    an, ay = ancestor_set(h, n), ancestor_set(h, y)
    a = _lowest_common(h, n, y)
    dn, dy, da = len(an) - 1, len(ay) - 1, _depth(h, a)
    t = kind.tag
    if t == "top1":
        return float(n != y)
    if t == "eta_lca":
        return float(_height(h, a))
    if t in ("dl", "dlc"):
        dist = len(an ^ ay)  # edges on the path between n and y
        return dist + (kind.param * dn if t == "dlc" else 0.0)
    if t == "wp":
        return 1.0 if dn + dy == 0 else 2.0 * da / (dn + dy)
    if t == "zhao":
        den = _info(h, n) + _info(h, y)
        return 1.0 if den == 0 else 2.0 * _info(h, a) / den
    return _set_formula(kind, len(an & ay), len(an), len(ay))


def _set_formula(kind: MetricKind, inter, size_h, size_y) -> float:
    if kind.tag == "hf":
        prec, rec = inter / size_h, inter / size_y
        if prec + rec == 0:
            return 0.0
        b2 = kind.param ** 2
        return (1 + b2) * prec * rec / (b2 * prec + rec)
    if kind.tag == "hamming":
        return (size_h + size_y - 2 * inter) / size_y
    if kind.tag == "jaccard":
        return inter / (size_h + size_y - inter)
    raise SpaceMismatch(f"metric {kind.name} is not a set metric")


def direct_matrix(kind: MetricKind | str, h: Hierarchy, space=Space.NODES) -> np.ndarray:
    """Dense natural-orientation matrix built entry by entry."""
    if isinstance(kind, str):
        kind = parse_metric(kind)
    rows = list(h.leaves) if Space(space) is Space.LEAVES else range(h.node_count)
    return np.array([[direct_value(kind, h, n, y) for y in h.leaves] for n in rows])


def _oracle_costs(model: CostModel, h: Hierarchy) -> np.ndarray:
    if model.kind is not None:
        m = direct_matrix(model.kind, h, model.space)
        return -m if model.orientation is Orientation.GAIN else m
    return model.cost_matrix()


def brute_force_node(model: CostModel, h: Hierarchy, p_leaves, costs=None) -> tuple[int, float]:
    """Exact risk minimiser over every node (smallest id on ties).

    The risk is returned in cost orientation. ``costs`` may pass a
    precomputed cost matrix to skip rebuilding it.
    """
    if model.space is not Space.NODES:
        raise SpaceMismatch("node brute force needs a node-space model")
    c = _oracle_costs(model, h) if costs is None else costs
    risks = c @ np.asarray(p_leaves, dtype=np.float64)
    i = int(np.argmin(risks))
    return i, float(risks[i])


def brute_force_leaf(model: CostModel, h: Hierarchy, p_leaves) -> tuple[int, float]:
    if model.space is not Space.LEAVES:
        raise SpaceMismatch("leaf brute force needs a leaf-space model")
    risks = _oracle_costs(model, h) @ np.asarray(p_leaves, dtype=np.float64)
    i = int(np.argmin(risks))
    return int(h.leaves[i]), float(risks[i])


def _guard(h: Hierarchy):
    if h.node_count > MAX_ENUM_NODES:
        raise TooLarge(f"{h.node_count} nodes exceed the enumeration limit of {MAX_ENUM_NODES}")


def _antichains_below(h: Hierarchy, n: int) -> list[tuple[int, ...]]:
    out = [(n,)]
    kids = [[()] + _antichains_below(h, c) for c in h.children[n]]
    for combo in itertools.product(*kids):
        merged = tuple(sorted(itertools.chain.from_iterable(combo)))
        if merged:
            out.append(merged)
    return out


def enumerate_antichains(h: Hierarchy):
    """Yield every nonempty set of mutually exclusive nodes, as sorted tuples."""
    _guard(h)
    yield from _antichains_below(h, 0)


def count_antichains(h: Hierarchy) -> int:
    """Number of nonempty antichains, by dynamic programming (no size limit)."""
    count = [0] * h.node_count
    for n in range(h.node_count - 1, -1, -1):
        # antichains below n: {n} alone, or any mix of the children's options
        prod = 1
        for c in h.children[n]:
            prod *= count[c] + 1
        count[n] = 1 + (prod - 1 if h.children[n] else 0)
    return count[0]


def _ancestor_table(h: Hierarchy) -> np.ndarray:
    """Boolean ``(nodes, leaves)`` table: is node an ancestor of leaf."""
    t = np.zeros((h.node_count, h.leaf_count), dtype=bool)
    for j, l in enumerate(h.leaves):
        for a in ancestor_set(h, l):
            t[a, j] = True
    return t


def expected_set_value(kind: MetricKind, h: Hierarchy, p_leaves, antichain, table=None) -> float:
    """Expected metric value of a set prediction under ``p_leaves``."""
    if table is None:
        table = _ancestor_table(h)
    closed = set()
    for n in antichain:
        closed |= ancestor_set(h, n)
    inter = table[sorted(closed)].sum(axis=0)
    size_y = table.sum(axis=0)
    vals = [_set_formula(kind, int(i), len(closed), int(s)) for i, s in zip(inter, size_y)]
    return float(np.dot(np.asarray(p_leaves, dtype=np.float64), vals))


def brute_force_set(kind: MetricKind | str, h: Hierarchy, p_leaves) -> tuple[tuple[int, ...], float]:
    """Best antichain by exhaustive enumeration.

    Gains are maximised and Hamming loss is minimised; ties keep the first
    antichain in enumeration order.
    """
    if isinstance(kind, str):
        kind = parse_metric(kind)
    if not kind.set_valued:
        raise SpaceMismatch(f"metric {kind.name} is not a set metric")
    sign = -1.0 if kind.orientation is Orientation.GAIN else 1.0
    table = _ancestor_table(h)
    best, best_val = None, math.inf
    for ac in enumerate_antichains(h):
        v = sign * expected_set_value(kind, h, p_leaves, ac, table)
        if v < best_val:
            best, best_val = ac, v
    return best, sign * best_val


def phi_roundtrip_check(h: Hierarchy) -> bool:
    """Antichain -> ancestor closure -> childless members returns the input,
    and distinct antichains have distinct closures."""
    seen = set()
    for ac in enumerate_antichains(h):
        closed = set()
        for n in ac:
            closed |= ancestor_set(h, n)
        back = tuple(sorted(n for n in closed if not any(c in closed for c in h.children[n])))
        if back != ac:
            return False
        key = frozenset(closed)
        if key in seen:
            return False
        seen.add(key)
    return True


def random_reasonable_matrix(h: Hierarchy, rng, low: float = 0.1, high: float = 1.0) -> np.ndarray:
    """Random strictly reasonable node-space cost matrix.

    Each step from a parent to a child lowers the cost of the child's leaves
    and raises every other cost by a random amount in ``[low, high)``.
    """
    c = np.empty((h.node_count, h.leaf_count))
    c[0] = rng.uniform(0.0, 1.0, h.leaf_count)
    pos = np.arange(h.leaf_count)
    for n in range(1, h.node_count):
        inside = (pos >= h.leaf_lo[n]) & (pos < h.leaf_hi[n])
        step = rng.uniform(low, high, h.leaf_count)
        c[n] = c[h.parent[n]] + np.where(inside, -step, step)
    return c
