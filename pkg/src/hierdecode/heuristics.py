"""Baseline decoders.

Each heuristic maps a leaf distribution to a single leaf or node. The batch
entry point :func:`heuristic_nodes` works on a whole matrix of rows at once
and returns node ids; :func:`decode_heuristic` wraps it for one row.

Ties go to the smallest node id. Rules that maximise node information
first prefer the deeper node when information is equal, so that nodes on a
single-child chain resolve the same way as the closed-form threshold rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam, InvalidTau
from .hierarchy import Hierarchy, aggregate, check_distribution, lca
from .node import first_min
from .prediction import Prediction

__all__ = [
    "HeuristicKind",
    "parse_heuristic",
    "HEURISTIC_NAMES",
    "heuristic_nodes",
    "decode_heuristic",
]

HEURISTIC_NAMES = ("argmax", "topdown", "hie-self", "karthik", "majority",
                   "threshold", "plurality", "darts", "expinfo")
_LEAF_KINDS = {"argmax", "topdown", "hie-self", "karthik"}


@dataclass(frozen=True)
class HeuristicKind:
    tag: str
    param: float | None = None

    def __post_init__(self):
        if self.tag not in HEURISTIC_NAMES:
            raise InvalidParam(f"unknown heuristic {self.tag!r}")
        if self.tag == "threshold":
            if self.param is None or not 0.0 < self.param <= 1.0:
                raise InvalidTau(f"threshold needs tau in (0, 1], got {self.param}")
        elif self.tag == "darts":
            if self.param is None or not np.isfinite(self.param) or self.param < 0:
                raise InvalidParam(f"darts needs lambda >= 0, got {self.param}")
        elif self.param is not None:
            raise InvalidParam(f"heuristic {self.tag!r} takes no parameter")

    @property
    def returns_leaf(self) -> bool:
        return self.tag in _LEAF_KINDS

    @property
    def name(self) -> str:
        return self.tag if self.param is None else f"{self.tag}:{self.param:g}"

    def __str__(self):
        return self.name


def parse_heuristic(text: str) -> HeuristicKind:
    """``argmax``, ``threshold:0.7``, ``darts:0.3`` and so on."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    if name not in HEURISTIC_NAMES:
        raise InvalidParam(f"unknown heuristic {name!r}")
    param = None
    if arg:
        try:
            param = float(arg)
        except ValueError:
            raise InvalidParam(f"bad heuristic parameter {arg!r}") from None
    elif name == "darts":
        param = 0.0
    return HeuristicKind(name, param)


def _info_rank(h: Hierarchy) -> np.ndarray:
    """Rank of every node under (information, depth, -id), ascending."""
    n = h.node_count
    order = np.lexsort((-np.arange(n), h.depth, h.info))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    return rank


def _height_matrix(h: Hierarchy) -> np.ndarray:
    leaves = h.leaves
    a = lca(h, leaves[:, None], leaves[None, :])
    return h.height[a].astype(np.float64)


def _topdown(h: Hierarchy, p_nodes: np.ndarray) -> np.ndarray:
    out = np.empty(len(p_nodes), dtype=np.int64)
    children = h.children
    for i, row in enumerate(p_nodes):
        n = 0
        while children[n]:
            kids = children[n]
            best = kids[0]
            for c in kids[1:]:
                if row[c] > row[best]:
                    best = c
            n = best
        out[i] = n
    return out


def _plurality(h: Hierarchy, p_nodes: np.ndarray, rank: np.ndarray) -> np.ndarray:
    # n qualifies iff only its own ancestors (itself included) reach p(n)
    out = np.empty(len(p_nodes), dtype=np.int64)
    n = h.node_count
    need = h.depth + 1
    for i, row in enumerate(p_nodes):
        srt = np.sort(row)
        at_least = n - np.searchsorted(srt, row, side="left")
        ok = at_least == need
        out[i] = int(np.argmax(np.where(ok, rank, -1))) if ok.any() else 0
    return out


def heuristic_nodes(kind: HeuristicKind | str, h: Hierarchy, p_leaves, p_nodes=None,
                    cache: dict | None = None) -> np.ndarray:
    """Node id chosen by ``kind`` for every row of ``p_leaves``.

    ``p_leaves`` is ``(S, |L|)``; ``p_nodes`` its aggregation if already
    known. ``cache`` may hold per-hierarchy tables between calls.
    """
    if isinstance(kind, str):
        kind = parse_heuristic(kind)
    p_leaves = np.atleast_2d(np.asarray(p_leaves, dtype=np.float64))
    if p_nodes is None:
        p_nodes = aggregate(h, p_leaves)
    p_nodes = np.atleast_2d(p_nodes)
    cache = {} if cache is None else cache
    t = kind.tag
    if t == "argmax":
        return h.leaves[np.argmax(p_leaves, axis=1)]
    if t == "topdown":
        return _topdown(h, p_nodes)
    if t == "hie-self":
        return h.leaves[np.argmax(p_nodes[:, h.parent[h.leaves]] * p_leaves, axis=1)]
    if t == "karthik":
        if "height" not in cache:
            cache["height"] = _height_matrix(h)
        risks = p_leaves @ cache["height"]  # symmetric matrix
        best = first_min(risks)
        top = np.argmax(p_leaves, axis=1)
        sure = p_leaves[np.arange(len(p_leaves)), top] > 0.5
        return h.leaves[np.where(sure, top, best)]
    if "rank" not in cache:
        cache["rank"] = _info_rank(h)
    rank = cache["rank"]
    if t in ("majority", "threshold"):
        tau = 0.5 if t == "majority" else kind.param
        return np.argmax(np.where(p_nodes > tau, rank, -1), axis=1)
    if t == "plurality":
        return _plurality(h, p_nodes, rank)
    if t in ("darts", "expinfo"):
        lam = 0.0 if t == "expinfo" else kind.param
        return np.argmax((h.info + lam) * p_nodes, axis=1)
    raise InvalidParam(f"unknown heuristic {t!r}")


def decode_heuristic(kind: HeuristicKind | str, h: Hierarchy, p_leaves) -> Prediction:
    """Single-row heuristic decoding.

    >>> from hierdecode.hierarchy import build_from_edges
    >>> h = build_from_edges([("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b")])
    >>> decode_heuristic("majority", h, [0.4, 0.3, 0.3]).names(h)
    ['A']
    """
    if isinstance(kind, str):
        kind = parse_heuristic(kind)
    p = check_distribution(h, p_leaves)
    n = int(heuristic_nodes(kind, h, p[None, :])[0])
    return Prediction.leaf(h, n) if kind.returns_leaf else Prediction.node(h, n)
