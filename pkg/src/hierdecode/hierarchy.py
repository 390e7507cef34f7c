"""Rooted class hierarchies.

A :class:`Hierarchy` is an immutable rooted tree whose nodes are numbered in
depth-first pre-order (root is 0). Two consequences are used throughout the
package:

* the descendants of node ``n`` are exactly the ids ``n .. subtree_end[n]-1``;
* leaves are ordered by id, so the leaf descendants of ``n`` form the
  contiguous slice ``leaf_lo[n]:leaf_hi[n]`` of any leaf-indexed vector.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    CycleDetected,
    DisconnectedNode,
    DuplicateChildEdge,
    FormatError,
    InvalidDistribution,
    LengthMismatch,
    MultipleRoots,
    NotInternal,
    UnknownNode,
)

__all__ = [
    "Hierarchy",
    "build_from_edges",
    "read_hierarchy",
    "write_hierarchy",
    "lca",
    "aggregate",
    "check_distribution",
    "augment_with_stop_nodes",
    "random_tree",
    "balanced_tree",
    "shaped_tree",
]

# Probability validation bands.
NEG_TOL = 1e-12
SUM_TOL = 1e-6
STOP_SUFFIX = "#stop"


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


class Hierarchy:
    """Immutable rooted tree with pre-order node ids.

    Use :func:`build_from_edges` or :func:`read_hierarchy` rather than the
    constructor, which expects a parent array already in pre-order.

    Attributes
    ----------
    names : tuple of str
    parent : ndarray of int, ``parent[0] == -1``
    children : tuple of tuples, children in id order
    depth : ndarray of int
    leaves : ndarray of int
        Node id of every leaf, in leaf order.
    leaf_index : ndarray of int
        Position of a node in the leaf order, ``-1`` for internal nodes.
    leaf_lo, leaf_hi : ndarray of int
        Half-open span of the leaf descendants of every node.
    subtree_end : ndarray of int
        One past the last descendant id.
    dmax : ndarray of int
        Deepest leaf depth below every node.
    info : ndarray of float
        ``log(|L| / |L(n)|)``.
    """

    def __init__(self, parent: Sequence[int], names: Sequence[str]):
        parent = np.asarray(parent, dtype=np.int64)
        n = len(parent)
        if n == 0:
            raise DisconnectedNode("empty hierarchy")
        if len(names) != n:
            raise LengthMismatch("names and parent arrays differ in length")
        if parent[0] != -1 or np.any(parent[1:] < 0):
            raise MultipleRoots("node 0 must be the only root")
        ids = np.arange(n)
        if np.any(parent[1:] >= ids[1:]):
            bad = int(ids[1:][parent[1:] >= ids[1:]][0])
            raise DisconnectedNode(f"node {names[bad]!r} is not in pre-order position")

        kids = [[] for _ in range(n)]
        for c in range(1, n):
            kids[parent[c]].append(c)
        children = tuple(tuple(k) for k in kids)

        depth = np.zeros(n, dtype=np.int64)
        for c in range(1, n):
            depth[c] = depth[parent[c]] + 1

        # pre-order check: a node's subtree must be a contiguous id range
        size = np.ones(n, dtype=np.int64)
        for c in range(n - 1, 0, -1):
            size[parent[c]] += size[c]
        end = ids + size
        for c in range(1, n):
            p = parent[c]
            if not (p < c < end[p]):
                raise DisconnectedNode(f"node {names[c]!r} breaks pre-order numbering")
        if end[0] != n:
            raise DisconnectedNode("ids are not a single pre-order traversal")
        for p in range(n):
            k = children[p]
            for a, b in zip(k, k[1:]):
                if end[a] != b:
                    raise DisconnectedNode(f"children of {names[p]!r} are not in pre-order")

        is_leaf = np.array([len(k) == 0 for k in children])
        leaves = ids[is_leaf]
        leaf_index = np.full(n, -1, dtype=np.int64)
        leaf_index[leaves] = np.arange(len(leaves))
        # number of leaves with id < i
        before = np.concatenate(([0], np.cumsum(is_leaf)))
        leaf_lo = before[ids]
        leaf_hi = before[end]

        dmax = depth.copy()
        for c in range(n - 1, 0, -1):
            if dmax[c] > dmax[parent[c]]:
                dmax[parent[c]] = dmax[c]

        n_leaves = len(leaves)
        info = np.log(n_leaves / (leaf_hi - leaf_lo))
        info[0] = 0.0

        self.names = tuple(str(s) for s in names)
        if len(set(self.names)) != n:
            raise DuplicateChildEdge("node names must be unique")
        self._index = {s: i for i, s in enumerate(self.names)}
        self.parent = _frozen(parent, np.int64)
        self.children = children
        self.depth = _frozen(depth, np.int64)
        self.is_leaf = _frozen(is_leaf, bool)
        self.leaves = _frozen(leaves, np.int64)
        self.leaf_index = _frozen(leaf_index, np.int64)
        self.leaf_lo = _frozen(leaf_lo, np.int64)
        self.leaf_hi = _frozen(leaf_hi, np.int64)
        self.subtree_end = _frozen(end, np.int64)
        self.dmax = _frozen(dmax, np.int64)
        self.info = _frozen(info, np.float64)
        self.leaf_depth = _frozen(depth[leaves], np.int64)
        self._levels = None
        self._euler = None
        self._anchor = None

    # -- basic queries -------------------------------------------------
    @property
    def node_count(self) -> int:
        return len(self.parent)

    @property
    def leaf_count(self) -> int:
        return len(self.leaves)

    @property
    def max_depth(self) -> int:
        return int(self.dmax[0])

    @property
    def min_leaf_depth(self) -> int:
        return int(self.leaf_depth.min())

    @property
    def leaf_names(self) -> list[str]:
        return [self.names[i] for i in self.leaves]

    def __len__(self):
        return self.node_count

    def __repr__(self):
        return (f"Hierarchy(nodes={self.node_count}, leaves={self.leaf_count}, "
                f"depth={self.max_depth})")

    def __eq__(self, other):
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.parent, other.parent)

    def __hash__(self):
        return hash((self.names, self.parent.tobytes()))

    def node(self, name: str) -> int:
        """Id of the node called ``name``."""
        try:
            return self._index[name]
        except KeyError:
            raise UnknownNode(f"unknown node {name!r}") from None

    def ancestors(self, n: int) -> list[int]:
        """Ancestors of ``n`` including ``n`` itself, root first."""
        out = []
        while n >= 0:
            out.append(int(n))
            n = self.parent[n]
        out.reverse()
        return out

    def is_ancestor(self, a: int, b: int) -> bool:
        """True when ``a`` is an ancestor of ``b`` (inclusive)."""
        return a <= b < self.subtree_end[a]

    def descendants(self, n: int) -> range:
        return range(n, int(self.subtree_end[n]))

    def edges(self) -> list[tuple[str, str]]:
        return [(self.names[self.parent[c]], self.names[c]) for c in range(1, self.node_count)]

    @property
    def height(self) -> np.ndarray:
        """Longest downward path to a leaf, 0 at leaves."""
        return self.dmax - self.depth

    @property
    def anchor(self) -> np.ndarray:
        """Shallowest non-root ancestor of every node (root maps to itself)."""
        if self._anchor is None:
            a = np.arange(self.node_count)
            for c in range(1, self.node_count):
                p = self.parent[c]
                if p != 0:
                    a[c] = a[p]
            self._anchor = _frozen(a, np.int64)
        return self._anchor

    # -- aggregation ---------------------------------------------------
    def _level_matrices(self):
        if self._levels is None:
            n = self.node_count
            levels = []
            for d in range(self.max_depth - 1, -1, -1):
                nodes = [i for i in range(n) if self.depth[i] == d and self.children[i]]
                if not nodes:
                    continue
                indptr = [0]
                cols = []
                for i in nodes:
                    cols.extend(self.children[i])
                    indptr.append(len(cols))
                m = sp.csr_matrix(
                    (np.ones(len(cols)), np.array(cols), np.array(indptr)),
                    shape=(len(nodes), n),
                )
                levels.append((np.array(nodes), m))
            self._levels = levels
        return self._levels

    # -- lowest common ancestor -----------------------------------------
    def _euler_table(self):
        if self._euler is None:
            tour = []
            first = np.zeros(self.node_count, dtype=np.int64)
            stack = [(0, 0)]
            while stack:
                node, k = stack.pop()
                if k == 0:
                    first[node] = len(tour)
                tour.append(node)
                kids = self.children[node]
                if k < len(kids):
                    stack.append((node, k + 1))
                    stack.append((kids[k], 0))
            tour = np.array(tour, dtype=np.int64)
            # ids are pre-order, so the shallowest node on a tour segment is
            # also the one with the smallest id
            table = [tour]
            j = 1
            while (1 << j) <= len(tour):
                prev = table[-1]
                half = 1 << (j - 1)
                table.append(np.minimum(prev[:-half], prev[half:]))
                j += 1
            self._euler = (first, table)
        return self._euler


def lca(h: Hierarchy, a, b):
    """Lowest common ancestor of ``a`` and ``b``.

    Accepts scalars or broadcastable integer arrays. Uses an Euler tour with
    a sparse table, so queries are O(1) after O(N log N) preprocessing.

    >>> h = build_from_edges([("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b")])
    >>> h.names[lca(h, h.node("a1"), h.node("a2"))]
    'A'
    """
    first, table = h._euler_table()
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if np.any((a < 0) | (a >= h.node_count) | (b < 0) | (b >= h.node_count)):
        raise UnknownNode("node id out of range")
    fa, fb = first[a], first[b]
    lo = np.minimum(fa, fb)
    hi = np.maximum(fa, fb) + 1
    k = np.floor(np.log2(hi - lo)).astype(np.int64)
    # log2 of exact powers of two can land just below the integer
    k = np.where((1 << (k + 1)) <= hi - lo, k + 1, k)
    if k.ndim == 0:
        t = table[int(k)]
        return int(min(t[lo], t[hi - (1 << int(k))]))
    out = np.empty(k.shape, dtype=np.int64)
    for kk in np.unique(k):
        sel = k == kk
        t = table[kk]
        out[sel] = np.minimum(t[lo[sel]], t[hi[sel] - (1 << int(kk))])
    return out


def check_distribution(h: Hierarchy, p) -> np.ndarray:
    """Validate leaf probabilities (one vector or a matrix of rows).

    Entries below ``-1e-12`` or row sums outside ``1 +/- 1e-6`` are rejected.
    Tiny negatives are clamped to zero; a row is renormalised when it was
    clamped or its sum is off by more than 1e-12.
    """
    p = np.array(p, dtype=np.float64)
    if p.ndim not in (1, 2) or p.shape[-1] != h.leaf_count:
        raise LengthMismatch(
            f"expected {h.leaf_count} leaf probabilities, got shape {p.shape}")
    rows = p.reshape(-1, h.leaf_count)
    if not np.all(np.isfinite(rows)):
        bad = int(np.nonzero(~np.all(np.isfinite(rows), axis=1))[0][0])
        raise InvalidDistribution(f"row {bad}: non-finite probability")
    neg = rows.min(axis=1) < -NEG_TOL
    if neg.any():
        raise InvalidDistribution(f"row {int(np.argmax(neg))}: negative probability")
    clamped = (rows < 0).any(axis=1)
    rows[rows < 0] = 0.0
    s = rows.sum(axis=1)
    off = np.abs(s - 1.0) > SUM_TOL
    if off.any():
        i = int(np.argmax(off))
        raise InvalidDistribution(f"row {i}: probabilities sum to {s[i]:.9g}")
    fix = clamped | (np.abs(s - 1.0) > 1e-12)
    if fix.any():
        rows[fix] /= s[fix, None]
    return rows.reshape(p.shape)


def aggregate(h: Hierarchy, p) -> np.ndarray:
    """Bottom-up node probabilities ``p(n) = sum of p(l) over leaves below n``.

    ``p`` is a leaf vector or an ``(S, |L|)`` matrix; the result has
    ``|N|`` entries per row. Children are summed in id order, level by level,
    so every parent is an exact sequential sum of its children and
    ``p(child) <= p(parent)`` holds exactly.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] != h.leaf_count:
        raise LengthMismatch(
            f"expected {h.leaf_count} leaf probabilities, got shape {p.shape}")
    batch = p.ndim == 2
    out = np.zeros((h.node_count, p.shape[0]) if batch else h.node_count)
    out[h.leaves] = p.T if batch else p
    for nodes, m in h._level_matrices():
        out[nodes] = m @ out
    return out.T if batch else out


# -- construction --------------------------------------------------------

def _from_adjacency(root, kids: dict, order_names) -> Hierarchy:
    names, parent = [], []
    stack = [(root, -1)]
    while stack:
        name, par = stack.pop()
        i = len(names)
        names.append(name)
        parent.append(par)
        for c in reversed(kids.get(name, ())):
            stack.append((c, i))
    if len(names) != len(order_names):
        missing = [s for s in order_names if s not in set(names)]
        raise DisconnectedNode(f"nodes not reachable from root: {missing[:10]}")
    return Hierarchy(parent, names)


def build_from_edges(edges: Iterable[tuple[str, str]]) -> Hierarchy:
    """Build a hierarchy from ``(parent, child)`` name pairs.

    Children keep the order in which their edges appear. Raises
    :class:`MultipleRoots`, :class:`CycleDetected`, :class:`DuplicateChildEdge`
    or :class:`DisconnectedNode`, each naming the offending nodes.
    """
    edges = [(str(a), str(b)) for a, b in edges]
    if not edges:
        raise DisconnectedNode("edge list is empty")
    kids: dict[str, list[str]] = {}
    par: dict[str, str] = {}
    seen: dict[str, None] = {}
    for a, b in edges:
        if b in par:
            raise DuplicateChildEdge(
                f"node {b!r} has more than one parent edge ({par[b]!r}, {a!r})")
        par[b] = a
        kids.setdefault(a, []).append(b)
        seen.setdefault(a)
        seen.setdefault(b)
    roots = [s for s in seen if s not in par]
    if len(roots) > 1:
        raise MultipleRoots(f"several nodes have no parent: {roots[:10]}")
    if not roots:
        raise CycleDetected(f"no root; cycle through {_find_cycle(par, next(iter(par)))}")
    # walk from the root; anything unreached hangs off a cycle
    reached = set()
    stack = [roots[0]]
    while stack:
        s = stack.pop()
        reached.add(s)
        stack.extend(kids.get(s, ()))
    if len(reached) != len(seen):
        start = next(s for s in seen if s not in reached)
        raise CycleDetected(f"cycle through {_find_cycle(par, start)}")
    return _from_adjacency(roots[0], kids, list(seen))


def _find_cycle(par, start):
    path, pos = [], {}
    s = start
    while s not in pos:
        pos[s] = len(path)
        path.append(s)
        s = par.get(s)
        if s is None:
            return path
    return path[pos[s]:]


def read_hierarchy(path) -> Hierarchy:
    """Read a ``parent<TAB>child`` edge file (``#`` lines are comments)."""
    edges = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise FormatError("expected 'parent<TAB>child'", line=lineno)
            edges.append((parts[0], parts[1]))
    return build_from_edges(edges)


def write_hierarchy(h: Hierarchy, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for a, b in h.edges():
            f.write(f"{a}\t{b}\n")


def augment_with_stop_nodes(h: Hierarchy, internal: Iterable[int]) -> Hierarchy:
    """Give each listed internal node an extra leaf child ``<name>#stop``.

    The stop leaf is appended after the existing children, so datasets whose
    labels may sit at internal nodes can be decoded as leaf labels.
    """
    internal = sorted({int(n) for n in internal})
    for n in internal:
        if not 0 <= n < h.node_count:
            raise UnknownNode(f"node id {n} out of range")
        if h.is_leaf[n]:
            raise NotInternal(f"node {h.names[n]!r} is a leaf")
    if not internal:
        return h
    kids = {h.names[i]: [h.names[c] for c in h.children[i]] for i in range(h.node_count)}
    names = list(h.names)
    for n in internal:
        stop = h.names[n] + STOP_SUFFIX
        if stop in h._index:
            raise DuplicateChildEdge(f"node {stop!r} already exists")
        kids[h.names[n]].append(stop)
        names.append(stop)
    return _from_adjacency(h.names[0], kids, names)


# -- synthetic trees ---------------------------------------------------------

def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _from_parent_list(par: list[int], prefix="n") -> Hierarchy:
    kids: dict[str, list[str]] = {}
    for c, p in enumerate(par):
        if p >= 0:
            kids.setdefault(f"{prefix}{p}", []).append(f"{prefix}{c}")
    return _from_adjacency(f"{prefix}0", kids, [f"{prefix}{i}" for i in range(len(par))])


def random_tree(n_nodes: int, seed=None, min_children: int = 1) -> Hierarchy:
    """Random tree with ``n_nodes`` nodes.

    With ``min_children=1`` every new node picks a uniformly random parent
    among earlier nodes (unary chains occur). With ``min_children=2`` random
    leaves are split until the size is reached, so every internal node has at
    least two children.
    """
    rng = _rng(seed)
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    if min_children <= 1:
        par = [-1] + [int(rng.integers(0, i)) for i in range(1, n_nodes)]
        return _from_parent_list(par)
    if n_nodes < 3:
        raise ValueError("a tree with branching >= 2 needs at least three nodes")
    par = [-1]
    nkids = [0]
    while len(par) < n_nodes:
        left = n_nodes - len(par)
        internal = [i for i, k in enumerate(nkids) if k > 0]
        leaves = [i for i, k in enumerate(nkids) if k == 0]
        if left == 1 and internal:
            target, k = int(rng.choice(internal)), 1
        else:
            target = int(rng.choice(leaves))
            k = int(rng.integers(2, min(4, left) + 1))
        for _ in range(k):
            par.append(target)
            nkids.append(0)
        nkids[target] += k
    return _from_parent_list(par)


def balanced_tree(branching: int, depth: int) -> Hierarchy:
    """Complete tree where every internal node has ``branching`` children."""
    par = [-1]
    frontier = [0]
    for _ in range(depth):
        nxt = []
        for p in frontier:
            for _ in range(branching):
                par.append(p)
                nxt.append(len(par) - 1)
        frontier = nxt
    return _from_parent_list(par)


def shaped_tree(n_nodes: int, n_leaves: int, depth: int, seed=None) -> Hierarchy:
    """Random tree with exact node count, leaf count and maximum leaf depth.

    Every internal node gets at least two children.
    """
    rng = _rng(seed)
    n_int = n_nodes - n_leaves
    if n_int < depth or n_leaves < n_int + 1:
        raise ValueError("no tree with >=2 children per internal node has this shape")
    # internal skeleton: a spine of `depth` nodes plus random extra nodes
    par = [-1] + list(range(depth - 1))
    d = list(range(depth))
    for _ in range(n_int - depth):
        cand = [i for i in range(len(par)) if d[i] < depth - 1]
        p = int(rng.choice(cand))
        par.append(p)
        d.append(d[p] + 1)
    nkids = [0] * n_int
    for c in range(1, n_int):
        nkids[par[c]] += 1
    leaf_par = [depth - 1]  # keeps the maximum depth exact
    nkids[depth - 1] += 1
    for i in range(n_int):
        while nkids[i] < 2:
            leaf_par.append(i)
            nkids[i] += 1
    if len(leaf_par) > n_leaves:
        raise ValueError("too few leaves for this skeleton")
    leaf_par.extend(int(x) for x in rng.integers(0, n_int, n_leaves - len(leaf_par)))
    rng.shuffle(leaf_par)
    return _from_parent_list(par + leaf_par)
