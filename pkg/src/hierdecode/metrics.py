"""Hierarchical metrics, cost models and reasonableness checks.

A metric is scored against a leaf label ``y``. Node candidates are scored
through the depth, information or height of their lowest common ancestor
with ``y``; set candidates are scored on their ancestor closures.

Internally every decoder works with costs. Gain metrics (Wu-Palmer, Zhao,
hF-beta, Jaccard) are negated once when cost rows are produced.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import FormatError, InvalidParam, NotReasonable, SpaceMismatch, TooLarge
from .hierarchy import Hierarchy, lca
from .prediction import SET, Prediction

__all__ = [
    "Orientation",
    "Space",
    "MetricKind",
    "parse_metric",
    "CostModel",
    "ReasonablenessVerdict",
    "score",
    "score_nodes",
    "score_sets",
    "build_cost_matrix",
    "check_reasonable",
    "read_matrix",
    "write_matrix",
]

DEFAULT_BUDGET = 200_000_000
ZERO_TOL = 1e-12
EQ_TOL = 1e-9


class Orientation(str, Enum):
    COST = "cost"
    GAIN = "gain"


class Space(str, Enum):
    LEAVES = "leaves"
    NODES = "nodes"
    NODESETS = "nodesets"


_GAIN_TAGS = {"wp", "zhao", "hf", "jaccard"}
_SET_TAGS = {"hf", "hamming", "jaccard"}
_ALIASES = {
    "top1": "top1", "top-1": "top1",
    "eta_lca": "eta_lca", "eta-lca": "eta_lca", "lca": "eta_lca",
    "dl": "dl", "dlc": "dlc",
    "wp": "wp", "wu-palmer": "wp",
    "zhao": "zhao",
    "hf": "hf", "hfbeta": "hf",
    "hamming": "hamming", "jaccard": "jaccard",
}


@dataclass(frozen=True)
class MetricKind:
    """A built-in metric. ``param`` is ``c`` for ``dlc`` and beta for ``hf``."""

    tag: str
    param: float | None = None

    def __post_init__(self):
        if self.tag not in set(_ALIASES.values()):
            raise InvalidParam(f"unknown metric {self.tag!r}")
        if self.tag == "dlc":
            if self.param is None or not np.isfinite(self.param) or self.param < 0:
                raise InvalidParam("dlc needs a parameter c >= 0")
        elif self.tag == "hf":
            if self.param is None or not np.isfinite(self.param) or self.param <= 0:
                raise InvalidParam("hf needs a parameter beta > 0")
        elif self.param is not None:
            raise InvalidParam(f"metric {self.tag!r} takes no parameter")

    @property
    def orientation(self) -> Orientation:
        return Orientation.GAIN if self.tag in _GAIN_TAGS else Orientation.COST

    @property
    def set_valued(self) -> bool:
        return self.tag in _SET_TAGS

    @property
    def name(self) -> str:
        return self.tag if self.param is None else f"{self.tag}:{self.param:g}"

    def __str__(self):
        return self.name


def parse_metric(text: str) -> MetricKind:
    """Parse ``name`` or ``name:param``, e.g. ``dl``, ``dlc:0.5``, ``hf:2``."""
    name, _, arg = text.strip().partition(":")
    tag = _ALIASES.get(name.lower())
    if tag is None:
        raise InvalidParam(f"unknown metric {name!r}")
    if arg:
        try:
            param = float(arg)
        except ValueError:
            raise InvalidParam(f"bad metric parameter {arg!r}") from None
    else:
        param = None
    return MetricKind(tag, param)


# -- pairwise formulas ------------------------------------------------------

def _pair_values(kind: MetricKind, h: Hierarchy, n, y, a):
    """Metric value for candidate nodes ``n``, labels ``y`` and their LCA ``a``.

    Natural orientation; all arguments broadcast.
    """
    t = kind.tag
    dn, dy, da = h.depth[n], h.depth[y], h.depth[a]
    if t == "top1":
        return (n != y).astype(np.float64)
    if t == "eta_lca":
        return h.height[a].astype(np.float64)
    if t == "dl":
        return (dn + dy - 2 * da).astype(np.float64)
    if t == "dlc":
        return (dn + dy - 2 * da) + kind.param * dn
    if t == "wp":
        den = (dn + dy).astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, 2.0 * da / np.where(den > 0, den, 1.0), 1.0)
    if t == "zhao":
        den = h.info[n] + h.info[y]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, 2.0 * h.info[a] / np.where(den > 0, den, 1.0), 1.0)
    # set metrics on a single node: closures are the two ancestor chains
    inter = da + 1.0
    sh, sy = dn + 1.0, dy + 1.0
    if t == "hf":
        b2 = kind.param ** 2
        return (1.0 + b2) * inter / (sh + b2 * sy)
    if t == "hamming":
        return (sh + sy - 2.0 * inter) / sy
    if t == "jaccard":
        return inter / (sh + sy - inter)
    raise InvalidParam(f"unknown metric {t!r}")


def _set_value(kind: MetricKind, inter, size_h, size_y):
    if kind.tag == "hf":
        b2 = kind.param ** 2
        return (1.0 + b2) * inter / (size_h + b2 * size_y)
    if kind.tag == "hamming":
        return (size_h + size_y - 2.0 * inter) / size_y
    if kind.tag == "jaccard":
        return inter / (size_h + size_y - inter)
    raise SpaceMismatch(f"metric {kind.name} is not defined on node sets")


# -- cost models ------------------------------------------------------------

class CostModel:
    """A metric over a candidate space, either built in or an explicit matrix.

    Parameters
    ----------
    h : Hierarchy
    kind : MetricKind, optional
        Built-in metric. Exactly one of ``kind`` and ``matrix`` is given.
    matrix : array_like, optional
        ``(candidates, leaves)`` scores; rows follow node ids (node space)
        or leaf order (leaf space).
    orientation : Orientation
        Required with ``matrix``; fixed by ``kind`` otherwise.
    space : Space
    budget : int
        Largest number of entries a built-in model will materialise.
    """

    def __init__(self, h: Hierarchy, kind: MetricKind | None = None, matrix=None,
                 orientation: Orientation | str | None = None,
                 space: Space | str = Space.NODES, budget: int = DEFAULT_BUDGET):
        space = Space(space)
        if (kind is None) == (matrix is None):
            raise ValueError("give exactly one of kind and matrix")
        self.h = h
        self.kind = kind
        self.space = space
        self.budget = int(budget)
        self._cost = None
        if kind is not None:
            if space is Space.NODESETS and not kind.set_valued:
                raise SpaceMismatch(f"metric {kind.name} is not defined on node sets")
            self.orientation = kind.orientation
        else:
            if orientation is None:
                raise ValueError("explicit matrices need an orientation")
            self.orientation = Orientation(orientation)
            if space is Space.NODESETS:
                raise SpaceMismatch("explicit matrices cannot cover node sets")
            m = np.array(matrix, dtype=np.float64)
            want = (self.candidate_count, h.leaf_count)
            if m.shape != want:
                raise SpaceMismatch(f"matrix shape {m.shape}, expected {want}")
            if not np.all(np.isfinite(m)):
                raise FormatError("matrix has non-finite entries")
            cost = -m if self.orientation is Orientation.GAIN else m
            cost.setflags(write=False)
            self._cost = cost

    @classmethod
    def builtin(cls, kind: MetricKind | str, h: Hierarchy, space=Space.NODES, **kw):
        if isinstance(kind, str):
            kind = parse_metric(kind)
        return cls(h, kind=kind, space=space, **kw)

    @classmethod
    def explicit(cls, matrix, h: Hierarchy, orientation, space=Space.NODES):
        return cls(h, matrix=matrix, orientation=orientation, space=space)

    @property
    def sign(self) -> float:
        """Multiplier from natural values to costs."""
        return -1.0 if self.orientation is Orientation.GAIN else 1.0

    @property
    def name(self) -> str:
        return self.kind.name if self.kind is not None else "matrix"

    @property
    def candidate_count(self) -> int:
        return self.h.leaf_count if self.space is Space.LEAVES else self.h.node_count

    def candidates(self) -> np.ndarray:
        """Node ids of the candidates, in row order."""
        if self.space is Space.LEAVES:
            return np.asarray(self.h.leaves)
        if self.space is Space.NODES:
            return np.arange(self.h.node_count)
        raise SpaceMismatch("node-set space has no finite row list")

    def _rows_of(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=np.int64)
        if self.space is Space.LEAVES:
            rows = self.h.leaf_index[nodes]
            if np.any(rows < 0):
                raise SpaceMismatch("leaf-space model asked about an internal node")
            return rows
        return nodes

    def cost_rows(self, nodes) -> np.ndarray:
        """Cost-oriented rows ``C(n, .)`` for candidate node ids ``nodes``."""
        if self._cost is not None:
            return self._cost[self._rows_of(nodes)]
        if self.space is Space.NODESETS:
            raise SpaceMismatch("node-set models have no cost rows")
        nodes = np.asarray(nodes, dtype=np.int64)
        self._rows_of(nodes)
        leaves = self.h.leaves
        a = lca(self.h, nodes[:, None], leaves[None, :])
        return self.sign * _pair_values(self.kind, self.h, nodes[:, None], leaves[None, :], a)

    def cost_matrix(self) -> np.ndarray:
        """Full cost-oriented matrix, built once and cached."""
        if self._cost is None:
            size = self.candidate_count * self.h.leaf_count
            if size > self.budget:
                raise TooLarge(f"{size} matrix entries exceed the budget of {self.budget}")
            if self.space is Space.NODESETS:
                raise SpaceMismatch("node-set models have no finite matrix")
            cands = self.candidates()
            out = np.empty((len(cands), self.h.leaf_count))
            step = max(1, 2_000_000 // max(1, self.h.leaf_count))
            for i in range(0, len(cands), step):
                out[i:i + step] = self.cost_rows(cands[i:i + step])
            out.setflags(write=False)
            self._cost = out
        return self._cost

    @property
    def materialized(self) -> bool:
        return self._cost is not None

    def risks(self, p_leaves, nodes) -> np.ndarray:
        """Expected cost of each candidate node under leaf distribution ``p_leaves``."""
        return self.cost_rows(nodes) @ np.asarray(p_leaves, dtype=np.float64)

    def negated(self) -> "CostModel":
        """Explicit copy with values negated and orientation flipped."""
        m = self.cost_matrix()
        if self.orientation is Orientation.COST:
            return CostModel(self.h, matrix=-m, orientation=Orientation.GAIN, space=self.space)
        return CostModel(self.h, matrix=m, orientation=Orientation.COST, space=self.space)

    def natural_matrix(self) -> np.ndarray:
        return self.sign * self.cost_matrix()

    def __repr__(self):
        return f"CostModel({self.name}, {self.orientation.value}, {self.space.value})"


# -- scoring ----------------------------------------------------------------

def _closure_hits(h: Hierarchy, closed, y: int) -> int:
    return sum(1 for a in closed if a <= y < h.subtree_end[a])


def score(model: CostModel, h: Hierarchy, cand: Prediction, y: int) -> float:
    """Metric value (natural orientation) of ``cand`` against leaf ``y``."""
    y = int(y)
    if not h.is_leaf[y]:
        raise SpaceMismatch(f"label {h.names[y]!r} is not a leaf")
    if model.space is Space.NODESETS or cand.kind == SET:
        if model.kind is None or not model.kind.set_valued:
            raise SpaceMismatch(f"metric {model.name} cannot score set predictions")
        inter = _closure_hits(h, cand.augmented, y)
        return float(_set_value(model.kind, float(inter), float(len(cand.augmented)),
                                float(h.depth[y] + 1)))
    n = cand.single
    if model.space is Space.LEAVES and not h.is_leaf[n]:
        raise SpaceMismatch("leaf-space metric given a node prediction")
    if model.kind is not None:
        return float(_pair_values(model.kind, h, np.int64(n), np.int64(y),
                                  np.int64(lca(h, n, y))))
    row = model._rows_of([n])[0]
    return float(model.sign * model._cost[row, h.leaf_index[y]])


def score_nodes(model: CostModel, h: Hierarchy, nodes, labels) -> np.ndarray:
    """Vectorised :func:`score` for single-node predictions."""
    nodes = np.asarray(nodes, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if model.kind is not None:
        return _pair_values(model.kind, h, nodes, labels, lca(h, nodes, labels)).astype(np.float64)
    rows = model._rows_of(nodes)
    return model.sign * model._cost[rows, h.leaf_index[labels]]


def score_sets(model: CostModel, h: Hierarchy, preds, labels) -> np.ndarray:
    """Vectorised :func:`score` for a list of predictions of any kind."""
    if model.kind is None or not model.kind.set_valued:
        raise SpaceMismatch(f"metric {model.name} cannot score set predictions")
    out = np.empty(len(preds))
    for i, (pr, y) in enumerate(zip(preds, labels)):
        y = int(y)
        inter = _closure_hits(h, pr.augmented, y)
        out[i] = _set_value(model.kind, float(inter), float(len(pr.augmented)),
                            float(h.depth[y] + 1))
    return out


def build_cost_matrix(kind: MetricKind | str, h: Hierarchy, space=Space.NODES) -> CostModel:
    """Explicit model holding the dense matrix of ``kind`` (natural orientation)."""
    if isinstance(kind, str):
        kind = parse_metric(kind)
    space = Space(space)
    if space is Space.NODESETS:
        raise SpaceMismatch("set metrics have no finite matrix")
    m = CostModel.builtin(kind, h, space, budget=np.iinfo(np.int64).max)
    return CostModel.explicit(m.natural_matrix(), h, kind.orientation, space)


# -- reasonableness -----------------------------------------------------------

@dataclass(frozen=True)
class ReasonablenessVerdict:
    tag: str
    witness: tuple[int, int] | None = None

    STRICT = "StrictReasonable"
    ROOTED = "RootedReasonable"
    NOT = "NotReasonable"

    @property
    def ok(self) -> bool:
        return self.tag != self.NOT

    def __str__(self):
        return self.tag


def _parent_differences(model: CostModel, h: Hierarchy, nodes):
    """``C(n, l) - C(parent(n), l)`` for each node in ``nodes``; small values zeroed."""
    d = model.cost_rows(nodes) - model.cost_rows(h.parent[nodes])
    d[np.abs(d) < ZERO_TOL] = 0.0
    return d


def iter_parent_differences(model: CostModel, h: Hierarchy, chunk_entries=4_000_000):
    """Yield ``(nodes, delta)`` chunks covering every non-root node."""
    step = max(1, chunk_entries // max(1, h.leaf_count))
    for i in range(1, h.node_count, step):
        nodes = np.arange(i, min(h.node_count, i + step))
        yield nodes, _parent_differences(model, h, nodes)


def check_reasonable(model: CostModel, h: Hierarchy) -> ReasonablenessVerdict:
    """Classify a node-space cost model.

    ``StrictReasonable``: for every non-root ``n``, moving from ``parent(n)``
    to ``n`` strictly lowers the cost of every leaf below ``n`` and strictly
    raises it for every other leaf.

    ``RootedReasonable``: the same, except the cost must stay unchanged for
    leaves whose LCA with ``n`` is the root.

    Otherwise ``NotReasonable`` with a violating ``(node, leaf)`` pair.
    """
    if model.space is not Space.NODES:
        raise SpaceMismatch("reasonableness is defined for node-space models")
    if h.node_count == 1:
        return ReasonablenessVerdict(ReasonablenessVerdict.STRICT)
    pos = np.arange(h.leaf_count)
    strict_witness = rooted_witness = None
    for nodes, d in iter_parent_differences(model, h):
        inside = (pos >= h.leaf_lo[nodes, None]) & (pos < h.leaf_hi[nodes, None])
        anc = h.anchor[nodes]
        near = (pos >= h.leaf_lo[anc, None]) & (pos < h.leaf_hi[anc, None]) & ~inside
        far = ~inside & ~near
        bad = (inside & ~(d < 0)) | (near & ~(d > 0))
        if bad.any():
            r, c = np.argwhere(bad)[0]
            return ReasonablenessVerdict(
                ReasonablenessVerdict.NOT, (int(nodes[r]), int(h.leaves[c])))
        if strict_witness is None:
            bad = far & ~(d > 0)
            if bad.any():
                r, c = np.argwhere(bad)[0]
                strict_witness = (int(nodes[r]), int(h.leaves[c]))
        if rooted_witness is None:
            bad = far & ~(np.abs(d) <= EQ_TOL)
            if bad.any():
                r, c = np.argwhere(bad)[0]
                rooted_witness = (int(nodes[r]), int(h.leaves[c]))
        if strict_witness is not None and rooted_witness is not None:
            return ReasonablenessVerdict(ReasonablenessVerdict.NOT, strict_witness)
    if strict_witness is None:
        return ReasonablenessVerdict(ReasonablenessVerdict.STRICT)
    return ReasonablenessVerdict(ReasonablenessVerdict.ROOTED)


def require_reasonable(model: CostModel, h: Hierarchy) -> ReasonablenessVerdict:
    v = check_reasonable(model, h)
    if not v.ok:
        n, l = v.witness
        raise NotReasonable(
            f"cost is not hierarchically reasonable at node {h.names[n]!r}, leaf {h.names[l]!r}",
            witness=v.witness)
    return v


# -- matrix files ---------------------------------------------------------------

def read_matrix(path) -> np.ndarray:
    """Read a grid file: ``rows cols`` on the first line, then row-major reals.

    Files ending in ``.npy`` are read as NumPy binary arrays.
    """
    if str(path).endswith(".npy"):
        m = np.load(path, allow_pickle=False)
        if m.ndim != 2:
            raise FormatError("matrix must be two-dimensional")
        return m.astype(np.float64)
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise FormatError("expected 'rows cols'", line=1)
        try:
            rows, cols = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError("expected integer 'rows cols'", line=1) from None
        values = []
        for lineno, line in enumerate(f, 2):
            for tok in line.split():
                try:
                    values.append(float(tok))
                except ValueError:
                    raise FormatError(f"bad number {tok!r}", line=lineno) from None
    if len(values) != rows * cols:
        raise FormatError(f"expected {rows * cols} values, found {len(values)}")
    return np.array(values, dtype=np.float64).reshape(rows, cols)


def write_matrix(m, path) -> None:
    m = np.asarray(m, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            f.write(" ".join(repr(float(x)) for x in row) + "\n")
