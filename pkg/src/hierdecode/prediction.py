"""Decoder outputs: a leaf, a node, or a set of mutually exclusive nodes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hierarchy import Hierarchy

__all__ = ["Prediction", "augment", "antichain_of", "is_antichain"]

LEAF, NODE, SET = "leaf", "node", "set"


def augment(h: Hierarchy, nodes) -> tuple[int, ...]:
    """Union of the ancestor chains of ``nodes`` (root included), sorted."""
    out = set()
    for n in nodes:
        n = int(n)
        while n >= 0 and n not in out:
            out.add(n)
            n = int(h.parent[n])
    return tuple(sorted(out))


def antichain_of(h: Hierarchy, closed) -> tuple[int, ...]:
    """Members of an ancestor-closed set with no child inside the set."""
    closed = set(int(n) for n in closed)
    return tuple(sorted(n for n in closed if not any(c in closed for c in h.children[n])))


def is_antichain(h: Hierarchy, nodes) -> bool:
    nodes = sorted(set(int(n) for n in nodes))
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if h.is_ancestor(a, b):
                return False
    return True


@dataclass(frozen=True)
class Prediction:
    """Tagged prediction.

    ``nodes`` is a one-element tuple for leaf and node predictions and the
    sorted antichain for set predictions. ``augmented`` is the root-inclusive
    ancestor closure, which is what set metrics score.
    """

    kind: str
    nodes: tuple[int, ...]
    augmented: tuple[int, ...]

    @classmethod
    def leaf(cls, h: Hierarchy, n: int) -> "Prediction":
        n = int(n)
        if not h.is_leaf[n]:
            raise ValueError(f"node {h.names[n]!r} is not a leaf")
        return cls(LEAF, (n,), augment(h, (n,)))

    @classmethod
    def node(cls, h: Hierarchy, n: int) -> "Prediction":
        n = int(n)
        return cls(NODE, (n,), augment(h, (n,)))

    @classmethod
    def node_set(cls, h: Hierarchy, antichain) -> "Prediction":
        nodes = tuple(sorted(set(int(n) for n in antichain)))
        if not nodes:
            raise ValueError("empty set prediction")
        if not is_antichain(h, nodes):
            raise ValueError("set prediction members must be mutually exclusive")
        return cls(SET, nodes, augment(h, nodes))

    @property
    def single(self) -> int:
        """The node of a leaf or node prediction."""
        if self.kind == SET:
            raise ValueError("set prediction has no single node")
        return self.nodes[0]

    def agrees(self, other: "Prediction") -> bool:
        """Same prediction once both sides are ancestor-augmented."""
        return self.augmented == other.augmented

    def names(self, h: Hierarchy) -> list[str]:
        return [h.names[n] for n in self.nodes]

    def __str__(self):
        return f"{self.kind}{list(self.nodes)}"


def as_node_array(preds) -> np.ndarray:
    """Node ids of a sequence of single-node predictions."""
    return np.fromiter((p.single for p in preds), dtype=np.int64, count=len(preds))
