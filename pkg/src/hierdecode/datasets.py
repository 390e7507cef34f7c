"""Probability/label datasets: file I/O and synthetic generation."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    FormatError,
    InvalidAlpha,
    InvalidDistribution,
    LengthMismatch,
    UnknownLabel,
)
from .hierarchy import STOP_SUFFIX, Hierarchy, augment_with_stop_nodes, check_distribution, read_hierarchy

__all__ = ["Dataset", "load_dataset", "save_dataset", "synth_generate", "sample_labels",
           "apply_stop_nodes"]


@dataclass(frozen=True)
class Dataset:
    """``probs`` is ``(N, |L|)`` in leaf order; ``labels`` holds leaf node ids."""

    hierarchy: Hierarchy
    probs: np.ndarray
    labels: np.ndarray | None = None

    def __len__(self):
        return len(self.probs)

    @property
    def has_labels(self) -> bool:
        return self.labels is not None


def apply_stop_nodes(h: Hierarchy, which: str | None) -> Hierarchy:
    """Augment ``h`` per a ``--add-stop-nodes`` value: ``all`` or ``A,B,...``."""
    if not which:
        return h
    if which.strip() == "all":
        nodes = [n for n in range(h.node_count) if not h.is_leaf[n]]
    else:
        nodes = [h.node(s.strip()) for s in which.split(",") if s.strip()]
    return augment_with_stop_nodes(h, nodes)


def _read_probs(h: Hierarchy, path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = [s.strip() for s in next(reader)]
        except StopIteration:
            raise FormatError("probability file is empty", line=1) from None
        want = h.leaf_names
        if header == want:
            perm = None
        elif sorted(header) == sorted(want) and len(set(header)) == len(header):
            col = {s: i for i, s in enumerate(header)}
            perm = np.array([col[s] for s in want])
        else:
            raise DimensionMismatch(
                f"header has {len(header)} columns that do not match the {len(want)} leaves")
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row or all(not s.strip() for s in row):
                continue
            if len(row) != len(header):
                raise DimensionMismatch(
                    f"line {lineno}: {len(row)} values, expected {len(header)}")
            try:
                rows.append([float(s) for s in row])
            except ValueError:
                raise FormatError("non-numeric probability", line=lineno) from None
    probs = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    if perm is not None:
        probs = probs[:, perm]
    for i in range(len(probs)):
        try:
            probs[i] = check_distribution(h, probs[i])
        except (InvalidDistribution, LengthMismatch) as e:
            raise FormatError(f"row {i}: {e}", line=i + 2) from None
    return probs


def _read_labels(h: Hierarchy, path) -> np.ndarray:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            name = line.strip()
            if not name:
                continue
            try:
                n = h.node(name)
            except KeyError:
                raise UnknownLabel(f"unknown label {name!r}") from None
            if not h.is_leaf[n]:
                stop = name + STOP_SUFFIX
                if stop in h._index:
                    n = h.node(stop)
                else:
                    raise UnknownLabel(f"label {name!r} is not a leaf")
            out.append(n)
    return np.array(out, dtype=np.int64)


def load_dataset(hier_path, probs_path, labels_path=None, stop_nodes: str | None = None) -> Dataset:
    """Read a hierarchy, a probability CSV and an optional label file.

    The CSV header names the leaves; columns are reordered to the hierarchy
    leaf order when needed. Labels are leaf names, one per line; with stop
    nodes, a label naming an augmented internal node maps to its stop leaf.
    """
    h = apply_stop_nodes(read_hierarchy(hier_path), stop_nodes)
    probs = _read_probs(h, probs_path)
    labels = None
    if labels_path is not None:
        labels = _read_labels(h, labels_path)
        if len(labels) != len(probs):
            raise DimensionMismatch(f"{len(labels)} labels for {len(probs)} rows")
    return Dataset(h, probs, labels)


def save_dataset(ds: Dataset, probs_path, labels_path=None) -> None:
    h = ds.hierarchy
    with open(probs_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(h.leaf_names)
        for row in ds.probs:
            w.writerow([repr(float(x)) for x in row])
    if labels_path is not None and ds.labels is not None:
        with open(labels_path, "w", encoding="utf-8", newline="\n") as f:
            for n in ds.labels:
                f.write(h.names[n] + "\n")


def sample_labels(h: Hierarchy, probs, rng) -> np.ndarray:
    """Draw one leaf per row from that row's distribution."""
    probs = np.atleast_2d(probs)
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(len(probs)) * cdf[:, -1]
    idx = (cdf <= u[:, None]).sum(axis=1)
    # rounding can push past the last leaf with mass
    last = probs.shape[1] - 1 - np.argmax(probs[:, ::-1] > 0, axis=1)
    idx = np.minimum(idx, last)
    return h.leaves[idx]


def synth_generate(h: Hierarchy, n: int, alpha: float, seed=None) -> Dataset:
    """Rows from a symmetric Dirichlet(alpha); each label drawn from its own row."""
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha <= 0:
        raise InvalidAlpha(f"alpha must be positive, got {alpha}")
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.full(h.leaf_count, alpha), size=n)
    probs = check_distribution(h, probs)
    labels = sample_labels(h, probs, rng)
    return Dataset(h, probs, labels)
