"""Decoder factory, empirical evaluation, smoothing sweeps, agreement maps and timing."""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .datasets import Dataset, sample_labels
from .errors import InvalidLambda, InvalidParam, MissingLabels, NotReasonable, SpaceMismatch, WrongLeafCount
from .heuristics import HEURISTIC_NAMES, heuristic_nodes, parse_heuristic
from .hfbeta import HFBetaContext
from .hierarchy import Hierarchy, aggregate, check_distribution
from .metrics import CostModel, MetricKind, Orientation, Space, parse_metric, score_nodes, score_sets
from .node import ReasonableDecoder, _bayes_leaf_index
from .prediction import SET, Prediction

__all__ = [
    "Decoder",
    "make_decoder",
    "EvalRow",
    "EvalReport",
    "evaluate",
    "SweepReport",
    "smooth_sweep",
    "AgreementGrid",
    "agreement_map",
    "BenchReport",
    "bench",
    "format_table",
]


# -- decoders -------------------------------------------------------------------

class Decoder:
    """Maps a batch of leaf distributions to predictions.

    ``predict`` returns an array of node ids for single-node decoders
    (``kind`` is ``"leaf"`` or ``"node"``) and a list of set predictions for
    ``kind == "set"``.
    """

    kind = "node"

    def __init__(self, name: str, h: Hierarchy):
        self.name = name
        self.h = h
        self.last_sizes: list[int] = []

    def predict_one(self, p_leaves, p_nodes):
        raise NotImplementedError

    def predict(self, probs, p_nodes=None, threads: int = 1):
        probs = np.atleast_2d(probs)
        if p_nodes is None:
            p_nodes = aggregate(self.h, probs)
        return self._batch(probs, np.atleast_2d(p_nodes), threads)

    def _batch(self, probs, p_nodes, threads):
        idx = range(len(probs))
        if threads > 1 and len(probs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                out = list(pool.map(lambda i: self.predict_one(probs[i], p_nodes[i]), idx))
        else:
            out = [self.predict_one(probs[i], p_nodes[i]) for i in idx]
        if self.kind == SET:
            return out
        return np.array(out, dtype=np.int64)

    def as_prediction(self, value) -> Prediction:
        if self.kind == SET:
            return value
        if self.kind == "leaf":
            return Prediction.leaf(self.h, int(value))
        return Prediction.node(self.h, int(value))


class HeuristicDecoder(Decoder):
    def __init__(self, name, h):
        super().__init__(name, h)
        self.heuristic = parse_heuristic(name)
        self.kind = "leaf" if self.heuristic.returns_leaf else "node"
        self._cache: dict = {}

    def predict_one(self, p_leaves, p_nodes):
        return int(heuristic_nodes(self.heuristic, self.h, p_leaves[None], p_nodes[None],
                                   self._cache)[0])

    def _batch(self, probs, p_nodes, threads):
        return heuristic_nodes(self.heuristic, self.h, probs, p_nodes, self._cache)


class NodeOptimalDecoder(Decoder):
    """Pruned risk minimiser for a hierarchically reasonable node metric."""

    def __init__(self, name, h, model: CostModel, variant=None):
        super().__init__(name, h)
        self.model = model
        self.inner = ReasonableDecoder(model, h, variant)

    @property
    def thresholds(self):
        return self.inner.thresholds

    def predict_one(self, p_leaves, p_nodes):
        node, _, cand = self.inner.decode_detail(p_leaves, p_nodes)
        self.last_sizes.append(len(cand))
        return node


class BruteNodeDecoder(Decoder):
    """Argmin over the full materialised cost matrix."""

    def __init__(self, name, h, model: CostModel):
        super().__init__(name, h)
        self.costs = model.cost_matrix()

    def predict_one(self, p_leaves, p_nodes):
        return int(np.argmin(self.costs @ p_leaves))

    def _batch(self, probs, p_nodes, threads):
        if threads > 1:
            return super()._batch(probs, p_nodes, threads)
        return np.argmin(probs @ self.costs.T, axis=1)


class LeafBayesDecoder(Decoder):
    kind = "leaf"

    def __init__(self, name, h, model: CostModel):
        super().__init__(name, h)
        self.model = model

    def predict_one(self, p_leaves, p_nodes):
        return int(self.h.leaves[_bayes_leaf_index(self.model, p_leaves)])


class HFBetaDecoder(Decoder):
    kind = SET

    def __init__(self, name, h, beta):
        super().__init__(name, h)
        self.ctx = HFBetaContext(h, beta)

    def predict_one(self, p_leaves, p_nodes):
        res = self.ctx.decode_detail(p_leaves, p_nodes)
        self.last_sizes.append(len(res.q))
        return res.prediction


def _optimal_for(metric: MetricKind, h: Hierarchy, name: str) -> Decoder:
    t = metric.tag
    if t == "hf":
        return HFBetaDecoder(name, h, metric.param)
    if t in ("top1", "eta_lca"):
        return LeafBayesDecoder(name, h, CostModel.builtin(metric, h, Space.LEAVES))
    model = CostModel.builtin(metric, h, Space.NODES)
    try:
        return NodeOptimalDecoder(name, h, model)
    except NotReasonable as e:
        raise SpaceMismatch(
            f"no optimal decoder for {metric.name} on this hierarchy: {e}") from None


def make_decoder(name: str, h: Hierarchy, metric: MetricKind | str | None = None) -> Decoder:
    """Build a decoder from its command-line name.

    Heuristic names (``argmax``, ``threshold:0.7`` ...), ``optimal`` (the
    optimum for ``metric``), ``opt:<metric>`` (the optimum for another
    metric) and ``brute:<metric>`` (full-matrix node argmin).
    """
    if isinstance(metric, str):
        metric = parse_metric(metric)
    base, _, arg = name.partition(":")
    if base in HEURISTIC_NAMES:
        return HeuristicDecoder(name, h)
    if base == "optimal":
        if metric is None:
            raise InvalidParam("'optimal' needs a metric")
        return _optimal_for(metric, h, name)
    if base == "opt" and arg:
        return _optimal_for(parse_metric(arg), h, name)
    if base == "brute" and arg:
        return BruteNodeDecoder(name, h, CostModel.builtin(parse_metric(arg), h, Space.NODES))
    raise InvalidParam(f"unknown decoder {name!r}")


# -- scoring ----------------------------------------------------------------------

def score_predictions(metric: MetricKind, h: Hierarchy, dec: Decoder, preds, labels) -> np.ndarray:
    """Natural-orientation score of each prediction against its label."""
    model = CostModel.builtin(metric, h, Space.NODESETS if metric.set_valued else Space.NODES)
    if dec.kind == SET:
        return score_sets(model, h, preds, labels)
    return score_nodes(model, h, preds, labels)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = len(x)
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, se


@dataclass
class EvalRow:
    decoder: str
    mean: float
    se: float
    n: int
    time_us: float
    se_undefined: bool = False


@dataclass
class EvalReport:
    metric: str
    orientation: str
    rows: list[EvalRow]
    scores: dict = field(default_factory=dict, repr=False)

    def row(self, decoder: str) -> EvalRow:
        for r in self.rows:
            if r.decoder == decoder:
                return r
        raise KeyError(decoder)

    def to_json(self) -> str:
        return json.dumps({"metric": self.metric, "orientation": self.orientation,
                           "rows": [asdict(r) for r in self.rows]}, indent=2)

    def to_text(self) -> str:
        head = ["decoder", "mean", "se", "n", "us/sample"]
        body = [[r.decoder, f"{r.mean:.6f}", f"{r.se:.6f}" + (" (n=1)" if r.se_undefined else ""),
                 str(r.n), f"{r.time_us:.1f}"] for r in self.rows]
        return f"metric: {self.metric} ({self.orientation})\n" + format_table(head, body)


def _check_decoders(decoders, h, metric):
    out = []
    for d in decoders:
        dec = make_decoder(d, h, metric) if isinstance(d, str) else d
        if dec.kind == SET and not metric.set_valued:
            raise SpaceMismatch(f"decoder {dec.name} returns sets; {metric.name} scores single nodes")
        out.append(dec)
    return out


def evaluate(ds: Dataset, metric: MetricKind | str, decoders, threads: int = 1) -> EvalReport:
    """Empirical mean score of every decoder over the labelled dataset."""
    if isinstance(metric, str):
        metric = parse_metric(metric)
    if not ds.has_labels:
        raise MissingLabels("evaluation needs labels")
    h = ds.hierarchy
    decs = _check_decoders(decoders, h, metric)
    p_nodes = aggregate(h, ds.probs)
    rows, scores = [], {}
    for dec in decs:
        t0 = time.perf_counter()
        preds = dec.predict(ds.probs, p_nodes, threads)
        elapsed = time.perf_counter() - t0
        s = score_predictions(metric, h, dec, preds, ds.labels)
        mean, se = _mean_se(s)
        rows.append(EvalRow(dec.name, mean, se, len(s), 1e6 * elapsed / len(s), len(s) == 1))
        scores[dec.name] = s
    return EvalReport(metric.name, metric.orientation.value, rows, scores)


# -- smoothing sweep --------------------------------------------------------------

@dataclass
class SweepPoint:
    lam: float
    decoder: str
    mean: float
    se: float
    gap_pct: float
    gap_se: float


@dataclass
class SweepReport:
    metric: str
    orientation: str
    reference: str
    points: list[SweepPoint]

    def get(self, lam: float, decoder: str) -> SweepPoint:
        for p in self.points:
            if p.lam == lam and p.decoder == decoder:
                return p
        raise KeyError((lam, decoder))

    def to_json(self) -> str:
        return json.dumps({"metric": self.metric, "orientation": self.orientation,
                           "reference": self.reference,
                           "points": [asdict(p) for p in self.points]}, indent=2)

    def to_text(self) -> str:
        head = ["lambda", "decoder", "mean", "se", "gap %", "gap se"]
        body = [[f"{p.lam:g}", p.decoder, f"{p.mean:.6f}", f"{p.se:.6f}",
                 f"{p.gap_pct:.3f}", f"{p.gap_se:.3f}"] for p in self.points]
        return (f"metric: {self.metric} ({self.orientation}), reference: {self.reference}\n"
                + format_table(head, body))


def smooth_sweep(ds: Dataset, metric: MetricKind | str, decoders, lambdas, seed=None,
                 resample_labels: bool = True, threads: int = 1) -> SweepReport:
    """Evaluate on rows mixed toward uniform: ``(1 - lam) * p + lam / |L|``.

    With ``resample_labels`` every smoothed row gets a fresh label drawn
    from itself (rows with ``lam == 0`` keep their labels). The optimal
    decoder for ``metric`` is always evaluated and is the gap reference.
    """
    if isinstance(metric, str):
        metric = parse_metric(metric)
    lambdas = [float(x) for x in lambdas]
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise InvalidLambda(f"smoothing weight must lie in [0, 1], got {lam}")
    if not ds.has_labels:
        raise MissingLabels("sweeps need labels")
    names = [d if isinstance(d, str) else d.name for d in decoders]
    if "optimal" not in names:
        names = ["optimal"] + names
    h = ds.hierarchy
    decs = _check_decoders(names, h, metric)
    sign = -1.0 if metric.orientation is Orientation.GAIN else 1.0
    points = []
    ss = np.random.SeedSequence(seed)
    for lam, child in zip(lambdas, ss.spawn(len(lambdas))):
        probs = ds.probs if lam == 0 else (1.0 - lam) * ds.probs + lam / h.leaf_count
        labels = ds.labels
        if lam > 0 and resample_labels:
            labels = sample_labels(h, probs, np.random.default_rng(child))
        report = evaluate(Dataset(h, probs, labels), metric, decs, threads)
        ref = report.scores["optimal"]
        ref_mean = float(np.mean(ref))
        for r in report.rows:
            diff = sign * (report.scores[r.decoder] - ref)  # >= 0 means worse than optimal
            dmean, dse = _mean_se(diff)
            if ref_mean != 0:
                gap, gap_se = 100.0 * dmean / abs(ref_mean), 100.0 * dse / abs(ref_mean)
            else:
                gap, gap_se = float("nan"), float("nan")
            points.append(SweepPoint(lam, r.decoder, r.mean, r.se, gap, gap_se))
    return SweepReport(metric.name, metric.orientation.value, "optimal", points)


# -- agreement maps -----------------------------------------------------------------

@dataclass
class AgreementGrid:
    resolution: int
    points: np.ndarray          # (M, 3) barycentric coordinates
    index: np.ndarray           # (M, 2) integer (i, j) with p = (i, j, R - i - j) / R
    pred_a: list[str]
    pred_b: list[str]
    agree: np.ndarray

    @property
    def fraction(self) -> float:
        return float(np.mean(self.agree))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p1", "p2", "p3", "pred_a", "pred_b", "agree"])
        for (i, j), a, b, g in zip(self.index, self.pred_a, self.pred_b, self.agree):
            r = self.resolution
            w.writerow([_frac(i, r), _frac(j, r), _frac(r - i - j, r), a, b, int(g)])
        return buf.getvalue()

    def to_ppm(self) -> str:
        """Plain-text P3 raster; row ``i``, column ``j``; cells outside the simplex are white."""
        r = self.resolution
        img = np.full((r + 1, r + 1, 3), 255, dtype=np.int64)
        for (i, j), g in zip(self.index, self.agree):
            img[i, j] = (40, 160, 60) if g else (200, 40, 40)
        lines = ["P3", f"{r + 1} {r + 1}", "255"]
        lines += [" ".join(f"{v[0]} {v[1]} {v[2]}" for v in row) for row in img]
        return "\n".join(lines) + "\n"


def _frac(i, r) -> str:
    return repr(int(i) / int(r))


def _pred_names(h: Hierarchy, pr: Prediction) -> str:
    return " ".join(h.names[n] for n in pr.nodes)


def agreement_map(h: Hierarchy, decoder_a, decoder_b, resolution: int,
                  metric: MetricKind | str | None = None) -> AgreementGrid:
    """Compare two decoders over a barycentric grid of the 3-leaf simplex."""
    if h.leaf_count != 3:
        raise WrongLeafCount(f"agreement maps need exactly 3 leaves, got {h.leaf_count}")
    if resolution < 1:
        raise InvalidParam("resolution must be at least 1")
    r = int(resolution)
    index = np.array([(i, j) for i in range(r, -1, -1) for j in range(r - i, -1, -1)],
                     dtype=np.int64)
    pts = np.column_stack((index[:, 0], index[:, 1], r - index[:, 0] - index[:, 1])) / r
    probs = check_distribution(h, pts)
    p_nodes = aggregate(h, probs)
    preds = []
    for d in (decoder_a, decoder_b):
        dec = make_decoder(d, h, metric) if isinstance(d, str) else d
        raw = dec.predict(probs, p_nodes)
        preds.append([dec.as_prediction(v) for v in raw])
    agree = np.array([a.agrees(b) for a, b in zip(*preds)], dtype=bool)
    return AgreementGrid(r, pts, index, [_pred_names(h, p) for p in preds[0]],
                         [_pred_names(h, p) for p in preds[1]], agree)


# -- benchmarks ------------------------------------------------------------------------

@dataclass
class BenchReport:
    decoder: str
    metric: str
    n_samples: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    mean_candidates: float | None = None
    candidate_bound: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def to_text(self) -> str:
        head = ["decoder", "metric", "n", "mean ms", "median ms", "p95 ms", "mean |S|/|Q|", "bound"]
        row = [self.decoder, self.metric, str(self.n_samples), f"{self.mean_ms:.4f}",
               f"{self.median_ms:.4f}", f"{self.p95_ms:.4f}",
               "-" if self.mean_candidates is None else f"{self.mean_candidates:.2f}",
               "-" if self.candidate_bound is None else f"{self.candidate_bound:.2f}"]
        return format_table(head, [row])


def bench(h: Hierarchy, metric: MetricKind | str, decoder, n_samples: int, seed=None,
          alpha: float = 1.0) -> BenchReport:
    """Per-sample decoding time over Dirichlet draws (setup excluded)."""
    if isinstance(metric, str):
        metric = parse_metric(metric)
    dec = make_decoder(decoder, h, metric) if isinstance(decoder, str) else decoder
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.full(h.leaf_count, alpha), size=n_samples)
    times = np.empty(n_samples)
    dec.last_sizes = []
    for i in range(n_samples):
        t0 = time.perf_counter()
        p_nodes = aggregate(h, probs[i])
        dec.predict_one(probs[i], p_nodes)
        times[i] = time.perf_counter() - t0
    ms = 1e3 * times
    sizes = dec.last_sizes
    mean_c = float(np.mean(sizes)) if sizes else None
    bound = None
    if isinstance(dec, NodeOptimalDecoder):
        bound = float(dec.thresholds.size_bound(h))
    elif isinstance(dec, HFBetaDecoder):
        bound = float(dec.ctx.n_max)
    return BenchReport(dec.name, metric.name, n_samples, float(ms.mean()),
                       float(np.median(ms)), float(np.percentile(ms, 95)), mean_c, bound)


def format_table(head: list[str], body: list[list[str]]) -> str:
    """Left-aligned text columns separated by two spaces."""
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
             for row in [head, *body]]
    return "\n".join(lines) + "\n"
