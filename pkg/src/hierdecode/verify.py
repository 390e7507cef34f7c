"""Randomised equivalence checks between fast decoders and brute force."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OracleMismatch
from .hfbeta import HFBetaContext
from .hierarchy import Hierarchy, aggregate, random_tree
from .metrics import CostModel, MetricKind, Orientation, Space
from .node import ReasonableDecoder, compute_thresholds, threshold_nodes
from .oracle import (
    MAX_ENUM_NODES,
    brute_force_node,
    brute_force_set,
    count_antichains,
    expected_set_value,
    phi_roundtrip_check,
    random_reasonable_matrix,
)

__all__ = ["SuiteResult", "NODE_METRICS", "HF_BETAS", "node_suite", "hfbeta_suite",
           "closed_form_suite", "run_all"]

TOL = 1e-12
NODE_METRICS = ("dl", "dlc:0.25", "dlc:0.5", "dlc:1", "wp", "zhao", "random")
HF_BETAS = (0.5, 1.0, 2.0)


@dataclass
class SuiteResult:
    name: str
    trials: int = 0
    failures: list[str] = field(default_factory=list)
    bound_failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not self.bound_failures

    def line(self) -> str:
        status = "ok" if self.ok else "FAILED"
        return (f"{self.name}: {self.trials} trials, {len(self.failures)} mismatches, "
                f"{len(self.bound_failures)} bound violations ({status})")


def _tree(rng, max_nodes, branching=None) -> Hierarchy:
    n = int(rng.integers(3, max_nodes + 1))
    k = int(rng.integers(1, 3)) if branching is None else branching
    return random_tree(n, rng, min_children=k)


def _model(name: str, h: Hierarchy, rng) -> CostModel:
    if name == "random":
        return CostModel.explicit(random_reasonable_matrix(h, rng), h, Orientation.COST)
    from .metrics import parse_metric
    return CostModel.builtin(parse_metric(name), h, Space.NODES)


def node_suite(trials: int, rng, metrics=NODE_METRICS, max_nodes: int = 40) -> SuiteResult:
    """Pruned node decoding against the full brute-force argmin."""
    res = SuiteResult("node")
    for t in range(trials):
        name = metrics[t % len(metrics)]
        # Zhao needs strictly growing information, i.e. no single-child nodes
        h = _tree(rng, max_nodes, 2 if name == "zhao" else None)
        model = _model(name, h, rng)
        th = compute_thresholds(model, h)
        p = rng.dirichlet(np.full(h.leaf_count, float(rng.choice([0.1, 0.5, 1.0]))))
        node, risk, cand = ReasonableDecoder(model, h, thresholds=th).decode_detail(p)
        best, best_risk = brute_force_node(model, h, p)
        res.trials += 1
        if abs(risk - best_risk) > TOL:
            res.failures.append(f"{name}: risk {risk!r} vs brute force {best_risk!r}")
        if best not in set(cand.tolist()) and abs(risk - best_risk) > TOL:
            res.failures.append(f"{name}: optimum {best} missing from candidates")
        if np.any(th.q_min[1:] > th.q_max[1:]):
            res.bound_failures.append(f"{name}: q_min > q_max")
        if th.variant == "strict" and len(cand) > (h.max_depth + 1) / th.q_min_floor:
            res.bound_failures.append(f"{name}: |S|={len(cand)} above bound")
    return res


def hfbeta_suite(trials: int, rng, betas=HF_BETAS, max_nodes: int = 20) -> SuiteResult:
    """Set decoding for hF-beta against exhaustive antichain search."""
    res = SuiteResult("hfbeta")
    for t in range(trials):
        beta = float(betas[t % len(betas)])
        h = _tree(rng, min(max_nodes, MAX_ENUM_NODES))
        p = rng.dirichlet(np.full(h.leaf_count, float(rng.choice([0.1, 0.5, 1.0]))))
        ctx = HFBetaContext(h, beta)
        out = ctx.decode_detail(p)
        kind = MetricKind("hf", beta)
        u = expected_set_value(kind, h, p, out.prediction.nodes)
        best, best_u = brute_force_set(kind, h, p)
        res.trials += 1
        if abs(u - best_u) > TOL:
            res.failures.append(f"beta={beta}: utility {u!r} vs exhaustive {best_u!r}")
        if len(out.q) > ctx.n_max:
            res.bound_failures.append(f"beta={beta}: |Q|={len(out.q)} above {ctx.n_max}")
        if u < ctx.lower_bound - TOL:
            res.bound_failures.append(f"beta={beta}: utility below the root-only bound")
        if not set(best) <= set(out.q.tolist()):
            res.bound_failures.append(f"beta={beta}: optimum outside the pruned set")
    return res


def closed_form_suite(trials: int, rng, cs=(0.0, 0.25, 0.5, 1.0), max_nodes: int = 40) -> SuiteResult:
    """Threshold rule against the pruned decoder for the depth-penalised distance."""
    res = SuiteResult("closed-form")
    for t in range(trials):
        c = float(cs[t % len(cs)])
        h = _tree(rng, max_nodes)
        model = CostModel.builtin(MetricKind("dlc", c), h, Space.NODES)
        p = rng.dirichlet(np.full(h.leaf_count, float(rng.choice([0.1, 0.5, 1.0]))))
        pn = aggregate(h, p)
        a = int(threshold_nodes(h, pn, (1.0 + c) / 2.0)[0])
        b, rb, _ = ReasonableDecoder(model, h).decode_detail(p, pn)
        ra = float(model.risks(p, [a])[0])
        res.trials += 1
        if a != b and abs(ra - rb) > TOL:
            res.failures.append(f"c={c}: threshold rule {a} vs decoder {b}")
    return res


def structure_suite(trials: int, rng, max_nodes: int = 20) -> SuiteResult:
    """Antichain count lower bound and closure bijectivity on small trees."""
    res = SuiteResult("antichains")
    for _ in range(trials):
        h = _tree(rng, min(max_nodes, MAX_ENUM_NODES), 2)
        res.trials += 1
        if count_antichains(h) < 2 ** (h.node_count / 2) - 1:
            res.bound_failures.append(f"{h.node_count} nodes: too few antichains")
        if not phi_roundtrip_check(h):
            res.failures.append(f"{h.node_count} nodes: closure map not bijective")
    return res


def run_all(trials: int, seed=None, strict: bool = True) -> list[SuiteResult]:
    """Run every suite; raise :class:`OracleMismatch` on failure when ``strict``."""
    ss = np.random.SeedSequence(seed)
    r1, r2, r3, r4 = (np.random.default_rng(s) for s in ss.spawn(4))
    results = [node_suite(trials, r1), hfbeta_suite(trials, r2),
               closed_form_suite(trials, r3), structure_suite(max(1, trials // 4), r4)]
    if strict:
        bad = [r for r in results if not r.ok]
        if bad:
            detail = "; ".join(f"{r.name}: {(r.failures + r.bound_failures)[0]}" for r in bad)
            raise OracleMismatch(detail)
    return results
