"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line, shown in the terminal summary
(and printed directly when run with ``-s`` or as a script).
"""
import time

import numpy as np
import pytest

import conftest
from hierdecode import (
    CostModel,
    HFBetaContext,
    agreement_map,
    aggregate,
    balanced_tree,
    brute_force_node,
    build_from_edges,
    compute_thresholds,
    evaluate,
    random_tree,
    read_hierarchy,
    shaped_tree,
    smooth_sweep,
    synth_generate,
)
from hierdecode.cli import main as cli_main
from hierdecode.metrics import MetricKind
from hierdecode.node import ReasonableDecoder, threshold_nodes
from hierdecode.oracle import (
    brute_force_set,
    count_antichains,
    expected_set_value,
    phi_roundtrip_check,
    random_reasonable_matrix,
)

TOL = 1e-12
NODE_METRICS = ("dl", "dlc:0.25", "dlc:0.5", "dlc:1", "wp", "zhao", "random")
DOMINANCE_METRICS = ("dl", "wp", "zhao", "hf:0.5", "hf:1", "hf:2")
HEURISTICS = ("argmax", "topdown", "hie-self", "karthik", "majority", "threshold:0.7",
              "plurality", "darts:0.5", "expinfo")

# bound checks gathered by criteria 1 and 2, judged by criterion 4
_bounds: dict[str, list[str]] = {}


def record(number: int, title: str, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _random_tree(rng, max_nodes, min_children=None):
    k = int(rng.integers(1, 3)) if min_children is None else min_children
    return random_tree(int(rng.integers(3, max_nodes + 1)), rng, min_children=k)


def _dirichlet(rng, k):
    return rng.dirichlet(np.full(k, float(rng.choice([0.1, 0.5, 1.0]))))


def _node_trials(n_trials, seed):
    rng = np.random.default_rng(seed)
    bad, bounds, used = [], [], {m: 0 for m in NODE_METRICS}
    for t in range(n_trials):
        name = NODE_METRICS[t % len(NODE_METRICS)]
        # Zhao is reasonable only without single-child nodes
        h = _random_tree(rng, 40, 2 if name == "zhao" else None)
        if name == "random":
            model = CostModel.explicit(random_reasonable_matrix(h, rng), h, "cost")
        else:
            model = CostModel.builtin(name, h)
        th = compute_thresholds(model, h)
        p = _dirichlet(rng, h.leaf_count)
        _, risk, cand = ReasonableDecoder(model, h, thresholds=th).decode_detail(p)
        _, best = brute_force_node(model, h, p)
        used[name] += 1
        if abs(risk - best) > TOL:
            bad.append(f"{name}: {risk!r} vs {best!r}")
        if np.any(th.q_min[1:] > th.q_max[1:]):
            bounds.append(f"{name}: q_min > q_max")
        if len(cand) > (h.max_depth + 1) / th.q_min_floor:
            bounds.append(f"{name} ({th.variant}): |S| = {len(cand)} above (d_max+1)/floor")
    return bad, bounds, used


def test_criterion_1_node_decoder_matches_brute_force():
    t0 = time.perf_counter()
    bad, bounds, used = _node_trials(210, seed=101)
    elapsed = time.perf_counter() - t0
    _bounds["node"] = bounds
    n = sum(used.values())
    ok = not bad and n >= 200 and used["random"] >= 20 and elapsed < 30
    record(1, "node decoder vs brute force", ok,
           f"{n} instances ({used['random']} random matrices), {len(bad)} mismatches "
           f"above {TOL:g}, {elapsed:.1f} s (limit 30 s)")


def test_criterion_2_hfbeta_matches_exhaustive_search():
    rng = np.random.default_rng(202)
    bad, bounds = [], []
    t0 = time.perf_counter()
    n = 210
    for t in range(n):
        beta = (0.5, 1.0, 2.0)[t % 3]
        h = _random_tree(rng, 20)
        p = _dirichlet(rng, h.leaf_count)
        kind = MetricKind("hf", beta)
        ctx = HFBetaContext(h, beta)
        res = ctx.decode_detail(p)
        u = expected_set_value(kind, h, p, res.prediction.nodes)
        _, best = brute_force_set(kind, h, p)
        if abs(u - best) > TOL:
            bad.append(f"beta={beta}: {u!r} vs {best!r}")
        if len(res.q) > (1 + beta**2 * (h.max_depth + 1)) * (h.max_depth + 1):
            bounds.append(f"beta={beta}: |Q| = {len(res.q)}")
        if best < (1 + beta**2) / (1 + beta**2 * (h.max_depth + 1)) - TOL:
            bounds.append(f"beta={beta}: optimum {best} below the root-only bound")
    elapsed = time.perf_counter() - t0
    _bounds["hfbeta"] = bounds
    record(2, "hF-beta decoder vs exhaustive search", not bad and elapsed < 60,
           f"{n} instances, {len(bad)} mismatches above {TOL:g}, {elapsed:.1f} s (limit 60 s)")


def test_criterion_3_closed_form_equals_decoder():
    rng = np.random.default_rng(303)
    bad, n = [], 1000
    for t in range(n):
        c = (0.0, 0.25, 0.5, 1.0)[t % 4]
        h = _random_tree(rng, 40)
        model = CostModel.builtin(MetricKind("dlc", c), h)
        p = _dirichlet(rng, h.leaf_count)
        pn = aggregate(h, p)
        a = int(threshold_nodes(h, pn, (1 + c) / 2)[0])
        b, rb, _ = ReasonableDecoder(model, h).decode_detail(p, pn)
        ra = float(model.risks(p, [a])[0])
        # a different node is acceptable only at equal risk
        if a != b and abs(ra - rb) > TOL:
            bad.append(f"c={c}: node {a} risk {ra!r} vs {b} risk {rb!r}")
    record(3, "closed-form threshold rule", not bad, f"{n} instances, {len(bad)} mismatches")


def test_criterion_4_bounds_hold():
    node = _bounds.get("node")
    hf = _bounds.get("hfbeta")
    if node is None:
        node = _node_trials(210, seed=101)[1]
    if hf is None:
        pytest.fail("criterion 2 must run first to collect hF-beta bound checks")
    rng = np.random.default_rng(404)
    trees = [_random_tree(rng, 20, 2) for _ in range(100)]
    trees += [_random_tree(rng, 20, 1) for _ in range(100)]
    count_bad = [h.node_count for h in trees[:100]
                 if count_antichains(h) < 2 ** (h.node_count / 2) - 1]
    phi_bad = [h.node_count for h in trees if not phi_roundtrip_check(h)]
    problems = node + hf + [f"antichain count, {n} nodes" for n in count_bad] \
        + [f"closure roundtrip, {n} nodes" for n in phi_bad]
    record(4, "structural bounds", not problems,
           f"q_min <= q_max and |S| bound on 210 node trials, |Q| and utility bounds on 210 "
           f"hF trials, antichain count on 100 trees, roundtrip on 200 trees; "
           f"{len(problems)} violations" + (f" (first: {problems[0]})" if problems else ""))


@pytest.fixture(scope="module")
def dominance_setup():
    h = shaped_tree(80, 50, 6, seed=5)
    return h, {alpha: synth_generate(h, 20_000, alpha, seed=11) for alpha in (0.1, 1.0)}


def test_criterion_5_optimal_dominates_heuristics(dominance_setup):
    h, data = dominance_setup
    worst, fails = None, []
    for alpha, ds in data.items():
        for metric in DOMINANCE_METRICS:
            rep = evaluate(ds, metric, ("optimal",) + HEURISTICS)
            sign = -1.0 if rep.orientation == "gain" else 1.0
            opt = rep.scores["optimal"]
            for name in HEURISTICS:
                # paired per-sample difference; positive means the heuristic is better
                diff = sign * (opt - rep.scores[name])
                se = diff.std(ddof=1) / np.sqrt(len(diff))
                if se > 0:
                    z = diff.mean() / se
                else:
                    z = 0.0 if diff.mean() == 0 else float(np.copysign(np.inf, diff.mean()))
                if worst is None or z > worst[0]:
                    worst = (z, metric, name, alpha)
                if diff.mean() > 3 * se:
                    fails.append(f"{name} beats optimal on {metric} at alpha={alpha}")
    z, metric, name, alpha = worst
    record(5, "optimal decoders dominate heuristics", not fails,
           f"{len(HEURISTICS)} heuristics x {len(DOMINANCE_METRICS)} metrics x 2 alphas, N = 20000, "
           f"{len(fails)} heuristics ahead by more than 3 SE; closest: {name} on {metric} at "
           f"alpha={alpha}, z = {z:.2f}")


def test_criterion_6_sweep_gap_grows(dominance_setup):
    h, data = dominance_setup
    sw = smooth_sweep(data[1.0], "hf:1", ["argmax"], [0.0, 0.75], seed=12)
    a, b = sw.get(0.0, "argmax"), sw.get(0.75, "argmax")
    se = float(np.hypot(a.gap_se, b.gap_se))
    ok = b.gap_pct - a.gap_pct >= 3 * se
    record(6, "argmax gap grows with smoothing", ok,
           f"hF1 gap {a.gap_pct:.2f}% at lambda 0, {b.gap_pct:.2f}% at lambda 0.75, "
           f"difference {b.gap_pct - a.gap_pct:.2f} vs 3 SE = {3 * se:.2f}")


def test_criterion_7_agreement_map():
    h = build_from_edges([("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b")])
    g = agreement_map(h, "optimal", "majority", 200, "hf:1")
    again = agreement_map(h, "optimal", "majority", 200, "hf:1")
    corners = [k for k, (i, j) in enumerate(g.index) if i == 200 or j == 200 or i + j == 0]
    stable = g.to_csv() == again.to_csv() and g.to_ppm() == again.to_ppm()
    ok = 0 < g.fraction < 1 and len(corners) == 3 and all(g.agree[corners]) and stable
    record(7, "hF1-optimal vs majority agreement map", ok,
           f"agreement {g.fraction:.4f} over {len(g.agree)} points, vertices agree: "
           f"{bool(all(g.agree[corners]))}, byte-stable: {stable}")


def test_criterion_8_speed():
    h = balanced_tree(3, 8)
    model = CostModel.builtin("dl", h)
    costs = model.cost_matrix()
    dec = ReasonableDecoder(model, h)
    ctx = HFBetaContext(h, 1.0)
    rng = np.random.default_rng(808)
    probs = rng.dirichlet(np.ones(h.leaf_count), size=30)
    fast, brute, hf = [], [], []
    for p in probs:
        t0 = time.perf_counter()
        n_fast = dec.decode(p)
        t1 = time.perf_counter()
        n_brute, _ = brute_force_node(model, h, p, costs=costs)
        t2 = time.perf_counter()
        ctx.decode(p)
        t3 = time.perf_counter()
        fast.append(t1 - t0)
        brute.append(t2 - t1)
        hf.append(t3 - t2)
        assert model.risks(p, [n_fast])[0] == pytest.approx(model.risks(p, [n_brute])[0], abs=TOL)
    speedup = np.mean(brute) / np.mean(fast)
    hf_ms = 1e3 * np.mean(hf)
    record(8, "decoding speed on a 9841-node tree", speedup >= 5 and hf_ms < 100,
           f"node decoder {1e3 * np.mean(fast):.3f} ms vs brute force {1e3 * np.mean(brute):.3f} ms "
           f"({speedup:.0f}x, need 5x); hF1 {hf_ms:.2f} ms/sample (limit 100 ms)")


def test_criterion_9_tiered_shape_ingestion(tmp_path, capsys):
    hier = str(conftest.DATA / "tiered_shape.tsv")
    h = read_hierarchy(hier)
    shape = (h.node_count, h.leaf_count, h.max_depth)
    probs, labels = tmp_path / "rows.csv", tmp_path / "rows.labels"
    codes = [
        cli_main(["validate", "--hierarchy", hier, "--metric", "dl"]),
        cli_main(["synth", "--hierarchy", hier, "--n", "100", "--seed", "9", "--output", str(probs)]),
    ]
    capsys.readouterr()
    codes.append(cli_main(["decode", "--hierarchy", hier, "--probs", str(probs), "--metric", "hf:1"]))
    decoded = capsys.readouterr().out.splitlines()
    codes.append(cli_main(["eval", "--hierarchy", hier, "--probs", str(probs), "--labels", str(labels),
                           "--metric", "dl", "--decoders", "optimal,argmax,majority"]))
    report = capsys.readouterr().out
    ok = shape == (843, 608, 12) and codes == [0, 0, 0, 0] and len(decoded) == 100 \
        and "optimal" in report
    record(9, "843-node hierarchy ingestion", ok,
           f"shape {shape}, exit codes {codes}, {len(decoded)} decoded rows")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
