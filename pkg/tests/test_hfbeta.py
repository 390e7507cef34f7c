import numpy as np
import pytest
from hypothesis import given, strategies as st

from hierdecode import HFBetaContext, aggregate, build_from_edges, decode_hfbeta, delta_table, q_set
from hierdecode.errors import InvalidParam
from hierdecode.metrics import MetricKind
from hierdecode.oracle import ancestor_set, brute_force_set, expected_set_value
from strategies import tree_and_probs

HF1 = MetricKind("hf", 1.0)


def _names(h, ids):
    return sorted(h.names[i] for i in ids)


def test_threshold_example(five):
    assert HFBetaContext(five, 1.0).q_thresholds[0] == pytest.approx(0.25)


def test_q_set_example(five, p_five):
    q = q_set(five, aggregate(five, p_five), 1.0)
    # b has 0.3, above the tree-wide threshold 1/4
    assert _names(five, q) == ["A", "a1", "a2", "b", "r"]


def test_q_set_point_mass(five):
    q = q_set(five, aggregate(five, np.array([0.0, 1.0, 0.0])), 2.0)
    assert _names(five, q) == ["A", "a2", "r"]


def test_delta_value(five, p_five):
    d = delta_table(five, p_five, 1.0, 3)
    assert d[2, five.node("a1")] == pytest.approx(2 * 0.4 / 6)


def test_decode_example(five, p_five):
    res = HFBetaContext(five, 1.0).decode_detail(p_five)
    assert res.prediction.names(five) == ["a1"]
    assert res.utility == pytest.approx(0.72)
    assert expected_set_value(HF1, five, p_five, res.prediction.nodes) == pytest.approx(0.72)
    runner_up = expected_set_value(HF1, five, p_five, (five.node("a1"), five.node("b")))
    assert runner_up == pytest.approx(5 / 7)


def test_point_mass_scores_one(five):
    for beta in (0.5, 1, 2):
        res = HFBetaContext(five, beta).decode_detail(np.array([0.0, 0.0, 1.0]))
        assert res.prediction.names(five) == ["b"]
        assert res.utility == pytest.approx(1.0)


def test_two_leaf_uniform_matches_enumeration():
    h = build_from_edges([("r", "x"), ("r", "y")])
    p = np.array([0.5, 0.5])
    pred = decode_hfbeta(h, p, 1.0)
    best, best_u = brute_force_set(HF1, h, p)
    assert expected_set_value(HF1, h, p, pred.nodes) == pytest.approx(best_u, abs=1e-12)


def test_per_node_threshold_would_drop_the_optimum():
    # b sits at depth one, so a threshold using only its own depth would be 1/3
    h = build_from_edges([("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b"), ("r", "c")])
    p = np.array([0.01, 0.40, 0.30, 0.29])
    best, best_u = brute_force_set(HF1, h, p)
    assert _names(h, best) == ["a2", "b"]
    assert aggregate(h, p)[h.node("b")] < 1 / 3
    res = HFBetaContext(h, 1.0).decode_detail(p)
    assert res.utility == pytest.approx(best_u, abs=1e-12)
    assert res.prediction.names(h) == ["a2", "b"]


def test_lower_bound_needs_the_deepest_leaf():
    edges = [("r", "x")] + [e for i in range(3) for e in (("r", f"A{i}"), (f"A{i}", f"l{i}"))]
    h = build_from_edges(edges)
    p = np.array([0.0, 1 / 3, 1 / 3, 1 / 3])
    _, best_u = brute_force_set(HF1, h, p)
    assert best_u == pytest.approx(0.6)
    shallow = 2 / (1 + (h.min_leaf_depth + 1))
    assert best_u < shallow
    assert best_u >= HFBetaContext(h, 1.0).lower_bound


def test_beta_must_be_positive(five):
    for beta in (0.0, -1.0, float("nan")):
        with pytest.raises(InvalidParam):
            HFBetaContext(five, beta)


@given(tree_and_probs(max_nodes=12), st.sampled_from([0.5, 1.0, 2.0]))
def test_delta_table_matches_direct_sum(hp, beta):
    h, p = hp
    k_max = 4
    got = delta_table(h, p, beta, k_max)
    b2 = beta * beta
    for n in range(h.node_count):
        for k in range(1, k_max + 1):
            direct = sum(p[j] * (1 + b2) / (k + b2 * (h.depth[l] + 1))
                         for j, l in enumerate(h.leaves) if n in ancestor_set(h, int(l)))
            assert got[k - 1, n] == pytest.approx(direct, abs=1e-12)


@given(tree_and_probs(max_nodes=14), st.sampled_from([0.5, 1.0, 2.0]))
def test_matches_exhaustive_search(hp, beta):
    h, p = hp
    kind = MetricKind("hf", beta)
    ctx = HFBetaContext(h, beta)
    res = ctx.decode_detail(p)
    best, best_u = brute_force_set(kind, h, p)
    assert abs(expected_set_value(kind, h, p, res.prediction.nodes) - best_u) <= 1e-12
    assert abs(res.utility - best_u) <= 1e-12
    assert set(best) <= set(res.q.tolist())
    assert len(res.q) <= ctx.n_max
    assert best_u >= ctx.lower_bound - 1e-12


@given(tree_and_probs(max_nodes=30), st.sampled_from([0.5, 1.0, 2.0]))
def test_q_set_is_ancestor_closed(hp, beta):
    h, p = hp
    q = set(q_set(h, aggregate(h, p), beta).tolist())
    assert 0 in q
    assert all(h.parent[n] in q for n in q if n)
