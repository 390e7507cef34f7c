import json

import numpy as np
import pytest

from hierdecode import (
    CostModel,
    agreement_map,
    bench,
    build_from_edges,
    evaluate,
    make_decoder,
    smooth_sweep,
    synth_generate,
)
from hierdecode.datasets import Dataset
from hierdecode.errors import InvalidLambda, InvalidParam, MissingLabels, SpaceMismatch, WrongLeafCount
from hierdecode.oracle import brute_force_node, direct_value


@pytest.fixture
def small(five):
    return synth_generate(five, 200, 0.5, seed=1)


def test_mean_and_se_match_direct_scores(small, five):
    rep = evaluate(small, "dl", ["argmax", "optimal"])
    preds = [int(np.argmax(p)) for p in small.probs]
    scores = np.array([direct_value("dl", five, int(five.leaves[j]), int(y))
                       for j, y in zip(preds, small.labels)])
    row = rep.row("argmax")
    assert row.mean == pytest.approx(scores.mean())
    assert row.se == pytest.approx(scores.std(ddof=1) / np.sqrt(len(scores)))
    assert row.n == 200


def test_optimal_rows_equal_brute_force(small, five):
    rep = evaluate(small, "dl", ["optimal"])
    model = CostModel.builtin("dl", five)
    want = [direct_value("dl", five, brute_force_node(model, five, p)[0], int(y))
            for p, y in zip(small.probs, small.labels)]
    assert rep.scores["optimal"].tolist() == pytest.approx(want)


def test_single_sample_marks_se(five):
    ds = synth_generate(five, 1, 1.0, seed=0)
    row = evaluate(ds, "wp", ["argmax"]).rows[0]
    assert row.se == 0.0 and row.se_undefined


def test_threads_do_not_change_results(five):
    ds = synth_generate(five, 300, 1.0, seed=2)
    a = evaluate(ds, "hf:1", ["optimal", "majority"], threads=1)
    b = evaluate(ds, "hf:1", ["optimal", "majority"], threads=3)
    for name in ("optimal", "majority"):
        assert np.array_equal(a.scores[name], b.scores[name])


def test_needs_labels(five):
    ds = Dataset(five, np.full((2, 3), 1 / 3))
    with pytest.raises(MissingLabels):
        evaluate(ds, "dl", ["argmax"])


def test_set_decoder_on_node_metric(small):
    with pytest.raises(SpaceMismatch):
        evaluate(small, "dl", ["opt:hf:1"])


def test_unknown_decoder(five):
    with pytest.raises(InvalidParam):
        make_decoder("bogus", five, "dl")
    with pytest.raises(InvalidParam):
        make_decoder("optimal", five)


def test_report_json(small):
    rep = evaluate(small, "zhao", ["argmax", "expinfo"])
    data = json.loads(rep.to_json())
    assert data["orientation"] == "gain"
    assert [r["decoder"] for r in data["rows"]] == ["argmax", "expinfo"]
    assert "argmax" in rep.to_text()


def test_sweep_lambda_zero_is_plain_evaluation(small):
    sw = smooth_sweep(small, "dl", ["argmax"], [0.0, 0.5], seed=3)
    rep = evaluate(small, "dl", ["optimal", "argmax"])
    assert sw.get(0.0, "argmax").mean == pytest.approx(rep.row("argmax").mean)
    diff = rep.scores["argmax"] - rep.scores["optimal"]
    assert sw.get(0.0, "argmax").gap_pct == pytest.approx(100 * diff.mean() / rep.row("optimal").mean)
    assert sw.get(0.0, "optimal").gap_pct == 0.0


def test_sweep_seeded(small):
    a = smooth_sweep(small, "wp", ["argmax"], [0.25, 0.75], seed=5)
    b = smooth_sweep(small, "wp", ["argmax"], [0.25, 0.75], seed=5)
    assert a.to_json() == b.to_json()


def test_sweep_rejects_lambda(small):
    with pytest.raises(InvalidLambda):
        smooth_sweep(small, "dl", ["argmax"], [1.5])


def test_agreement_grid(five):
    g = agreement_map(five, "optimal", "majority", 20, "hf:1")
    assert len(g.agree) == 21 * 22 // 2
    vertices = [k for k, (i, j) in enumerate(g.index) if 20 in (i, j) or i + j == 0]
    assert len(vertices) == 3 and all(g.agree[k] for k in vertices)
    assert g.to_csv().splitlines()[0] == "p1,p2,p3,pred_a,pred_b,agree"
    assert g.to_csv() == agreement_map(five, "optimal", "majority", 20, "hf:1").to_csv()
    ppm = g.to_ppm().split("\n")
    assert ppm[:3] == ["P3", "21 21", "255"]


def test_agreement_needs_three_leaves():
    h = build_from_edges([("r", "x"), ("r", "y")])
    with pytest.raises(WrongLeafCount):
        agreement_map(h, "argmax", "majority", 10)


def test_bench_report(five):
    rep = bench(five, "dl", "optimal", 20, seed=0)
    assert rep.n_samples == 20 and rep.mean_ms > 0
    assert rep.candidate_bound == pytest.approx(6.0)
    assert rep.mean_candidates <= rep.candidate_bound
