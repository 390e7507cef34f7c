"""Walk through every decoder on the five-node tree r -> {A -> {a1, a2}, b}.

Run with:  python3 demos/five_node_walkthrough.py
"""
import numpy as np

from hierdecode import (
    CostModel,
    HFBetaContext,
    aggregate,
    build_from_edges,
    check_reasonable,
    compute_thresholds,
    decode_heuristic,
    find_candidate_set,
)
from hierdecode.node import ReasonableDecoder
from hierdecode.oracle import brute_force_set, enumerate_antichains, expected_set_value
from hierdecode.metrics import MetricKind

h = build_from_edges([("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b")])
p = np.array([0.4, 0.3, 0.3])          # a1, a2, b
pn = aggregate(h, p)

print("node   depth  p(n)   info")
for n in range(h.node_count):
    print(f"{h.names[n]:<6} {h.depth[n]:<6} {pn[n]:<6.2f} {h.info[n]:.3f}")

#%% Tree distance: the deepest node holding more than half the mass wins
dl = CostModel.builtin("dl", h)
print("\nverdict for dl:", check_reasonable(dl, h))
print("risk per node:", {n: round(float(r), 3) for n, r in zip(h.names, dl.risks(p, range(h.node_count)))})
t = compute_thresholds(dl, h)
print("thresholds q_min:", t.q_min[1:], " q_max:", t.q_max[1:])
print("surviving candidates:", [h.names[i] for i in find_candidate_set(h, pn, t)])
node, risk, _ = ReasonableDecoder(dl, h).decode_detail(p)
print(f"optimal node {h.names[node]} with expected distance {risk:.2f}")

#%% Wu-Palmer is only reasonable in the rooted sense
wp = CostModel.builtin("wp", h)
print("\nverdict for wp:", check_reasonable(wp, h))
print("optimal node for wp:", h.names[ReasonableDecoder(wp, h).decode(p)])

#%% Set predictions for hF1: every antichain scored by hand
kind = MetricKind("hf", 1.0)
print("\nantichain        expected hF1")
for ac in enumerate_antichains(h):
    print(f"{str([h.names[i] for i in ac]):<16} {expected_set_value(kind, h, p, ac):.4f}")
res = HFBetaContext(h, 1.0).decode_detail(p)
print("decoder picks", res.prediction.names(h), f"at {res.utility:.4f}",
      "searching", len(res.q), "nodes")
print("exhaustive search agrees:", [h.names[i] for i in brute_force_set(kind, h, p)[0]])

#%% The usual baselines on the same row
for name in ("argmax", "topdown", "hie-self", "karthik", "majority", "plurality", "expinfo"):
    print(f"{name:<10} -> {decode_heuristic(name, h, p).names(h)}")
