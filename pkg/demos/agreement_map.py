"""Where do the hF1-optimal set rule and the majority rule disagree?

Scans the probability simplex of a three-leaf tree and writes a PPM image
(green: same augmented prediction, red: different).

Run with:  python3 demos/agreement_map.py [out.ppm]
"""
import sys
from collections import Counter

from hierdecode import agreement_map, build_from_edges

h = build_from_edges([("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b")])
grid = agreement_map(h, "optimal", "majority", 60, "hf:1")
print(f"{grid.fraction:.1%} of {len(grid.agree)} grid points agree")

pairs = Counter((a, b) for a, b, g in zip(grid.pred_a, grid.pred_b, grid.agree) if not g)
print("most common disagreements (optimal set vs majority node):")
for (a, b), n in pairs.most_common(5):
    print(f"  {a:<10} vs {b:<4} {n}")

out = sys.argv[1] if len(sys.argv) > 1 else "agreement.ppm"
with open(out, "w") as f:
    f.write(grid.to_ppm())
print("wrote", out)
