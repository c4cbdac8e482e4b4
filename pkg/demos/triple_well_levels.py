"""Tilted triple well: two depth scales and why desk-scale h is hard here.

The two shallow wells have depths 0.1782 and 0.1813.  Leading-order theory
treats them as separate exponential scales, but at h ≈ 0.015 the scales
differ only by e^{-0.006/h} ≈ 0.67, so the computed ratios drift
non-monotonically.  Well below the usual 2Ŝ/h ≤ 30 range the Green route
still resolves the eigenvalues and both ratios settle near 1.
"""

from metastable.eigensolvers import smallest_eigenvalues
from metastable.landscape import analyze_landscape
from metastable.library import builtin
from metastable.operators import build_witten_matrix
from metastable.spectral import predict_spectrum

P = builtin("tilted_triple_well")
L = analyze_landscape(P)
for m in sorted(L.labels, key=lambda q: L.minima[q].location):
    print(f"x={L.minima[m].location[0]:+.4f}  label {L.labels[m]}  S={L.S_map[m]:.6f}  "
          f"hat {L.hat_map.get(m, '-')}  type {L.type_map.get(m, '-')}")

print("\n    h     2Ŝ/h   ratio (shallow)  ratio (deep)")
for h, nodes in ((0.02, 4001), (0.015, 4001), (0.0125, 4001), (0.008, 8001),
                 (0.006, 8001), (0.005, 8001)):
    pred = predict_spectrum(L, 1.0, h).values
    lam = smallest_eigenvalues(build_witten_matrix(P, nodes, h), 5).eigenvalues
    q = lam[1:3] / pred[1:3]
    smax = max(g.S_hat for g in predict_spectrum(L, 1.0, h).groups)
    print(f"  {h:.4f}  {2 * smax / h:5.1f}   {q[0]:.4f}           {q[1]:.4f}")
