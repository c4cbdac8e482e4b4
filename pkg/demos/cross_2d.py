"""Four wells on a ring: a class of three type-II minima.

W = (x²+y²−1)² + 2x²y² has four equal minima on the axes and four saddles on
the diagonals.  All four minima meet at one level, so the three non-global
minima form a single class whose interaction matrix is the graph Laplacian
of a 4-cycle.  Its nonzero eigenvalues come out as 1:1:2.
"""

import numpy as np

from metastable.eigensolvers import smallest_eigenvalues
from metastable.landscape import analyze_landscape
from metastable.library import builtin
from metastable.operators import build_witten_matrix
from metastable.spectral import predict_spectrum

P = builtin("cross_2d")
L = analyze_landscape(P)
(cls,) = L.classes
print("class members", cls.members, "hat", cls.hat,
      "types", [L.type_map[m] for m in cls.members])
pred = predict_spectrum(L, 1.0, 0.15)
print("prefactors", np.round(pred.groups[0].prefactors, 5))

op = build_witten_matrix(P, 129, 0.15)
lam = smallest_eigenvalues(op, 6).eigenvalues
print("computed / predicted", np.round(lam[1:4] / pred.values[1:4], 4))
print("gap to the fifth eigenvalue", f"{lam[4] / lam[3]:.3g}")
