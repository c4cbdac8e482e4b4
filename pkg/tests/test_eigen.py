import warnings

import numpy as np
import pytest
from scipy import sparse

from metastable.eigensolvers import (SmallSpectrum, count_small_spectrum,
                                     smallest_eigenvalues)
from metastable.landscape import analyze_landscape
from metastable.library import builtin
from metastable.operators import build_random_walk_matrix, build_witten_matrix, nodes_for_ratio
from metastable.report import default_window_c
from metastable.spectral import RHO_WITTEN, predict_spectrum, rho_random_walk


def test_diagonal():
    S = smallest_eigenvalues(np.diag([1.0, 2.0, 3.0]), 2, method="dense")
    np.testing.assert_allclose(S.eigenvalues, [1.0, 2.0])


def test_k_bounds():
    with pytest.raises(ValueError):
        smallest_eigenvalues(np.eye(20), 13)


def test_sparse_matches_dense_on_random_spd():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((100, 100))
    M = X @ X.T / 100 + 0.05 * np.eye(100)
    d = smallest_eigenvalues(M, 6, method="dense")
    s = smallest_eigenvalues(sparse.csr_matrix(M), 6, method="sparse")
    np.testing.assert_allclose(s.eigenvalues, d.eigenvalues, rtol=1e-9)
    assert np.all(s.residuals <= 1e-9)


def test_witten_small_spectrum_shape():
    P = builtin("symmetric_double_well")
    for h in (0.02, 0.025):
        op = build_witten_matrix(P, 4001, h)
        lam = smallest_eigenvalues(op, 3).eigenvalues
        assert abs(lam[0]) < 1e-12 * lam[2]
        assert lam[1] < 1e-3 * h
        assert 0.05 * h < lam[2] < 20 * h
        assert lam[2] / lam[1] >= 1e3


def test_green_route_agrees_with_dense_where_dense_is_accurate():
    P = builtin("symmetric_double_well")
    op = build_witten_matrix(P, 2001, 0.05)
    g = smallest_eigenvalues(op, 3, method="green").eigenvalues
    d = smallest_eigenvalues(op, 3, method="dense").eigenvalues
    np.testing.assert_allclose(g[1:], d[1:], rtol=1e-6)


def test_sparse_bordered_route_on_1d_witten():
    P = builtin("symmetric_double_well")
    op = build_witten_matrix(P, 2001, 0.05)
    s = smallest_eigenvalues(op, 3, method="sparse").eigenvalues
    g = smallest_eigenvalues(op, 3, method="green").eigenvalues
    np.testing.assert_allclose(s[1:], g[1:], rtol=1e-6)


def _count(name, kind, h):
    P = builtin(name)
    L = analyze_landscape(P)
    if kind == "witten":
        rho, op = RHO_WITTEN, build_witten_matrix(P, 4001, h)
    else:
        rho, op = rho_random_walk(1), build_random_walk_matrix(P, nodes_for_ratio(P, h), h)
    S = smallest_eigenvalues(op, L.n0 + 2)
    return count_small_spectrum(S, default_window_c(L, rho), h), L.n0


@pytest.mark.parametrize("name, kind, h", [
    ("symmetric_double_well", "witten", 0.02),
    ("symmetric_double_well", "walk", 0.05),
    ("tilted_triple_well", "witten", 0.015),
])
def test_window_counts(name, kind, h):
    count, n0 = _count(name, kind, h)
    assert count == n0


def test_single_well_window_count():
    # hypothesis validation bypassed: one minimum, no exponentially small states
    P = builtin("single_well")
    op = build_witten_matrix(P, 2001, 0.05)
    S = smallest_eigenvalues(op, 3)
    assert count_small_spectrum(S, 0.1 * 2.0, 0.05) == 1


def test_window_warnings():
    S = SmallSpectrum(eigenvalues=np.array([0.0, 1.0, 2.0]), residuals=np.zeros(3),
                      norm=1.0, method="dense", tol=1e-10)
    with pytest.warns(UserWarning, match="window edge"):
        count_small_spectrum(S, 1.0, 1.0)
    with pytest.warns(UserWarning, match="all computed"):
        count_small_spectrum(S, 5.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert count_small_spectrum(S, 1.5, 1.0) == 2


def test_triple_well_ratios_approach_one_below_the_desk_range():
    # beyond 2Ŝ/h = 30 the Green route still resolves λ; the ratio to the
    # leading-order prediction should then sit close to 1 for both levels
    P = builtin("tilted_triple_well")
    L = analyze_landscape(P)
    h = 0.005
    pred = predict_spectrum(L, 1.0, h).values
    op = build_witten_matrix(P, 8001, h)
    lam = smallest_eigenvalues(op, 5).eigenvalues
    np.testing.assert_allclose(lam[1:3] / pred[1:3], 1.0, atol=0.03)
