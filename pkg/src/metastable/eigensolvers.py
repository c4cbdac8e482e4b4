"""Smallest eigenvalues of the discretized operators.

Three routes:

* dense: LAPACK on the full matrix (random walk, small problems) or on the
  tridiagonal matrix of the 1D Witten Laplacian;
* sparse: block shift-invert subspace iteration at shift 0 with a sparse LU
  factorization, the known null vector bordered in when there is one;
* green (1D Witten only): the exponentially small eigenvalues are recomputed
  as inverses of the top eigenvalues of the chain's Green operator, applied in
  O(n) with prefix/suffix sums.  This keeps relative accuracy long after
  ``λ/‖A‖`` has dropped below machine precision, where the dense route only
  returns rounding noise.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg
from scipy.special import logsumexp

from .errors import SolverError

log = logging.getLogger(__name__)

DENSE_LIMIT = 4500
GREEN_THRESHOLD = 1e-6      # refine eigenvalues below this fraction of ‖A‖
GREEN_LOG_CUTOFF = 300.0    # drop nodes with (W - W_min)/h above this


@dataclass
class SmallSpectrum:
    eigenvalues: np.ndarray
    residuals: np.ndarray          # ‖Av − λv‖ / ‖A‖
    norm: float                    # estimate of ‖A‖
    method: str
    tol: float
    vectors: np.ndarray = field(default=None, repr=False)
    count_in_window: int = None


def estimate_norm(A, iters=60, seed=0):
    """‖A‖₂ of a symmetric matrix by power iteration from a fixed start."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = A @ x
        est = float(np.linalg.norm(y))
        if est == 0.0:
            return 0.0
        x = y / est
    return est


def _residuals(A, V, lam, norm):
    R = A @ V - V * lam[None, :]
    return np.linalg.norm(R, axis=0) / max(norm, np.finfo(float).tiny)


def _as_operator(A):
    # bare matrices are accepted as well as DiscreteOperator instances
    if hasattr(A, "matrix"):
        return A, A.matrix
    return None, A


def smallest_eigenvalues(A, k, tol=1e-10, method="auto", return_vectors=False):
    """The ``k`` smallest eigenvalues of a symmetric operator.

    ``method`` is ``"auto"``, ``"dense"``, ``"sparse"`` or ``"green"``.
    Under ``"auto"`` the 1D Witten Laplacian uses the tridiagonal solve with
    Green refinement of the exponentially small eigenvalues, other problems up
    to 4500 nodes the dense solve, and larger ones the sparse iteration.
    """
    if not 1 <= k <= 12:
        raise ValueError("k must lie in 1..12")
    op, M = _as_operator(A)
    n = M.shape[0]
    k = min(k, n)
    norm = estimate_norm(M)
    is_witten_1d = op is not None and op.kind == "witten" and op.dimension == 1
    if method == "auto":
        if is_witten_1d:
            method = "green"
        elif n <= DENSE_LIMIT:
            method = "dense"
        else:
            method = "sparse"

    if method == "green":
        if not is_witten_1d:
            raise ValueError("the green route needs a 1D Witten operator")
        lam, V = _tridiagonal(M, k)
        small = [i for i in range(1, k) if lam[i] < GREEN_THRESHOLD * norm]
        if small:
            mu, Y = green_top(op, len(small))
            for slot, (m, y) in zip(small, zip(mu, Y.T)):
                lam[slot] = 1.0 / m
                V[:, slot] = y
        lam[0], V[:, 0] = _kernel_pair(op)
        lam = _gram_values(op, V, lam, keep=small + [0])
    elif method == "dense":
        if is_witten_1d:
            lam, V = _tridiagonal(M, k)
        else:
            D = M.toarray() if sparse.issparse(M) else np.asarray(M)
            lam, V = linalg.eigh(D, subset_by_index=(0, k - 1))
        if op is not None and op.B is not None:
            lam = _gram_values(op, V, lam, keep=[])
    elif method == "sparse":
        lam, V = _subspace_iteration(op, M, k, tol, norm)
    else:
        raise ValueError(f"unknown method {method!r}")

    order = np.argsort(lam, kind="stable")
    if method == "green":
        # the kernel is the ground state by construction; its Gram value is
        # rounding noise that can exceed λ₂ once 2Ŝ/h is large
        order = np.concatenate([[0], 1 + np.argsort(lam[1:], kind="stable")])
    lam, V = lam[order], V[:, order]
    res = _residuals(M, V, lam, norm)
    return SmallSpectrum(eigenvalues=lam, residuals=res, norm=norm, method=method,
                         tol=tol, vectors=V if return_vectors else None)


def _tridiagonal(M, k):
    M = sparse.csr_matrix(M)
    d = M.diagonal()
    e = M.diagonal(1)
    lam, V = linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
    return lam, V


def _kernel_pair(op):
    u = op.kernel / np.linalg.norm(op.kernel)
    if op.B is not None:
        return float(np.linalg.norm(op.B @ u) ** 2), u
    return float(u @ (op.matrix @ u)), u


def _gram_values(op, V, lam, keep):
    # λ = ‖Bv‖² / ‖v‖²: the Rayleigh quotient in Gram form, accurate down to
    # tiny λ; entries listed in ``keep`` are left as they are
    out = lam.copy()
    for i in range(V.shape[1]):
        if i in keep:
            continue
        v = V[:, i]
        out[i] = float(np.linalg.norm(op.B @ v) ** 2 / (v @ v))
    return out


def green_chain(op):
    """Data for the Green operator of a 1D Witten chain.

    Returns ``(keep, sqrt_pi, prefix, suffix, r)`` where ``keep`` slices the
    nodes retained, ``prefix[e]``/``suffix[e]`` are the normalized Gibbs
    masses left/right of edge ``e`` and ``r`` are the edge resistances scaled
    so that the Green eigenvalues are exactly ``1/λ``.
    """
    h = op.h
    delta = op.delta[0]
    W = op.values
    w0 = W.min()
    inside = np.flatnonzero((W - w0) / h <= GREEN_LOG_CUTOFF)
    a, b = inside[0], inside[-1] + 1
    keep = slice(a, b)
    Wn = W[keep]
    Wm = op.edge_values[a:b - 1]
    logpi = -2.0 * (Wn - w0) / h
    logZ = logsumexp(logpi)
    logpi -= logZ
    pi = np.exp(logpi)
    prefix = np.cumsum(pi)[:-1]
    suffix = np.cumsum(pi[::-1])[::-1][1:]
    logr = 2.0 * math.log(delta / h) + 2.0 * (Wm - w0) / h + logZ
    r = np.exp(np.minimum(logr, 700.0))
    return keep, np.exp(0.5 * logpi), prefix, suffix, r


def green_matvec(chain, y):
    """Apply the symmetrized Green operator ``Π^{1/2} g Π^{1/2}`` to ``y``."""
    _, sq, prefix, suffix, r = chain
    x = sq * y
    X = x.sum()
    P = np.cumsum(x)[:-1]
    Q = np.cumsum(x[::-1])[::-1][1:]
    # Π_e X − P_e, evaluated from whichever side has the smaller mass
    a = np.where(prefix <= 0.5, prefix * X - P, Q - suffix * X)
    b = r * a
    left = np.concatenate([[0.0], np.cumsum(b * prefix)])
    right = np.concatenate([np.cumsum((b * suffix)[::-1])[::-1], [0.0]])
    return sq * (left - right)


def green_top(op, count, seed=0):
    """Top ``count`` eigenpairs of the Green operator: ``μ = 1/λ`` and vectors
    on the full grid (zero on dropped nodes), normalized."""
    chain = green_chain(op)
    keep = chain[0]
    m = len(chain[1])
    Lop = splinalg.LinearOperator((m, m), matvec=lambda y: green_matvec(chain, y),
                                  dtype=float)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(m)
    kk = min(count, m - 2)
    mu, Y = splinalg.eigsh(Lop, k=kk, which="LA", v0=v0, tol=1e-13)
    order = np.argsort(mu)[::-1]
    mu, Y = mu[order], Y[:, order]
    full = np.zeros((op.n, kk))
    full[keep, :] = Y
    full /= np.linalg.norm(full, axis=0)
    return mu, full


def _subspace_iteration(op, M, k, tol, norm, max_iter=300, seed=0):
    n = M.shape[0]
    M = sparse.csc_matrix(M)
    kernel = None
    if op is not None and op.kernel is not None:
        kernel = op.kernel / np.linalg.norm(op.kernel)
    try:
        if kernel is not None:
            K = sparse.bmat([[M, sparse.csc_matrix(kernel[:, None])],
                             [sparse.csc_matrix(kernel[None, :]), None]]).tocsc()
            lu = splinalg.splu(K)
        else:
            lu = splinalg.splu(M)
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc

    def project(X):
        if kernel is None:
            return X
        return X - np.outer(kernel, kernel @ X)

    def solve(X):
        if kernel is None:
            return lu.solve(X)
        Z = lu.solve(np.vstack([project(X), np.zeros((1, X.shape[1]))]))[:n]
        return project(Z)

    want = k - 1 if kernel is not None else k
    block = min(want + 2, n - 1)
    rng = np.random.default_rng(seed)
    X = project(rng.standard_normal((n, block)))
    theta = None
    for _ in range(max_iter):
        Q, _ = np.linalg.qr(solve(X))
        Q = project(Q)
        Q, _ = np.linalg.qr(Q)
        AQ = M @ Q
        theta, S = linalg.eigh(Q.T @ AQ)
        X = Q @ S
        res = np.linalg.norm(AQ @ S - X * theta[None, :], axis=0) / norm
        if np.all(res[:want] <= tol):
            break
    else:
        raise SolverError(f"subspace iteration did not converge in {max_iter} steps")
    lam, V = theta[:want], X[:, :want]
    if op is not None and op.B is not None:
        lam = np.array([np.linalg.norm(op.B @ V[:, i]) ** 2 for i in range(want)])
    if kernel is not None:
        lam0, u0 = _kernel_pair(op)
        lam = np.concatenate([[lam0], lam])
        V = np.column_stack([u0, V])
    return lam, V


def count_small_spectrum(S, c, h):
    """Number of computed eigenvalues in ``[0, c·h]``.

    Warns when an eigenvalue sits within ten solver tolerances of the window
    edge, or when every computed eigenvalue lies inside the window (so the
    count may be incomplete).
    """
    edge = c * h
    lam = np.asarray(S.eigenvalues)
    count = int(np.sum(lam <= edge))
    slack = 10.0 * S.tol * S.norm
    if np.any(np.abs(lam - edge) <= slack):
        warnings.warn(f"an eigenvalue lies within {slack:.3g} of the window edge {edge:.3g}",
                      stacklevel=2)
    if count == len(lam):
        warnings.warn("all computed eigenvalues lie in the window; compute more",
                      stacklevel=2)
    S.count_in_window = count
    return count
