"""Grid discretizations of the ball random walk and of the Witten Laplacian.

Both builders shift W by its minimum over the grid before exponentiating, so
the Boltzmann weights stay in range; the shift cancels in every matrix.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .errors import ResolutionError
from .spectral import RHO_WITTEN, rho_random_walk

MAX_LOCAL_EXPONENT = 600.0


@dataclass
class DiscreteOperator:
    kind: str                      # "random_walk" or "witten"
    h: float
    axes: list                     # node coordinates per axis
    matrix: object                 # dense ndarray or scipy sparse CSR
    rho: float
    values: np.ndarray = field(repr=False)       # W at nodes, flattened
    kernel: np.ndarray = field(repr=False)       # exact null vector (unnormalized)
    B: object = field(default=None, repr=False)  # edge operator for witten (A = BᵀB)
    edge_values: np.ndarray = field(default=None, repr=False)  # W at edge midpoints (1D witten)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def dimension(self):
        return len(self.axes)

    @property
    def delta(self):
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def is_sparse(self):
        return sparse.issparse(self.matrix)

    def dense(self):
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)


def grid_axes(P, nodes):
    return [np.linspace(lo, hi, nodes) for lo, hi in P.domain]


def nodes_for_ratio(P, h, ratio=20.5):
    """Node count on the first axis giving ``h/δ`` close to ``ratio``."""
    lo, hi = P.domain[0]
    return int(round((hi - lo) * ratio / h)) + 1


def build_random_walk_matrix(P, nodes, h):
    """Symmetrized ball-walk operator ``P = I − G`` on a 1D grid (dense).

    With weights ``w_k = exp(-(W_k − W_min)/h)`` and ball masses
    ``m_i = Σ_{|x_i−x_k|<h} w_k δ``, the matrix is
    ``G_ij = 1{|x_i−x_j|<h} sqrt(w_i w_j) δ / sqrt(m_i m_j)``.
    The vector ``sqrt(w_i m_i)`` is an exact null vector of ``P``.
    """
    if P.dimension != 1:
        raise ValueError("the random-walk operator is built in dimension 1 only")
    (x,) = grid_axes(P, nodes)
    delta = x[1] - x[0]
    ratio = h / delta
    if ratio < 16:
        raise ResolutionError(
            f"h/δ = {ratio:.3f} < 16: the ball is under-resolved; use more nodes")
    if abs(ratio - round(ratio)) < 1e-9:
        raise ResolutionError(f"h/δ = {ratio:.6f} is an integer; shift the node count")
    b = int(math.floor(ratio))
    W = np.asarray(P(x), dtype=float)
    logw = -(W - W.min()) / h
    n = len(x)

    # log m_i by a banded log-sum-exp over the 2b+1 offsets
    stack = np.full((2 * b + 1, n), -np.inf)
    for r, s in enumerate(range(-b, b + 1)):
        lo, hi = max(0, -s), min(n, n - s)
        stack[r, lo:hi] = logw[lo + s:hi + s]
    logm = logsumexp(stack, axis=0) + math.log(delta)

    half = 0.5 * (logw - logm)
    Pmat = np.eye(n)
    rows = np.arange(n)
    for s in range(b + 1):
        g = np.exp(half[:n - s] + half[s:] + math.log(delta))
        Pmat[rows[:n - s], rows[s:]] -= g
        if s:
            Pmat[rows[s:], rows[:n - s]] -= g
    kernel = np.exp(0.5 * (logw + logm))
    return DiscreteOperator(kind="random_walk", h=h, axes=[x], matrix=Pmat,
                            rho=rho_random_walk(1), values=W, kernel=kernel)


def stochastic_matrix(op):
    """The un-conjugated transition matrix ``T_ij = 1{|x_i−x_j|<h} w_j δ / m_i``.

    ``T`` is similar to ``I − P`` and has unit row sums by construction.
    """
    (x,) = op.axes
    delta = x[1] - x[0]
    h = op.h
    b = int(math.floor(h / delta))
    logw = -(op.values - op.values.min()) / h
    n = len(x)
    i, j = np.indices((n, n))
    band = np.abs(i - j) <= b
    T = np.where(band, np.exp(logw)[None, :] * delta, 0.0)
    return T / T.sum(axis=1, keepdims=True)


def _edge_block(Wn, Wmid, i0, i1, h, d, row0):
    e_lo = (Wn[i0] - Wmid) / h
    e_hi = (Wn[i1] - Wmid) / h
    worst = max(np.max(np.abs(e_lo)), np.max(np.abs(e_hi)))
    if worst > MAX_LOCAL_EXPONENT:
        raise ResolutionError(
            f"local oscillation of W per cell reaches {worst:.1f}·h; refine the grid "
            f"(roughly by a factor {worst / MAX_LOCAL_EXPONENT * 2:.1f})")
    m = len(i0)
    rows = np.arange(row0, row0 + m)
    coef = h / d
    return (np.concatenate([rows, rows]), np.concatenate([i0, i1]),
            np.concatenate([-coef * np.exp(e_lo), coef * np.exp(e_hi)]))


def build_witten_matrix(P, nodes, h):
    """Witten Laplacian ``A = BᵀB`` on a uniform grid in dimension 1 or 2.

    Per axis, ``B`` maps node values to edge midpoints:
    ``(Bu)_e = (h/δ)(exp((W_{i+1} − W_mid)/h) u_{i+1} − exp((W_i − W_mid)/h) u_i)``.
    ``B`` annihilates ``exp(-(W − W_min)/h)`` up to rounding.
    """
    axes = grid_axes(P, nodes)
    mesh = np.meshgrid(*axes, indexing="ij")
    Wgrid = np.asarray(P.evaluate_coords(*mesh), dtype=float)
    Wn = Wgrid.ravel()
    idx = np.arange(Wn.size).reshape(Wgrid.shape)
    rows, cols, vals = [], [], []
    row0 = 0
    edge_values = None
    for ax, a in enumerate(axes):
        d = a[1] - a[0]
        lo = [slice(None)] * len(axes)
        hi = [slice(None)] * len(axes)
        lo[ax], hi[ax] = slice(None, -1), slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        mid = [m[lo] for m in mesh]
        mid[ax] = 0.5 * (mesh[ax][lo] + mesh[ax][hi])
        Wmid = np.asarray(P.evaluate_coords(*mid), dtype=float).ravel()
        if len(axes) == 1:
            edge_values = Wmid
        r, c, v = _edge_block(Wn, Wmid, idx[lo].ravel(), idx[hi].ravel(), h, d, row0)
        rows.append(r)
        cols.append(c)
        vals.append(v)
        row0 += Wmid.size
    B = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(row0, Wn.size))
    A = (B.T @ B).tocsr()
    A.sum_duplicates()
    kernel = np.exp(-(Wn - Wn.min()) / h)
    return DiscreteOperator(kind="witten", h=h, axes=axes, matrix=A, rho=RHO_WITTEN,
                            values=Wn, kernel=kernel, B=B, edge_values=edge_values)


# ---- binary dump ------------------------------------------------------------
#
# little-endian layout:
#   magic  b"MSOP"       4 bytes
#   version   u32
#   kind      u8   0 random_walk, 1 witten
#   storage   u8   0 dense column-major, 1 CSR
#   dimension u16
#   n         u64
#   delta     f64 × dimension
#   h         f64
# dense: n*n f64 in column-major order
# CSR:   nnz u64, indptr i64 × (n+1), indices i64 × nnz, data f64 × nnz

_MAGIC = b"MSOP"
_KINDS = ("random_walk", "witten")


def dump_operator(op, path):
    dim = op.dimension
    storage = 1 if op.is_sparse else 0
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IBBHQ", 1, _KINDS.index(op.kind), storage, dim, op.n))
        fh.write(struct.pack(f"<{dim}d", *op.delta))
        fh.write(struct.pack("<d", op.h))
        if storage:
            M = op.matrix.tocsr()
            fh.write(struct.pack("<Q", M.nnz))
            fh.write(M.indptr.astype("<i8").tobytes())
            fh.write(M.indices.astype("<i8").tobytes())
            fh.write(M.data.astype("<f8").tobytes())
        else:
            fh.write(np.asarray(op.matrix, dtype="<f8").tobytes(order="F"))


@dataclass
class DumpedOperator:
    kind: str
    n: int
    delta: tuple
    h: float
    matrix: object


def load_operator(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != _MAGIC:
        raise ValueError("not an operator dump")
    off = 4
    version, kind, storage, dim, n = struct.unpack_from("<IBBHQ", buf, off)
    off += struct.calcsize("<IBBHQ")
    delta = struct.unpack_from(f"<{dim}d", buf, off)
    off += 8 * dim
    (h,) = struct.unpack_from("<d", buf, off)
    off += 8
    if storage:
        (nnz,) = struct.unpack_from("<Q", buf, off)
        off += 8
        indptr = np.frombuffer(buf, "<i8", n + 1, off)
        off += 8 * (n + 1)
        indices = np.frombuffer(buf, "<i8", nnz, off)
        off += 8 * nnz
        data = np.frombuffer(buf, "<f8", nnz, off)
        M = sparse.csr_matrix((data.copy(), indices.copy(), indptr.copy()), shape=(n, n))
    else:
        M = np.frombuffer(buf, "<f8", n * n, off).reshape((n, n), order="F").copy()
    return DumpedOperator(kind=_KINDS[kind], n=n, delta=tuple(delta), h=h, matrix=M)
