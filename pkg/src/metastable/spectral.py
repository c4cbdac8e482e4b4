"""Leading-order small eigenvalues from the landscape data.

For every class α of minima we build an orthonormal family φ over the class
plus its hat, the leading interaction matrix N0 from the saddle Hessians, the
coordinate matrix T and the class matrix M0 = Tᵀ N0 T.  The eigenvalues on
each depth scale Ŝ_j come from the graded Schur recursion: eliminate all
shallower blocks, keep the leading block, diagonalize.  The predicted small
eigenvalue is ``h * exp(-2 Ŝ_j / h) * prefactor``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import LabelingError

RHO_WITTEN = 1.0


def rho_random_walk(dimension):
    """Rate constant of the ball walk in dimension ``d``: 1 / (2d + 4)."""
    return 1.0 / (2 * dimension + 4)


def _det_weight(cp):
    return abs(cp.hessian_det) ** -0.5


def H_set(L, m, cls=None):
    """Minima sharing W(m) inside E^α(m) (class context) or globally (no class)."""
    wm = L.minima[m].value
    pool = cls.E[m] if cls is not None else range(L.n0)
    return sorted(q for q in pool if abs(L.minima[q].value - wm) <= L.tol_value)


def _H_sum(L, m, cls=None):
    return sum(_det_weight(L.minima[q]) for q in H_set(L, m, cls))


def normalization_leading(L, m, cls=None):
    """Leading normalization constant c0 = π^{-d/4} (Σ_H det W_q^{-1/2})^{-1/2}.

    With ``cls=None`` the global context is used (meaningful for the global
    minimum, where H holds every global minimum).
    """
    d = len(L.minima[m].location)
    return math.pi ** (-d / 4) * _H_sum(L, m, cls) ** -0.5


@dataclass
class PhiFamily:
    cls: object
    order: tuple              # class minima by (S, label), then the hat
    vectors: np.ndarray       # column i is φ_{order[i]} in coordinates over ``order``

    @property
    def n_members(self):
        return len(self.order) - 1

    def phi(self, m):
        return self.vectors[:, self.order.index(m)]


def class_order(L, cls):
    members = sorted(cls.members, key=lambda m: (L.S_map[m], L.labels[m]))
    return tuple(members) + (cls.hat,)


def phi_family(L, cls, completion=None):
    """Orthonormal family over the class and its hat.

    φ of the hat is proportional to 1/c0 on the hat and the type-II members.
    Type-I members get unit vectors.  Type-II members complete the family by
    Gram–Schmidt in label order; ``completion`` (an orthogonal matrix of
    size #type-II) optionally remixes that completion, which must not change
    any spectrum downstream.
    """
    order = class_order(L, cls)
    n = len(order)
    pos = {m: i for i, m in enumerate(order)}
    type2 = [m for m in cls.members if L.type_map[m] == "II"]
    support = type2 + [cls.hat]
    V = np.zeros((n, n))

    hat_vec = np.zeros(n)
    for m in support:
        # 1/c0 up to the common π^{d/4}, which the normalization removes
        hat_vec[pos[m]] = _H_sum(L, m, cls) ** 0.5
    hat_vec /= np.linalg.norm(hat_vec)
    V[:, pos[cls.hat]] = hat_vec

    for m in cls.members:
        if L.type_map[m] == "I":
            V[pos[m], pos[m]] = 1.0

    basis = [hat_vec]
    done = []
    for m in sorted(type2, key=lambda q: L.labels[q]):
        v = np.zeros(n)
        v[pos[m]] = 1.0
        for _ in range(2):  # re-orthogonalize once for stability
            for q in basis:
                v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm < 1e-8:
            raise LabelingError(f"rank deficiency completing φ for minimum {m}")
        v /= norm
        basis.append(v)
        done.append(m)
    if done:
        block = np.column_stack(basis[1:])
        if completion is not None:
            block = block @ np.asarray(completion, dtype=float)
        for c, m in enumerate(done):
            V[:, pos[m]] = block[:, c]
    return PhiFamily(cls=cls, order=order, vectors=V)


def tau0(s, rho):
    """Saddle rate τ0 = 2ϱ|μ₋| for the negative Hessian eigenvalue μ₋."""
    if s.index != 1:
        raise ValueError(f"tau0 needs an index-1 saddle, got index {s.index}")
    if not rho > 0:
        raise ValueError("rho must be positive")
    return 2.0 * rho * abs(s.hessian_eigenvalues[0])


def interaction_matrix(L, cls, rho, order=None):
    """Leading interaction matrix N0 over ``order`` (default: :func:`class_order`)."""
    order = class_order(L, cls) if order is None else order
    n = len(order)
    w = np.array([_H_sum(L, m, cls) ** -0.5 for m in order])
    N = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            shared = cls.j[order[a]] & cls.j[order[b]]
            if not shared:
                continue
            rate = sum(_det_weight(L.saddles[s]) * tau0(L.saddles[s], rho)
                       for s in sorted(shared))
            sign = 1.0 if a == b else -1.0
            N[a, b] = N[b, a] = sign / (2 * math.pi) * w[a] * w[b] * rate
    return N


@dataclass
class ClassMatrices:
    cls: object
    phi: PhiFamily
    N0: np.ndarray
    T: np.ndarray
    M0: np.ndarray
    members: tuple            # column order of T and M0
    S_values: list            # distinct depths, increasing
    S_blocks: list            # index lists into ``members``, one per depth


def _group_by_depth(L, members):
    values, blocks = [], []
    for i, m in enumerate(members):
        s = L.S_map[m]
        if values and abs(s - values[-1]) <= L.tol_value:
            blocks[-1].append(i)
        else:
            values.append(s)
            blocks.append([i])
    return values, blocks


def assemble_class_matrix(L, cls, rho, completion=None):
    phi = phi_family(L, cls, completion=completion)
    N0 = interaction_matrix(L, cls, rho, order=phi.order)
    T = phi.vectors[:, :phi.n_members]
    M0 = T.T @ N0 @ T
    M0 = 0.5 * (M0 + M0.T)
    members = phi.order[:-1]
    values, blocks = _group_by_depth(L, members)
    return ClassMatrices(cls=cls, phi=phi, N0=N0, T=T, M0=M0, members=members,
                         S_values=values, S_blocks=blocks)


def schur_complement(M, lead, rest):
    """R(M) = D − C A⁻¹ B with A on ``lead`` and D on ``rest``."""
    M = np.asarray(M, dtype=float)
    if not lead:
        return M[np.ix_(rest, rest)]
    A = M[np.ix_(lead, lead)]
    B = M[np.ix_(lead, rest)]
    C = M[np.ix_(rest, lead)]
    D = M[np.ix_(rest, rest)]
    try:
        X = linalg.solve(A, B, assume_a="sym")
    except linalg.LinAlgError as exc:
        raise LabelingError("singular leading block in the Schur recursion") from exc
    return D - C @ X


def graded_schur_spectrum(M, blocks):
    """Spec(J ∘ R_j(M)) for each block j, in block order.

    ``blocks`` is an ordered partition of the indices of ``M`` (shallowest
    first).  Block j eliminates blocks 1..j-1 and keeps the leading part.
    """
    out = []
    for j, block in enumerate(blocks):
        lead = [i for b in blocks[:j] for i in b]
        rest = [i for b in blocks[j:] for i in b]
        R = schur_complement(M, lead, rest)
        k = len(block)
        J = R[:k, :k]
        out.append(np.sort(linalg.eigvalsh(0.5 * (J + J.T))))
    return out


@dataclass
class PredictedGroup:
    S_hat: float
    prefactors: np.ndarray     # Spec(J ∘ R_j(M0)) aggregated over classes
    scale: float               # h e^{-2Ŝ/h}

    @property
    def eigenvalues(self):
        return self.scale * self.prefactors


@dataclass
class PredictedSpectrum:
    h: float
    rho: float
    groups: list
    n0: int
    class_matrices: list = field(default_factory=list, repr=False)

    @property
    def values(self):
        """All predicted eigenvalues, ascending, including the exact 0."""
        vals = [0.0] + [v for g in self.groups for v in g.eigenvalues]
        return np.sort(np.array(vals))

    def entries(self):
        """``(S_hat, prefactor, predicted value)`` for every nonzero prediction,
        ascending in value."""
        rows = [(g.S_hat, float(p), float(g.scale * p))
                for g in self.groups for p in g.prefactors]
        return sorted(rows, key=lambda r: (r[2], r[0]))


def global_levels(L):
    vals = sorted(s for m, s in L.S_map.items() if math.isfinite(s))
    levels = []
    for v in vals:
        if not levels or v - levels[-1] > L.tol_value:
            levels.append(v)
    return levels


def predict_spectrum(L, rho, h, completion=None):
    """Leading-order prediction of the n0 small eigenvalues at ``h``.

    ``completion`` maps class index -> orthogonal matrix for the type-II
    completion (used by invariance checks).
    """
    completion = completion or {}
    mats = [assemble_class_matrix(L, c, rho, completion=completion.get(i))
            for i, c in enumerate(L.classes)]
    levels = global_levels(L)
    prefs = {i: [] for i in range(len(levels))}
    for cm in mats:
        specs = graded_schur_spectrum(cm.M0, cm.S_blocks)
        for s_val, spec in zip(cm.S_values, specs):
            j = min(range(len(levels)), key=lambda i: abs(levels[i] - s_val))
            prefs[j].extend(spec.tolist())
    groups = []
    for j, S_hat in enumerate(levels):
        p = np.sort(np.array(prefs[j]))
        scale = h * math.exp(-2.0 * S_hat / h) if h is not None else math.nan
        groups.append(PredictedGroup(S_hat=S_hat, prefactors=p, scale=scale))
    return PredictedSpectrum(h=h, rho=rho, groups=groups, n0=L.n0, class_matrices=mats)


def sharp_matrix(L, mats):
    """The combined matrix M# over all non-global minima.

    Minima are ordered by increasing depth, then label; entries couple two
    minima only when they lie in the same class.  Returns ``(M, order, blocks)``
    with blocks grouping equal depths.
    """
    order = sorted((m for m in L.labels if L.labels[m] != (1, 1)),
                   key=lambda m: (L.S_map[m], L.labels[m]))
    pos = {m: i for i, m in enumerate(order)}
    M = np.zeros((len(order), len(order)))
    for cm in mats:
        idx = [pos[m] for m in cm.members]
        M[np.ix_(idx, idx)] = cm.M0
    _, blocks = _group_by_depth(L, order)
    return M, order, blocks
