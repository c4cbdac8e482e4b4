"""Potentials: parsing, exact derivatives, critical points and hypothesis checks."""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import dual
from .errors import DomainError, MorseError
from .expression import parse

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Potential:
    """A scalar field W on an axis-aligned box in dimension 1 or 2.

    ``domain`` holds one ``(lower, upper)`` pair per axis.
    """

    source: str
    dimension: int
    domain: tuple
    expression: object = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        dom = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        if len(dom) != self.dimension:
            raise DomainError(f"domain has {len(dom)} axes, expected {self.dimension}")
        for lo, hi in dom:
            if not hi > lo:
                raise DomainError(f"empty domain interval [{lo}, {hi}]")
        object.__setattr__(self, "domain", dom)
        if self.expression is None:
            object.__setattr__(self, "expression", parse(self.source, self.dimension))

    @property
    def width(self):
        return max(hi - lo for lo, hi in self.domain)

    @property
    def lower(self):
        return np.array([lo for lo, _ in self.domain])

    @property
    def upper(self):
        return np.array([hi for _, hi in self.domain])

    def _env(self, coords):
        return dict(zip(("x", "y"), coords))

    def _check_inside(self, pts):
        slack = 1e-12 * self.width
        if np.any(pts < self.lower - slack) or np.any(pts > self.upper + slack):
            raise DomainError("point outside the domain box")

    def __call__(self, points):
        """W at ``points`` of shape ``(..., d)``; in 1D a bare array of x is accepted."""
        pts = np.asarray(points, dtype=float)
        if self.dimension == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        self._check_inside(pts)
        return self.evaluate_coords(*np.moveaxis(pts, -1, 0))

    def evaluate_coords(self, *coords):
        """W on broadcastable coordinate arrays, one per axis (no domain check)."""
        with np.errstate(all="ignore"):
            out = self.expression.evaluate(self._env(coords))
        out = np.broadcast_to(np.asarray(out, dtype=float),
                              np.broadcast_shapes(*[np.shape(c) for c in coords]))
        if not np.all(np.isfinite(out)):
            raise DomainError("non-finite value of W")
        return out.copy() if out.ndim else float(out)

    def derivatives(self, points):
        """Values ``(n,)``, gradients ``(n, d)`` and Hessians ``(n, d, d)``.

        Every entry comes from nested forward-mode duals, so the only error
        is rounding.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dimension == 1 and pts.shape[-1] != 1:
            pts = pts.reshape(-1, 1)
        self._check_inside(pts)
        n, d = pts.shape
        cols = [pts[:, k] for k in range(d)]
        grad = np.empty((n, d))
        hess = np.empty((n, d, d))
        value = None
        for i, j in itertools.combinations_with_replacement(range(d), 2):
            with np.errstate(all="ignore"):
                out = self.expression.evaluate(self._env(dual.seed(cols, i, j)))
            v, di, dj, dij = _unpack(out, n)
            value = v
            grad[:, i] = di
            grad[:, j] = dj
            hess[:, i, j] = hess[:, j, i] = dij
        for arr in (value, grad, hess):
            if not np.all(np.isfinite(arr)):
                raise DomainError("non-finite value in derivative evaluation")
        return value, grad, hess


def _unpack(out, n):
    def part(v):
        return np.broadcast_to(np.asarray(v, dtype=float), (n,))
    if not isinstance(out, dual.Dual):
        z = np.zeros(n)
        return part(out), z, z, z
    outer_re, outer_eps = out.real, out.eps
    if isinstance(outer_re, dual.Dual):
        v, di = outer_re.real, outer_re.eps
    else:
        v, di = outer_re, 0.0
    if isinstance(outer_eps, dual.Dual):
        dj, dij = outer_eps.real, outer_eps.eps
    else:
        dj, dij = outer_eps, 0.0
    return part(v), part(di), part(dj), part(dij)


def parse_potential(source_text, dimension, domain=None):
    """Parse ``source_text`` into a :class:`Potential`.

    ``domain`` defaults to ``[-1, 1]`` per axis.
    """
    if domain is None:
        domain = ((-1.0, 1.0),) * dimension
    return Potential(source_text, dimension, tuple(domain))


def eval_with_derivatives(P, x):
    """Value, gradient ``(d,)`` and Hessian ``(d, d)`` of ``P`` at one point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v, g, H = P.derivatives(x[None, :])
    return float(v[0]), g[0], H[0]


@dataclass(frozen=True)
class CriticalPoint:
    location: tuple
    value: float
    index: int
    hessian_eigenvalues: tuple
    hessian_det: float
    hessian: np.ndarray = field(repr=False, compare=False)
    # eigenvector of the lowest Hessian eigenvalue (descent direction at saddles)
    lowest_eigenvector: np.ndarray = field(repr=False, compare=False)

    @property
    def x(self):
        return np.array(self.location)

    @property
    def is_minimum(self):
        return self.index == 0

    @property
    def is_saddle(self):
        return self.index == 1


def default_tolerances(P, seeds_per_axis=32):
    """``tol_grad``, ``tol_morse`` and ``tol_dedup`` sized from the seed grid."""
    seeds = seed_grid(P, seeds_per_axis)
    _, g, H = P.derivatives(seeds)
    return {
        "tol_grad": 1e-10 * (1.0 + np.max(np.abs(g))),
        "tol_morse": 1e-8 * np.max(np.abs(H)),
        "tol_dedup": 1e-6 * P.width,
    }


def seed_grid(P, seeds_per_axis):
    # cell centres keep seeds off the boundary
    axes = []
    for lo, hi in P.domain:
        step = (hi - lo) / seeds_per_axis
        axes.append(lo + step * (np.arange(seeds_per_axis) + 0.5))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def find_critical_points(P, seeds_per_axis=32, tol_grad=None, tol_morse=None,
                         tol_dedup=None, max_iter=100):
    """Critical points of ``P`` by Newton iteration on ``∇W = 0`` from a seed grid.

    Seeds that leave the box or fail to converge are dropped (logged, not
    fatal).  The result is sorted by value, then lexicographically by location.
    """
    if seeds_per_axis < 16:
        raise ValueError("seeds_per_axis must be at least 16")
    tol = default_tolerances(P, seeds_per_axis)
    tol_grad = tol["tol_grad"] if tol_grad is None else tol_grad
    tol_morse = tol["tol_morse"] if tol_morse is None else tol_morse
    tol_dedup = tol["tol_dedup"] if tol_dedup is None else tol_dedup

    x = seed_grid(P, seeds_per_axis)
    alive = np.ones(len(x), dtype=bool)
    done = np.zeros(len(x), dtype=bool)
    lo, hi = P.lower, P.upper
    for _ in range(max_iter):
        active = alive & ~done
        if not active.any():
            break
        idx = np.flatnonzero(active)
        _, g, H = P.derivatives(x[idx])
        gnorm = np.linalg.norm(g, axis=1)
        conv = gnorm <= tol_grad
        done[idx[conv]] = True
        step_idx = idx[~conv]
        if step_idx.size == 0:
            break
        Hs, gs = H[~conv], g[~conv]
        ok = np.abs(np.linalg.det(Hs)) > 1e-300
        alive[step_idx[~ok]] = False
        step_idx, Hs, gs = step_idx[ok], Hs[ok], gs[ok]
        xn = x[step_idx] - np.linalg.solve(Hs, gs[..., None])[..., 0]
        inside = np.all((xn >= lo) & (xn <= hi), axis=1) & np.all(np.isfinite(xn), axis=1)
        x[step_idx[inside]] = xn[inside]
        alive[step_idx[~inside]] = False
    failed = int(np.sum(~done))
    if failed:
        log.debug("%d of %d Newton seeds did not converge", failed, len(x))

    found = []
    for p in x[done]:
        if all(np.linalg.norm(p - q) > tol_dedup for q in found):
            found.append(p)

    points = []
    for p in found:
        p = _polish(P, p)
        v, g, H = eval_with_derivatives(P, p)
        evals, evecs = np.linalg.eigh(H)
        if np.min(np.abs(evals)) <= tol_morse:
            raise MorseError(
                f"degenerate Hessian at {tuple(np.round(p, 12))}: eigenvalues {evals}")
        points.append(CriticalPoint(
            location=tuple(float(c) for c in p),
            value=v,
            index=int(np.sum(evals < 0)),
            hessian_eigenvalues=tuple(float(e) for e in evals),
            hessian_det=float(np.prod(evals)),
            hessian=H,
            lowest_eigenvector=evecs[:, 0],
        ))
    points.sort(key=lambda c: (c.value, c.location))
    return points


def _polish(P, p, steps=5):
    # a few extra Newton steps while the gradient keeps shrinking
    _, g, H = eval_with_derivatives(P, p)
    for _ in range(steps):
        q = p - np.linalg.solve(H, g)
        if np.any(q < P.lower) or np.any(q > P.upper):
            break
        _, gq, Hq = eval_with_derivatives(P, q)
        if np.linalg.norm(gq) >= np.linalg.norm(g):
            break
        p, g, H = q, gq, Hq
    return p


@dataclass
class ValidationReport:
    n0: int
    passed: bool
    violations: list
    # groups of critical points (indices into the input list) with equal values
    equal_value_groups: list
    boundary_min: float
    tol_value: float


def value_tolerance(pts):
    vals = [c.value for c in pts]
    spread = max(vals) - min(vals) if vals else 0.0
    return 1e-9 * spread if spread > 0 else 1e-12


def boundary_minimum(P, samples=257):
    """Smallest sampled value of W on the boundary of the domain box."""
    if P.dimension == 1:
        return float(min(P(np.array(P.domain[0]))))
    (x0, x1), (y0, y1) = P.domain
    xs, ys = np.linspace(x0, x1, samples), np.linspace(y0, y1, samples)
    edges = [P.evaluate_coords(xs, np.full_like(xs, y)) for y in (y0, y1)]
    edges += [P.evaluate_coords(np.full_like(ys, x), ys) for x in (x0, x1)]
    return float(min(e.min() for e in edges))


def validate_hypotheses(P, pts, margin=1.5, tol_value=None):
    """Check the standing assumptions; failures are listed, never raised.

    Confinement is checked by a proxy: the lowest boundary value must lie
    above the global minimum by at least ``margin`` times the height of the
    highest critical value.
    """
    n0 = sum(1 for c in pts if c.index == 0)
    violations = []
    if n0 < 2:
        violations.append(f"needs at least two local minima, found {n0}")
    tol_value = value_tolerance(pts) if tol_value is None else tol_value
    bmin = boundary_minimum(P)
    if pts:
        wmin = min(c.value for c in pts)
        wmax = max(c.value for c in pts)
        need = wmin + margin * (wmax - wmin)
        if bmin <= need:
            violations.append(
                f"boundary minimum {bmin:.6g} does not exceed {need:.6g} "
                f"(margin {margin} over the critical values)")
    groups = []
    order = sorted(range(len(pts)), key=lambda i: pts[i].value)
    run = [order[0]] if order else []
    for a, b in zip(order, order[1:]):
        if pts[b].value - pts[a].value <= tol_value:
            run.append(b)
        else:
            if len(run) > 1:
                groups.append(sorted(run))
            run = [b]
    if len(run) > 1:
        groups.append(sorted(run))
    return ValidationReport(n0=n0, passed=not violations, violations=violations,
                            equal_value_groups=groups, boundary_min=bmin,
                            tol_value=tol_value)
