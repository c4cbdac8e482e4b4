"""Sublevel-set topology of a potential on a grid.

The sweep activates grid nodes in increasing order of W and joins neighbours
with a union-find; components are snapshotted just below every saddle value.
From those snapshots we get the separating saddles, the adapted labeling of
the minima, the depth map S, the hat map, the type I/II split and the
equivalence classes that group minima communicating at one saddle level.

Components are identified throughout by the frozenset of (indices of) the
minima they contain, so a component at any level can be compared with one at
another level without referring to the grid.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LabelingError, ResolutionError
from .potential import find_critical_points, value_tolerance

FICTIVE_SADDLE = -1


@dataclass
class Filtration:
    axes: list
    values: np.ndarray  # flattened, C order over axes
    order: np.ndarray

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def size(self):
        return self.values.size

    @property
    def spacing(self):
        return np.array([a[1] - a[0] for a in self.axes])

    def coords(self, node):
        idx = np.unravel_index(node, self.shape)
        return np.array([a[i] for a, i in zip(self.axes, idx)])

    def nearest_node(self, point):
        idx = []
        for a, c in zip(self.axes, point):
            i = int(round((c - a[0]) / (a[1] - a[0])))
            idx.append(min(max(i, 0), len(a) - 1))
        return int(np.ravel_multi_index(idx, self.shape))

    def neighbours(self, node):
        idx = np.unravel_index(node, self.shape)
        out = []
        for ax, n in enumerate(self.shape):
            for step in (-1, 1):
                j = idx[ax] + step
                if 0 <= j < n:
                    nb = list(idx)
                    nb[ax] = j
                    out.append(int(np.ravel_multi_index(nb, self.shape)))
        return out


def build_filtration(P, nodes_per_axis, max_bytes=1 << 30):
    """Sample ``P`` on a uniform grid and sort the nodes once.

    Ties are broken by node index, so the order is deterministic.
    """
    if nodes_per_axis < 64:
        raise ValueError("nodes_per_axis must be at least 64")
    n = nodes_per_axis ** P.dimension
    if 32 * n > max_bytes:
        raise ResolutionError(
            f"{n} nodes exceed the memory cap of {max_bytes} bytes")
    axes = [np.linspace(lo, hi, nodes_per_axis) for lo, hi in P.domain]
    mesh = np.meshgrid(*axes, indexing="ij")
    values = np.asarray(P.evaluate_coords(*mesh), dtype=float).ravel()
    order = np.lexsort((np.arange(n), values))
    return Filtration(axes=axes, values=values, order=order)


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


@dataclass(frozen=True)
class MergeEvent:
    value: float
    node: int
    location: tuple
    left: frozenset   # minima in the two joining components
    right: frozenset


def sweep(F, minima_nodes, thresholds):
    """Union-find sweep over ``F``.

    ``minima_nodes`` maps minimum id -> grid node.  Returns the merge events
    between components that both already hold a minimum, and a
    :class:`Snapshot` of the components of ``{W < c}`` for every threshold.
    """
    uf = UnionFind(F.size)
    active = np.zeros(F.size, dtype=bool)
    holds = {}  # root -> set of minima
    host = {}
    for m, node in minima_nodes.items():
        host.setdefault(node, set()).add(m)
    pending = sorted(thresholds)
    snapshots = {}
    merges = []

    def snapshot():
        roots = np.array(uf.parent)
        while True:
            nxt = roots[roots]
            if np.array_equal(nxt, roots):
                break
            roots = nxt
        roots[~active] = -1
        return Snapshot(roots, {r: frozenset(ms) for r, ms in holds.items()})

    for node in F.order:
        node = int(node)
        v = F.values[node]
        while pending and v >= pending[0]:
            snapshots[pending.pop(0)] = snapshot()
        active[node] = True
        holds[node] = set(host.get(node, ()))
        for nb in F.neighbours(node):
            if not active[nb]:
                continue
            ra, rb = uf.find(node), uf.find(nb)
            if ra == rb:
                continue
            a, b = holds.pop(ra), holds.pop(rb)
            if a and b:
                merges.append(MergeEvent(float(v), node, tuple(F.coords(node)),
                                         frozenset(a), frozenset(b)))
            holds[uf.union(ra, rb)] = a | b
    for c in pending:
        snapshots[c] = snapshot()
    return merges, snapshots


@dataclass
class Snapshot:
    """Components of ``{W < c}``: root per node (-1 when inactive) and minima per root."""

    roots: np.ndarray
    minima: dict

    def component(self, node):
        r = int(self.roots[node])
        return self.minima.get(r, frozenset()) if r >= 0 else None

    def components(self):
        return sorted({c for c in self.minima.values() if c}, key=sorted)


def level_gap(values, tol_value):
    """Smallest gap between distinct values (gaps ≤ ``tol_value`` count as equal)."""
    vals = sorted(values)
    gaps = [b - a for a, b in zip(vals, vals[1:]) if b - a > tol_value]
    return min(gaps) if gaps else 1.0


def group_values(values, tol):
    """Distinct values, merging runs closer than ``tol``; returns representatives."""
    reps = []
    for v in sorted(values):
        if not reps or v - reps[-1][-1] > tol:
            reps.append([v])
        else:
            reps[-1].append(v)
    return [float(np.mean(r)) for r in reps]


@dataclass
class SaddleAnalysis:
    """Output of :func:`separating_saddles`."""

    minima: list
    saddles: list                     # all index-1 critical points
    separating: list                  # indices into ``saddles``
    sigma_values: list                # σ_2 > … > σ_N
    merge_events: list
    sides: dict                       # saddle id -> (component, component) below it
    minima_nodes: dict
    eps_level: float
    tol_value: float
    tol_match: float
    snapshots: dict = field(default_factory=dict, repr=False)  # σ_k -> Snapshot

    @property
    def V1(self):
        return [self.saddles[i] for i in self.separating]


def _descend(F, node, level):
    while F.values[node] >= level:
        nbs = F.neighbours(node)
        best = min(nbs, key=lambda j: (F.values[j], j))
        if F.values[best] >= F.values[node]:
            raise ResolutionError(
                f"descent from {tuple(F.coords(node))} stalls above level {level:.6g}; "
                "refine the grid")
        node = best
    return node


def separating_saddles(F, pts, tol_value=None, tol_match=None):
    """Find the separating saddles and the distinct separating values.

    Every index-1 point is tested directly: its two descending sides, taken
    just below its value, must lie in different components.  Merge events
    from the sweep are then matched to separating saddles as a consistency
    check; an unmatched merge means the grid is too coarse.
    """
    tol_value = value_tolerance(pts) if tol_value is None else tol_value
    minima = [c for c in pts if c.index == 0]
    saddles = [c for c in pts if c.index == 1]
    eps = level_gap([c.value for c in pts], tol_value) / 10.0
    cell = float(np.linalg.norm(F.spacing))
    tol_match = 3.0 * cell if tol_match is None else tol_match

    minima_nodes = {i: F.nearest_node(m.location) for i, m in enumerate(minima)}
    for i, node in minima_nodes.items():
        if not F.values[node] < minima[i].value + eps:
            raise ResolutionError("grid misses a minimum; refine the grid")
    reps = group_values([s.value for s in saddles], tol_value)
    levels = {i: min(reps, key=lambda r: abs(r - s.value)) - eps
              for i, s in enumerate(saddles)}
    merges, snaps = sweep(F, minima_nodes, set(levels.values()))

    lo, hi = np.array([a[0] for a in F.axes]), np.array([a[-1] for a in F.axes])
    separating, sides = [], {}
    for i, s in enumerate(saddles):
        mu = abs(s.hessian_eigenvalues[0])
        t = max(math.sqrt(4.0 * eps / mu), 2.0 * float(F.spacing.max()))
        comps = []
        for sign in (-1.0, 1.0):
            p = np.clip(s.x + sign * t * s.lowest_eigenvector, lo, hi)
            node = _descend(F, F.nearest_node(p), levels[i])
            comp = snaps[levels[i]].component(node)
            if not comp:
                raise ResolutionError(
                    f"a sublevel component near {tuple(F.coords(node))} holds no "
                    "critical minimum; refine the grid")
            comps.append(comp)
        if comps[0] != comps[1]:
            separating.append(i)
            sides[i] = tuple(sorted(comps, key=sorted))

    matched = {}
    for ev in merges:
        cands = [i for i in range(len(saddles))
                 if abs(saddles[i].value - ev.value) <= eps
                 and np.linalg.norm(saddles[i].x - np.array(ev.location)) <= tol_match]
        if not cands:
            raise ResolutionError(
                f"merge at value {ev.value:.6g} near {ev.location} matches no saddle; "
                "refine the grid")
        best = min(cands, key=lambda i: np.linalg.norm(saddles[i].x - np.array(ev.location)))
        if best not in sides:
            raise ResolutionError(
                f"merge matched to saddle {saddles[best].location} which fails the "
                "two-component check; refine the grid")
        if best in matched:
            raise LabelingError(
                f"two merge events matched to saddle {saddles[best].location}")
        matched[best] = ev

    sigma_values = group_values([saddles[i].value for i in separating], tol_value)[::-1]
    level_snaps = {}
    for sig in sigma_values:
        rep = min(reps, key=lambda r: abs(r - sig))
        level_snaps[sig] = snaps[rep - eps]
    return SaddleAnalysis(snapshots=level_snaps, minima=minima, saddles=saddles, separating=separating,
                          sigma_values=sigma_values, merge_events=merges, sides=sides,
                          minima_nodes=minima_nodes, eps_level=eps,
                          tol_value=tol_value, tol_match=tol_match)


@dataclass
class ClassData:
    """One equivalence class α of minima."""

    level: int                 # k with σ(α) = σ_k (1-based)
    sigma: float
    members: tuple             # minima ids, sorted
    hat: int
    E: dict = field(default_factory=dict)       # minimum -> component at level k
    j: dict = field(default_factory=dict)       # minimum -> frozenset of saddle ids

    @property
    def hat_members(self):
        return self.members + (self.hat,)


@dataclass
class LabeledLandscape:
    minima: list
    saddles: list
    separating: list
    sigma_levels: list                 # [inf, σ_2, …, σ_N]
    labels: dict                       # minimum -> (k, j)
    components: dict                   # k -> list of components (frozensets)
    E_map: dict                        # minimum -> component of {W < σ_k}
    j_map: dict                        # minimum -> frozenset of saddle ids
    sigma_map: dict
    S_map: dict
    sides: dict
    tol_value: float
    hat_map: dict = field(default_factory=dict)
    type_map: dict = field(default_factory=dict)
    classes: list = field(default_factory=list)
    critical_points: list = field(default_factory=list, repr=False)

    @property
    def global_minimum(self):
        return next(m for m, lab in self.labels.items() if lab == (1, 1))

    @property
    def n0(self):
        return len(self.minima)

    def level_of(self, m):
        return self.labels[m][0]

    def component_at(self, m, k):
        """Component of ``{W < σ_k}`` containing minimum ``m`` (``None`` if above σ_k)."""
        for comp in self.components[k]:
            if m in comp:
                return comp
        return None

    def label_in(self, comp, k):
        """The element of 𝚄_k lying in ``comp`` (the inverse of T_k)."""
        hits = [m for m in comp if self.labels.get(m, (math.inf,))[0] <= k]
        if len(hits) != 1:
            raise LabelingError(f"T_{k} is not bijective on component {sorted(comp)}")
        return hits[0]

    def saddles_on(self, comp, k):
        """Separating saddles at value σ_k on the boundary of ``comp``."""
        sig = self.sigma_levels[k - 1]
        return frozenset(i for i, pair in self.sides.items()
                         if abs(self.saddles[i].value - sig) <= self.tol_value
                         and comp in pair)


def _pick(cands, minima, tol_value, reverse):
    vmin = min(minima[m].value for m in cands)
    tied = [m for m in cands if minima[m].value <= vmin + tol_value]
    return (max if reverse else min)(tied, key=lambda m: minima[m].location)


def adapted_labeling(F, analysis, reverse_ties=False):
    """Label the minima level by level so that each T_k is a bijection.

    Level 1 is the whole domain and gets the global minimum.  At each lower
    separating value σ_k, components of ``{W < σ_k}`` that hold no earlier
    label get a new label: their global minimum, ties broken by the smallest
    location (largest with ``reverse_ties``).
    """
    A = analysis
    minima = A.minima
    tolv = A.tol_value
    levels = [math.inf] + list(A.sigma_values)
    everything = frozenset(range(len(minima)))
    components = {1: [everything]}

    for k, sig in enumerate(A.sigma_values, start=2):
        components[k] = A.snapshots[sig].components()

    labels = {_pick(everything, minima, tolv, reverse_ties): (1, 1)}
    for k in range(2, len(levels) + 1):
        new = []
        for comp in components[k]:
            old = [m for m in comp if m in labels]
            if len(old) > 1:
                raise LabelingError(
                    f"component at level {levels[k - 1]:.6g} holds labels {old}; "
                    "tol_value may be too large")
            if not old:
                new.append(_pick(comp, minima, tolv, reverse_ties))
        new.sort(key=lambda m: (minima[m].value, minima[m].location))
        for j, m in enumerate(new, start=1):
            labels[m] = (k, j)
    if len(labels) != len(minima):
        missing = sorted(set(range(len(minima))) - set(labels))
        raise LabelingError(f"minima {missing} received no label")

    L = LabeledLandscape(minima=minima, saddles=A.saddles, separating=A.separating,
                         sigma_levels=levels, labels=labels, components=components,
                         E_map={}, j_map={}, sigma_map={}, S_map={}, sides=A.sides,
                         tol_value=tolv)
    for m, (k, _) in labels.items():
        comp = L.component_at(m, k)
        if comp is None or L.label_in(comp, k) != m:
            raise LabelingError(f"T_{k} fails to be bijective at minimum {m}")
        L.E_map[m] = comp
        if k == 1:
            L.j_map[m] = frozenset({FICTIVE_SADDLE})
            L.sigma_map[m] = math.inf
            L.S_map[m] = math.inf
        else:
            js = L.saddles_on(comp, k)
            if not js:
                raise LabelingError(f"minimum {m} has an empty saddle set")
            L.j_map[m] = js
            L.sigma_map[m] = levels[k - 1]
            L.S_map[m] = levels[k - 1] - minima[m].value
    return L


def hat_and_types(L):
    """Fill the hat map and the type I/II split in place; returns ``L``."""
    for m, (k, _) in L.labels.items():
        if k == 1:
            continue
        outer = L.component_at(m, k - 1)
        hat = L.label_in(outer, k - 1)
        L.hat_map[m] = hat
        gap = L.minima[m].value - L.minima[hat].value
        if gap < -L.tol_value:
            raise LabelingError(f"hat of minimum {m} lies above it")
        L.type_map[m] = "II" if gap <= L.tol_value else "I"
    return L


def equivalence_classes(L):
    """Group the non-global minima into classes; fills ``L.classes`` in place.

    Two components of ``{W < σ_k}`` have touching closures exactly when a
    separating saddle of value σ_k sits between them, so the chains run over
    the recorded saddle sides.
    """
    classes = []
    for k in range(2, len(L.sigma_levels) + 1):
        members = sorted(m for m, lab in L.labels.items() if lab[0] == k)
        if not members:
            continue
        nodes = set(members) | {L.hat_map[m] for m in members if L.type_map[m] == "II"}
        comp = {n: L.component_at(n, k) for n in nodes}
        parent = {n: n for n in nodes}

        def find(n):
            while parent[n] != n:
                n = parent[n]
            return n

        for a, b in itertools.combinations(sorted(nodes), 2):
            if touching(L, comp[a], comp[b], k):
                parent[find(a)] = find(b)
        groups = {}
        for m in members:
            groups.setdefault(find(m), []).append(m)
        for grp in sorted(groups.values()):
            hats = {L.hat_map[m] for m in grp}
            if len(hats) != 1:
                raise LabelingError(f"class {grp} has several hats {sorted(hats)}")
            hat = hats.pop()
            c = ClassData(level=k, sigma=L.sigma_levels[k - 1], members=tuple(grp), hat=hat)
            for m in c.hat_members:
                c.E[m] = L.component_at(m, k)
                c.j[m] = L.saddles_on(c.E[m], k)
                if not c.j[m]:
                    raise LabelingError(f"empty saddle set for {m} in class {grp}")
            classes.append(c)
    classes.sort(key=lambda c: (c.level, c.members))
    L.classes = classes
    total = sum(len(c.members) for c in classes)
    if total != L.n0 - 1:
        raise LabelingError(f"classes cover {total} minima, expected {L.n0 - 1}")
    return L


def touching(L, A, B, k):
    sig = L.sigma_levels[k - 1]
    return any(set(pair) == {A, B} and abs(L.saddles[i].value - sig) <= L.tol_value
               for i, pair in L.sides.items())


def analyze_landscape(P, nodes_per_axis=None, pts=None, reverse_ties=False,
                      tol_value=None, seeds_per_axis=32):
    """Full chain: critical points, filtration, saddles, labels, hats, classes."""
    if pts is None:
        pts = find_critical_points(P, seeds_per_axis=seeds_per_axis)
    if nodes_per_axis is None:
        nodes_per_axis = 2049 if P.dimension == 1 else 257
    F = build_filtration(P, nodes_per_axis)
    A = separating_saddles(F, pts, tol_value=tol_value)
    L = adapted_labeling(F, A, reverse_ties=reverse_ties)
    hat_and_types(L)
    equivalence_classes(L)
    L.critical_points = pts
    return L
