"""Independent reference implementations used by the tests.

Nothing here imports the landscape or spectral modules: the flood-fill
oracle recomputes the labeling from scratch with ``scipy.ndimage.label`` and
polynomial roots, and closure contact is judged on the grid, one cell apart.
"""

import math

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import ndimage


# ---- random confining polynomials ---------------------------------------------

def random_confining_polynomial(rng, min_sep=0.3, min_gap_frac=0.03):
    """A random degree-8 polynomial with 4 minima and 3 maxima.

    W' = c·Π(x − r_i) over 7 separated roots with c > 0, so W grows at both
    ends.  Draws with nearly equal critical values are rejected so that the
    grid can resolve every level.  Returns ``(coeffs, roots, domain)`` with
    ascending-power coefficients.
    """
    while True:
        roots = np.sort(rng.uniform(-2.0, 2.0, 7))
        if np.min(np.diff(roots)) < min_sep:
            continue
        dcoef = npoly.polyfromroots(roots)
        coef = npoly.polyint(dcoef)
        vals = npoly.polyval(roots, coef)
        span = vals.max() - vals.min()
        coef = coef / span          # critical values span exactly 1
        coef = coef + rng.uniform(-0.5, 0.5) * np.eye(len(coef))[0]
        vals = npoly.polyval(roots, coef)
        gaps = np.diff(np.sort(vals))
        if gaps.min() < min_gap_frac:
            continue
        lo, hi = roots[0], roots[-1]
        need = vals.min() + 1.5 * (vals.max() - vals.min()) + 0.1
        while npoly.polyval(lo, coef) <= need:
            lo -= 0.05
        while npoly.polyval(hi, coef) <= need:
            hi += 0.05
        return coef, roots, (float(lo), float(hi))


def horner_source(coef):
    """Expression text for the polynomial with ascending coefficients ``coef``."""
    text = repr(float(coef[-1]))
    for c in coef[-2::-1]:
        text = f"({text})*x + ({float(c)!r})"
    return text


# ---- flood-fill labeling oracle ---------------------------------------------

def floodfill_labeling(coef, domain, nodes, tol_value=None):
    """Labels, S, hats, types and classes of a 1D polynomial, by flood fill.

    Critical points come from the roots of W'; components of ``{W < σ}``
    come from ``ndimage.label`` at each level shifted by ±ε.  Minima are ids
    in increasing (value, location) order, saddles likewise.
    """
    dcoef = npoly.polyder(coef)
    crit = np.sort(np.real(npoly.polyroots(dcoef)[np.abs(np.imag(npoly.polyroots(dcoef))) < 1e-9]))
    d2 = npoly.polyval(crit, npoly.polyder(dcoef))
    W = lambda x: npoly.polyval(x, coef)  # noqa: E731
    minima = sorted(((float(W(c)), float(c)) for c, s in zip(crit, d2) if s > 0))
    saddles = sorted(((float(W(c)), float(c)) for c, s in zip(crit, d2) if s < 0))
    allv = sorted(v for v, _ in minima + saddles)
    span = allv[-1] - allv[0]
    tol_value = 1e-9 * span if tol_value is None else tol_value
    gaps = [b - a for a, b in zip(allv, allv[1:]) if b - a > tol_value]
    eps = min(gaps) / 10.0

    x = np.linspace(domain[0], domain[1], nodes)
    delta = x[1] - x[0]
    Wg = W(x)
    min_node = [int(np.argmin(np.abs(x - loc))) for _, loc in minima]
    sad_node = [int(np.argmin(np.abs(x - loc))) for _, loc in saddles]

    # in 1D every interior maximum separates; confirm with the ±ε flood fill
    separating = []
    for i, (v, _) in enumerate(saddles):
        below, _ = ndimage.label(Wg < v - eps)
        above, _ = ndimage.label(Wg < v + eps)
        loc = saddles[i][1]
        lmin = max((q for q in range(len(minima)) if minima[q][1] < loc),
                   key=lambda q: minima[q][1], default=None)
        rmin = min((q for q in range(len(minima)) if minima[q][1] > loc),
                   key=lambda q: minima[q][1], default=None)
        if lmin is None or rmin is None:
            continue
        left, right = below[min_node[lmin]], below[min_node[rmin]]
        if left and right and left != right and above[min_node[lmin]] == above[min_node[rmin]]:
            separating.append(i)
    sig = []
    for v in sorted((saddles[i][0] for i in separating), reverse=True):
        if not sig or sig[-1] - v > tol_value:
            sig.append(v)
    levels = [math.inf] + sig

    def comps_at(k):
        if k == 1:
            lab = np.ones(nodes, dtype=int)
        else:
            lab, _ = ndimage.label(Wg < levels[k - 1] - eps)
        return lab

    def pick(cands, reverse=False):
        vmin = min(minima[m][0] for m in cands)
        tied = [m for m in cands if minima[m][0] <= vmin + tol_value]
        return (max if reverse else min)(tied, key=lambda m: minima[m][1])

    labels = {pick(range(len(minima))): (1, 1)}
    labs = {1: comps_at(1)}
    for k in range(2, len(levels) + 1):
        lab = comps_at(k)
        labs[k] = lab
        by_comp = {}
        for m, node in enumerate(min_node):
            if lab[node]:
                by_comp.setdefault(lab[node], []).append(m)
        new = []
        for comp, ms in by_comp.items():
            if not any(m in labels for m in ms):
                new.append(pick(ms))
        new.sort(key=lambda m: minima[m])
        for j, m in enumerate(new, start=1):
            labels[m] = (k, j)

    def mask(m, k):
        lab = labs[k]
        return lab == lab[min_node[m]]

    def at_level(k):
        return [i for i in separating if abs(saddles[i][0] - levels[k - 1]) <= tol_value]

    def cut_mask(m, k):
        # {W < σ_k} with the cells next to the level-σ_k saddles removed, so
        # the closure of a component reaches each of its saddles within a cell
        keep = Wg < levels[k - 1]
        for i in at_level(k):
            keep[max(sad_node[i] - 1, 0):sad_node[i] + 2] = False
        lab, _ = ndimage.label(keep)
        return lab == lab[min_node[m]]

    def grow(mask_):
        return ndimage.binary_dilation(mask_, iterations=2)

    def saddles_touching(m, k):
        grown = grow(cut_mask(m, k))
        return frozenset(i for i in at_level(k) if grown[sad_node[i]])

    S, j_sets, hats, types = {}, {}, {}, {}
    for m, (k, _) in labels.items():
        if k == 1:
            S[m] = math.inf
            continue
        S[m] = levels[k - 1] - minima[m][0]
        j_sets[m] = saddles_touching(m, k)
        outer = mask(m, k - 1)
        hat = [q for q, (kq, _) in labels.items() if kq <= k - 1 and outer[min_node[q]]]
        assert len(hat) == 1
        hats[m] = hat[0]
        types[m] = "II" if minima[m][0] - minima[hat[0]][0] <= tol_value else "I"

    classes = []
    for k in range(2, len(levels) + 1):
        members = [m for m, lab in labels.items() if lab[0] == k]
        if not members:
            continue
        nodes_ = set(members) | {hats[m] for m in members if types[m] == "II"}
        masks = {q: cut_mask(q, k) for q in nodes_}
        grown = {q: grow(masks[q]) for q in nodes_}
        parent = {q: q for q in nodes_}

        def find(q):
            while parent[q] != q:
                q = parent[q]
            return q

        for a in nodes_:
            for b in nodes_:
                if a < b and not np.array_equal(masks[a], masks[b]) \
                        and np.any(grown[a] & grown[b]):
                    parent[find(a)] = find(b)
        groups = {}
        for m in members:
            groups.setdefault(find(m), []).append(m)
        for g in groups.values():
            classes.append((tuple(sorted(g)), hats[g[0]]))
    return {
        "minima": minima, "saddles": saddles, "levels": levels, "labels": labels,
        "S": S, "j": j_sets, "hats": hats, "types": types,
        "classes": sorted(classes), "delta": delta,
    }


# ---- closed-form pieces ---------------------------------------------------------

def kramers_prefactor(w_min, w_sad, rho=1.0):
    """Leading prefactor of a single well escaping over a single saddle in 1D:
    (1/2π)·sqrt(W''(m)/|W''(s)|)·2ϱ|W''(s)|."""
    return (1.0 / (2 * math.pi)) * math.sqrt(w_min / abs(w_sad)) * 2 * rho * abs(w_sad)
