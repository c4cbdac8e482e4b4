"""Run configuration, the analyze/predict/verify/sweep pipelines and report output."""

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .eigensolvers import count_small_spectrum, smallest_eigenvalues
from .errors import ConfigError, CountMismatchError, HypothesisError
from .landscape import FICTIVE_SADDLE, analyze_landscape
from .operators import build_random_walk_matrix, build_witten_matrix, nodes_for_ratio
from .potential import find_critical_points, parse_potential, validate_hypotheses
from .spectral import RHO_WITTEN, predict_spectrum, rho_random_walk

SCHEMA_VERSION = 1
CSV_HEADER = ["h", "level", "predicted", "computed", "ratio", "prefactor"]


@dataclass
class RunConfig:
    expression: str
    dimension: int
    domain: list
    nodes_per_axis: int = None
    topology_nodes_per_axis: int = None
    walk_ratio: float = 20.5
    seeds_per_axis: int = 32
    kind: str = "witten"
    h: float = None
    h_list: list = None
    window_c: float = None
    tolerances: dict = field(default_factory=dict)
    output_directory: str = None
    formats: list = field(default_factory=lambda: ["json", "csv"])

    def potential(self):
        return parse_potential(self.expression, self.dimension, self.domain)

    @classmethod
    def from_dict(cls, data):
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
        try:
            pot = data["potential"]
            cfg = cls(expression=pot["expression"], dimension=int(pot["dimension"]),
                      domain=[list(map(float, ax)) for ax in pot["domain"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad potential section: {exc}") from exc
        grid = data.get("grid", {})
        cfg.nodes_per_axis = grid.get("nodes_per_axis")
        cfg.topology_nodes_per_axis = grid.get("topology_nodes_per_axis")
        cfg.walk_ratio = float(grid.get("walk_ratio", cfg.walk_ratio))
        cfg.seeds_per_axis = int(grid.get("seeds_per_axis", cfg.seeds_per_axis))
        op = data.get("operator", {})
        cfg.kind = _kind(op.get("kind", cfg.kind))
        cfg.h = op.get("h")
        cfg.h_list = op.get("h_list")
        cfg.window_c = op.get("window_c")
        cfg.tolerances = dict(data.get("tolerances", {}))
        out = data.get("output", {})
        cfg.output_directory = out.get("directory")
        cfg.formats = list(out.get("formats", cfg.formats))
        cfg.validate()
        return cfg

    def validate(self):
        if self.dimension not in (1, 2):
            raise ConfigError("dimension must be 1 or 2")
        if len(self.domain) != self.dimension:
            raise ConfigError("domain needs one [lower, upper] pair per axis")
        positive = {"nodes_per_axis": self.nodes_per_axis,
                    "topology_nodes_per_axis": self.topology_nodes_per_axis,
                    "walk_ratio": self.walk_ratio, "h": self.h,
                    "window_c": self.window_c, "seeds_per_axis": self.seeds_per_axis}
        positive.update(self.tolerances)
        for name, v in positive.items():
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"{name} must be a positive number")
        if self.h_list is not None:
            hs = [float(v) for v in self.h_list]
            if any(v <= 0 for v in hs) or any(b <= a for a, b in zip(hs, hs[1:])):
                raise ConfigError("h_list must be positive and strictly increasing")
            self.h_list = hs
        unknown = set(self.tolerances) - {"tol_grad", "tol_morse", "tol_dedup", "tol_value",
                                          "solver_tol", "boundary_margin"}
        if unknown:
            raise ConfigError(f"unknown tolerances {sorted(unknown)}")


def _kind(name):
    aliases = {"walk": "random_walk", "random_walk": "random_walk", "witten": "witten"}
    if name not in aliases:
        raise ConfigError(f"unknown operator kind {name!r}")
    return aliases[name]


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(data)


def rho_for(kind, dimension):
    return RHO_WITTEN if kind == "witten" else rho_random_walk(dimension)


# ---- analyze ------------------------------------------------------------------

def _landscape(cfg):
    P = cfg.potential()
    tol = cfg.tolerances
    pts = find_critical_points(P, seeds_per_axis=cfg.seeds_per_axis,
                               tol_grad=tol.get("tol_grad"), tol_morse=tol.get("tol_morse"),
                               tol_dedup=tol.get("tol_dedup"))
    report = validate_hypotheses(P, pts, margin=tol.get("boundary_margin", 1.5),
                                 tol_value=tol.get("tol_value"))
    if not report.passed:
        raise HypothesisError("; ".join(report.violations), report=report)
    L = analyze_landscape(P, nodes_per_axis=cfg.topology_nodes_per_axis, pts=pts,
                          tol_value=report.tol_value)
    return P, pts, report, L


def _num(v):
    # JSON has no infinity; +∞ is written as null
    if v is None or (isinstance(v, float) and math.isinf(v)):
        return None
    return float(v)


def landscape_dict(L):
    minima = []
    for m, cp in enumerate(L.minima):
        js = sorted(L.j_map[m])
        minima.append({
            "id": m,
            "location": list(cp.location),
            "value": cp.value,
            "hessian_eigenvalues": list(cp.hessian_eigenvalues),
            "label": list(L.labels[m]),
            "sigma": _num(L.sigma_map[m]),
            "S": _num(L.S_map[m]),
            "j": ["fictive" if s == FICTIVE_SADDLE else s for s in js],
            "hat": L.hat_map.get(m),
            "type": L.type_map.get(m),
        })
    saddles = [{"id": i, "location": list(s.location), "value": s.value,
                "hessian_eigenvalues": list(s.hessian_eigenvalues),
                "separating": i in L.separating}
               for i, s in enumerate(L.saddles)]
    classes = [{"level": c.level, "sigma": c.sigma, "members": list(c.members),
                "hat": c.hat,
                "j": {str(m): sorted(c.j[m]) for m in c.hat_members}}
               for c in L.classes]
    return {"n0": L.n0,
            "sigma_levels": [_num(s) for s in L.sigma_levels],
            "minima": minima, "saddles": saddles, "classes": classes}


def run_analyze(cfg):
    P, pts, report, L = _landscape(cfg)
    out = {"schema_version": SCHEMA_VERSION, "command": "analyze",
           "potential": {"expression": cfg.expression, "dimension": cfg.dimension,
                         "domain": cfg.domain},
           "critical_points": [{"location": list(c.location), "value": c.value,
                                "index": c.index,
                                "hessian_eigenvalues": list(c.hessian_eigenvalues),
                                "hessian_det": c.hessian_det} for c in pts],
           "validation": {"passed": report.passed, "n0": report.n0,
                          "violations": report.violations,
                          "equal_value_groups": report.equal_value_groups,
                          "boundary_min": report.boundary_min}}
    out.update(landscape_dict(L))
    return out


# ---- predict ------------------------------------------------------------------

def run_predict(cfg, h, rho):
    _, _, _, L = _landscape(cfg)
    pred = predict_spectrum(L, rho, h)
    return {"schema_version": SCHEMA_VERSION, "command": "predict", "h": h, "rho": rho,
            "n0": L.n0,
            "groups": [{"S_hat": g.S_hat, "prefactors": g.prefactors.tolist(),
                        "scale": g.scale, "eigenvalues": g.eigenvalues.tolist()}
                       for g in pred.groups],
            "eigenvalues": pred.values.tolist()}


# ---- verify / sweep ---------------------------------------------------------------

@dataclass
class VerificationRow:
    h: float
    level: float
    predicted: float
    computed: float
    ratio: float
    prefactor: float


@dataclass
class VerifyResult:
    h: float
    kind: str
    nodes: int
    rows: list
    eigenvalues: list
    residuals: list
    window: float
    count: int
    n0: int
    gap_ratio: float
    method: str


def default_window_c(L, rho):
    """0.1 · ϱ · smallest positive Hessian eigenvalue over the minima."""
    return 0.1 * rho * min(min(m.hessian_eigenvalues) for m in L.minima)


def build_operator(P, cfg, kind, h, nodes=None):
    if kind == "witten":
        nodes = nodes or cfg.nodes_per_axis or (4001 if P.dimension == 1 else 257)
        return build_witten_matrix(P, nodes, h), nodes
    nodes = nodes or nodes_for_ratio(P, h, cfg.walk_ratio)
    return build_random_walk_matrix(P, nodes, h), nodes


def pair_rows(pred, computed_nonzero, h):
    """Pair predictions with computed eigenvalues, both in ascending order."""
    rows = []
    for (S_hat, pref, value), lam in zip(pred.entries(), computed_nonzero):
        scale = h * math.exp(-2.0 * S_hat / h)
        rows.append(VerificationRow(h=h, level=S_hat, predicted=value, computed=float(lam),
                                    ratio=float(lam) / scale, prefactor=pref))
    return rows


def verify_landscape(P, L, cfg, kind, h, nodes=None, window_c=None, strict=True):
    rho = rho_for(kind, P.dimension)
    pred = predict_spectrum(L, rho, h)
    op, nodes = build_operator(P, cfg, kind, h, nodes)
    k = min(L.n0 + 2, 12)
    spec = smallest_eigenvalues(op, k, tol=cfg.tolerances.get("solver_tol", 1e-10))
    c = window_c or cfg.window_c or default_window_c(L, rho)
    count = count_small_spectrum(spec, c, h)
    lam = spec.eigenvalues
    if strict and count != L.n0:
        raise CountMismatchError(
            f"{count} eigenvalues in [0, {c * h:.4g}] at h={h}, expected n0={L.n0}")
    gap = float(lam[L.n0] / lam[L.n0 - 1]) if len(lam) > L.n0 and lam[L.n0 - 1] > 0 else math.nan
    rows = pair_rows(pred, lam[1:L.n0], h)
    return VerifyResult(h=h, kind=kind, nodes=nodes, rows=rows, eigenvalues=lam.tolist(),
                        residuals=spec.residuals.tolist(), window=c * h, count=count,
                        n0=L.n0, gap_ratio=gap, method=spec.method)


def run_verify(cfg, h, kind=None, nodes=None, window_c=None):
    P, _, _, L = _landscape(cfg)
    return verify_landscape(P, L, cfg, kind or cfg.kind, h, nodes, window_c)


def fit_prefactor(hs, ratios):
    """Least-squares fit ``ratio(h) = C0 + C1·h``; returns ``(C0, C1, residual)``."""
    hs = np.asarray(hs, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    ok = np.isfinite(hs) & np.isfinite(ratios)
    if ok.sum() < 3:
        raise ValueError("fit_prefactor needs at least 3 finite points")
    X = np.column_stack([np.ones(ok.sum()), hs[ok]])
    coef, *_ = np.linalg.lstsq(X, ratios[ok], rcond=None)
    resid = float(np.linalg.norm(X @ coef - ratios[ok]))
    return float(coef[0]), float(coef[1]), resid


@dataclass
class PrefactorFit:
    level: float
    rank: int          # position within the level's predicted group
    predicted: float
    C0: float
    C1: float
    residual: float

    @property
    def relative_error(self):
        return abs(self.C0 - self.predicted) / self.predicted


def fit_rows(rows):
    """Group rows by (level, rank within level) across h and fit each group."""
    groups = {}
    for h in sorted({r.h for r in rows}):
        at_h = [r for r in rows if r.h == h]
        for lvl in sorted({r.level for r in at_h}):
            same = sorted((r for r in at_h if r.level == lvl), key=lambda r: r.prefactor)
            for rank, r in enumerate(same):
                groups.setdefault((lvl, rank), []).append(r)
    fits = []
    for (lvl, rank), rs in sorted(groups.items()):
        if len(rs) < 3:
            continue
        C0, C1, res = fit_prefactor([r.h for r in rs], [r.ratio for r in rs])
        fits.append(PrefactorFit(level=lvl, rank=rank, predicted=rs[0].prefactor,
                                 C0=C0, C1=C1, residual=res))
    return fits


def run_sweep(cfg, h_list=None, kind=None, fit=True, nodes=None, window_c=None):
    h_list = h_list or cfg.h_list
    if not h_list:
        raise ConfigError("sweep needs an h list")
    P, _, _, L = _landscape(cfg)
    kind = kind or cfg.kind
    smax = max(g.S_hat for g in predict_spectrum(L, 1.0, 1.0).groups)
    for h in h_list:
        if 2 * smax / h > 30:
            warnings.warn(f"2Ŝ/h = {2 * smax / h:.1f} > 30 at h={h}: the dense route is "
                          "below double precision there", stacklevel=2)
    results = [verify_landscape(P, L, cfg, kind, h, nodes, window_c) for h in h_list]
    rows = [r for res in results for r in res.rows]
    fits = fit_rows(rows) if fit else []
    return results, fits


# ---- output -----------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def to_json(payload):
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def rows_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([repr(float(getattr(r, c))) for c in CSV_HEADER])
    return buf.getvalue()


def verification_payload(command, results, fits=()):
    return {"schema_version": SCHEMA_VERSION, "command": command,
            "runs": [asdict(r) for r in results],
            "fits": [dict(asdict(f), relative_error=f.relative_error) for f in fits]}


def emit_report(payload, out, formats=("json",), rows=None):
    """Write ``payload`` as ``<out>.json`` and ``rows`` as ``<out>.csv``.

    Output depends only on the inputs (sorted keys, ``repr`` floats, no
    timestamps), so identical runs give identical bytes.  Returns the paths.
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("") if out.suffix in (".json", ".csv") else out
    paths = []
    if "json" in formats:
        p = stem.with_suffix(".json")
        p.write_text(to_json(payload))
        paths.append(p)
    if "csv" in formats and rows is not None:
        p = stem.with_suffix(".csv")
        p.write_text(rows_csv(rows))
        paths.append(p)
    return paths
