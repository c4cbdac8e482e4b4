import json
from pathlib import Path

import pytest

from metastable.cli import main
from metastable.errors import ConfigError, CountMismatchError
from metastable.report import (CSV_HEADER, RunConfig, VerificationRow, fit_prefactor,
                               fit_rows, rows_csv, run_analyze, run_verify, to_json)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
DW = CONFIGS / "double_well.json"


def cfg_dict(**over):
    d = {"schema_version": 1,
         "potential": {"expression": "0.1*(x^2-1)^2", "dimension": 1, "domain": [[-2.5, 2.5]]},
         "grid": {"nodes_per_axis": 2001}}
    d.update(over)
    return d


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_fit_exact_linear_data():
    hs = [0.02, 0.025, 0.03]
    C0, C1, res = fit_prefactor(hs, [0.36 + 0.5 * h for h in hs])
    assert C0 == pytest.approx(0.36, abs=1e-12) and C1 == pytest.approx(0.5, abs=1e-9)
    assert res < 1e-12


def test_fit_constant_rows():
    C0, C1, _ = fit_prefactor([0.1, 0.2, 0.3], [0.7, 0.7, 0.7])
    assert C0 == pytest.approx(0.7) and C1 == pytest.approx(0.0, abs=1e-12)


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_prefactor([0.1, 0.2], [1.0, 1.0])
    with pytest.raises(ValueError):
        fit_prefactor([0.1, 0.2, 0.3], [1.0, float("nan"), 1.0])


def test_fit_rows_groups_by_level():
    rows = [VerificationRow(h=h, level=s, predicted=0.0, computed=0.0,
                            ratio=c + h, prefactor=c)
            for h in (0.1, 0.2, 0.3) for s, c in ((0.1, 1.0), (0.2, 2.0))]
    fits = fit_rows(rows)
    assert [(f.level, f.predicted) for f in fits] == [(0.1, 1.0), (0.2, 2.0)]
    assert all(f.relative_error < 1e-12 for f in fits)


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.from_dict(cfg_dict(schema_version=2))
    with pytest.raises(ConfigError):
        RunConfig.from_dict(cfg_dict(grid={"nodes_per_axis": -3}))
    with pytest.raises(ConfigError):
        RunConfig.from_dict(cfg_dict(operator={"h_list": [0.03, 0.02]}))
    with pytest.raises(ConfigError):
        RunConfig.from_dict(cfg_dict(tolerances={"tol_bogus": 1.0}))
    with pytest.raises(ConfigError):
        RunConfig.from_dict(cfg_dict(operator={"kind": "diffusion"}))


def test_analyze_report():
    cfg = RunConfig.from_dict(cfg_dict())
    rep = run_analyze(cfg)
    assert rep["n0"] == 2 and len(rep["classes"]) == 1
    (c,) = rep["classes"]
    plus = c["members"][0]
    assert rep["minima"][plus]["S"] == pytest.approx(0.1)
    assert rep["sigma_levels"][0] is None      # +∞ is written as null
    text = to_json(rep)
    assert text == to_json(run_analyze(RunConfig.from_dict(cfg_dict())))


def test_verify_rows_and_csv():
    cfg = RunConfig.from_dict(cfg_dict(grid={"nodes_per_axis": 4001}))
    res = run_verify(cfg, 0.02, "witten")
    assert len(res.rows) == 1 and res.count == 2
    r = res.rows[0]
    assert r.prefactor == pytest.approx(0.3601265, rel=1e-6)
    assert abs(r.ratio / r.prefactor - 1) < 0.10
    csv = rows_csv(res.rows).splitlines()
    assert csv[0] == ",".join(CSV_HEADER) == "h,level,predicted,computed,ratio,prefactor"
    assert len(csv) == 2


def test_walk_verify_example():
    cfg = RunConfig.from_dict(cfg_dict())
    res = run_verify(cfg, 0.04, "random_walk")
    assert abs(res.rows[0].ratio / 0.060021 - 1) < 0.15


def test_verify_fails_loudly_on_count_mismatch():
    cfg = RunConfig.from_dict(cfg_dict())
    with pytest.raises(CountMismatchError), pytest.warns(UserWarning, match="window edge"):
        run_verify(cfg, 0.05, "witten", window_c=1e-12)


# ---- command line --------------------------------------------------------------

def test_cli_analyze_stdout(capsys):
    assert main(["analyze", "--config", str(DW)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["command"] == "analyze" and len(out["classes"]) == 1


def test_cli_predict(capsys):
    assert main(["predict", "--config", str(DW), "--h", "0.02", "--rho", "witten"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["eigenvalues"][1] == pytest.approx(3.270e-7, rel=1e-3)
    assert main(["predict", "--config", str(DW), "--h", "0.02", "--rho", "walk"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["eigenvalues"][1] == pytest.approx(5.450e-8, rel=1e-3)


def test_cli_verify_files_are_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        stem = tmp_path / f"run{i}" / "verify"
        assert main(["verify", "--config", str(DW), "--h", "0.03", "--operator", "witten",
                     "--out", str(stem)]) == 0
        outs.append((stem.with_suffix(".json").read_bytes(), stem.with_suffix(".csv").read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][1].startswith(b"h,level,predicted,computed,ratio,prefactor\n")


def test_cli_sweep_fit(tmp_path):
    stem = tmp_path / "sweep"
    assert main(["sweep", "--config", str(DW), "--h-list", "0.03,0.035,0.04",
                 "--operator", "witten", "--fit", "--out", str(stem)]) == 0
    rep = json.loads(stem.with_suffix(".json").read_text())
    (fit,) = rep["fits"]
    assert fit["relative_error"] < 0.05


def test_cli_exit_codes(tmp_path, capsys):
    single = str(CONFIGS / "single_well.json")
    assert main(["analyze", "--config", single]) == 2
    assert main(["verify", "--config", str(DW), "--h", "0.05", "--operator", "walk",
                 "--nodes", "101"]) == 3
    with pytest.warns(UserWarning, match="window edge"):
        assert main(["verify", "--config", str(DW), "--h", "0.05", "--operator", "witten",
                     "--window-c", "1e-12"]) == 4
    bad = write_cfg(tmp_path, {"schema_version": 7})
    assert main(["analyze", "--config", bad]) == 1
    assert main(["analyze", "--config", str(tmp_path / "missing.json")]) == 1
    err = capsys.readouterr().err
    assert "hypothesis" in err and "count mismatch" in err
