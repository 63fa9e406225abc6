import csv
import json
from pathlib import Path

import numpy as np
import pytest

from epsheath.cli import run_cli
from epsheath.config import RunConfig, load_config, parse_bumps, parse_config
from epsheath.core import FieldState, Grid, PlasmaParams
from epsheath.diagnostics import NDJSONWriter, RunReport, RunningSup, energy_functional, read_ndjson
from epsheath.errors import ConfigError, TemperatureNonpositive
from epsheath.halfline import build_background

CONFIGS = Path(__file__).resolve().parent.parent / "scripts" / "configs"


def test_energy_zero_and_constant_cell():
    g = Grid(1, 1.0, 10)
    bg = build_background(PlasmaParams(), g)
    st = FieldState.zeros(g)
    assert energy_functional(st, bg, g, 0.25) == 0
    c = 0.3
    st.Psi[0] = c
    # theta = 1, R = 1: integrand c^2 + R theta c^2 on a unit cell
    assert energy_functional(st, bg, g, 0.0) == pytest.approx(2 * c * c, rel=1e-14)
    st.Psi[-1] = -2.0
    with pytest.raises(TemperatureNonpositive):
        energy_functional(st, bg, g, 0.0)


def test_energy_gradient_terms():
    g = Grid(1, 2.0, 2000)
    bg = build_background(PlasmaParams(), g)
    st = FieldState.zeros(g)
    st.Psi[1] = g.y1  # div eta = 1, <A0 eta, eta> = m y^2
    e = energy_functional(st, bg, g, 0.0)
    assert e == pytest.approx(2.0 + 8.0 / 3.0, rel=1e-6)


def test_running_sup():
    r = RunningSup()
    r.update([1, 2, 3, 4])
    assert r.update([2, 1, 1, 5]) == [2, 2, 3, 5]


def test_ndjson_torn_line(tmp_path):
    path = tmp_path / "run.ndjson"
    with NDJSONWriter(path) as w:
        for k in range(3):
            w.write({"t": float(k), "psi_norms": [1.0, 2.0, 3.0, 4.0], "sigma_norms": [0.0] * 3})
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('{"t": 3.0, "psi_no')
    recs = read_ndjson(path)
    assert len(recs) == 3 and all(r["schema"] == 1 for r in recs)
    RunReport(recs).validate()
    with pytest.raises(ValueError):
        RunReport([{"t": 1.0}, {"t": 1.0}]).validate()


def test_parse_config_errors():
    with pytest.raises(ConfigError, match="unknown key 'foo'"):
        parse_config("foo = 1")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("m = 1\nm = 2")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config("n1 = many")
    with pytest.raises(ConfigError, match="'theta_plus'"):
        RunConfig.from_dict(parse_config("m=1\nR=1\ngamma=1.5\nu_plus=-2\nphi_b=0\ndim=1\nn1=10"))
    assert parse_bumps("0.5,0,2; 0.1,3,1") == ((0.5, 0.0, 2.0), (0.1, 3.0, 1.0))


def test_load_configs():
    c = load_config(CONFIGS / "bumped_wall_2d.cfg")
    assert c.boundary.bumps == ((0.5, 0.0, 2.0),) and c.grid().shape == (257, 128)
    assert load_config(CONFIGS / "canonical_1d.cfg").params == PlasmaParams(phi_b=-0.05)


def test_cli_stationary1d(tmp_path):
    assert run_cli(["stationary1d", "--config", str(CONFIGS / "canonical_1d.cfg"), "--out", str(tmp_path),
                    "--quiet"]) == 0
    with open(tmp_path / "profile.csv", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x1", "rho", "u", "theta", "phi", "dphi"] and len(rows) == 2002
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["residual"]["max"] < 1e-8
    assert summary["alpha_fit"] == pytest.approx(np.sqrt(4 / 7), rel=0.05)


def test_cli_missing_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("m = 1\nR = 1\ngamma = 1.5\nu_plus = -2\ntheta_plus = 1\ndim = 1\nn1 = 10\n")
    assert run_cli(["stationary1d", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("EPSH-ERR:") and "phi_b" in err


def test_cli_check_matrices(tmp_path, capsys):
    assert run_cli(["check-matrices", "--config", str(CONFIGS / "canonical_1d.cfg"), "--out", str(tmp_path)]) == 0
    assert run_cli(["check-matrices", "--config", str(CONFIGS / "bohm_violating.cfg"), "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err
    assert err.startswith("EPSH-ERR:") and "bohm_margin" in err


def test_cli_bohm_scan(tmp_path):
    assert run_cli(["bohm-scan", "--samples", "40", "--seed", "7", "--out", str(tmp_path), "--quiet"]) == 0
    lines = (tmp_path / "bohm_scan.csv").read_text().splitlines()
    assert len(lines) == 41 and "MISMATCH" not in "".join(lines)


def test_cli_evolve_report_resume(tmp_path):
    cfg = tmp_path / "e.cfg"
    cfg.write_text((CONFIGS / "bump_1d.cfg").read_text().replace("n1 = 400", "n1 = 100").replace(
        "t_end = 60", "t_end = 3") + "L1 = 20\n")
    out = tmp_path / "run"
    assert run_cli(["evolve", "--config", str(cfg), "--out", str(out), "--quiet", "--checkpoint-every", "20"]) == 0
    assert (out / "final.epsh").is_file() and (out / "checkpoint.epsh").is_file()
    rep = RunReport.from_ndjson(out / "run.ndjson")
    rep.validate()
    rdir = tmp_path / "rep"
    rdir.mkdir()
    before = (out / "run.ndjson").read_bytes()
    assert run_cli(["report", str(out / "run.ndjson"), "--out", str(rdir), "--quiet"]) == 0
    text = (rdir / "summary.txt").read_text()
    assert run_cli(["report", str(out / "run.ndjson"), "--out", str(rdir), "--quiet"]) == 0
    assert (rdir / "summary.txt").read_text() == text and (out / "run.ndjson").read_bytes() == before
    assert "import json" in (rdir / "plot_report.py").read_text()
    res = tmp_path / "res"
    assert run_cli(["evolve", "--config", str(cfg), "--out", str(res), "--quiet",
                    "--resume", str(out / "checkpoint.epsh")]) == 0
    assert run_cli(["report", str(tmp_path / "nope.ndjson"), "--out", str(rdir)]) == 2


def test_cli_stationary_small(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text((CONFIGS / "canonical_1d.cfg").read_text().replace("n1 = 2000", "n1 = 200"))
    assert run_cli(["stationary", "--config", str(cfg), "--out", str(tmp_path), "--quiet", "--max-time", "5"]) == 0
    js = json.loads((tmp_path / "stationary.json").read_text())
    assert js["residual"]["max"] < 1e-8
    assert (tmp_path / "stationary.csv").read_text().startswith("x1,rho,u,theta,phi,dphi")
