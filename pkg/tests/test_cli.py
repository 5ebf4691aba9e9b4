import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from koranyi.cli import EXIT_INTERNAL, EXIT_INVALID, EXIT_OK, EXIT_UNSOLVABLE, run


def write_spec(path, **d):
    path.write_text(json.dumps(d))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_check_zero_problem(tmp_path, capsys):
    spec = write_spec(tmp_path / "s.json", kind="neumann", p=1, f="0", g=["0"], resolution=8)
    report = tmp_path / "r.json"
    assert run(["check", "--spec", spec, "--report", str(report)]) == EXIT_OK
    rep = json.loads(report.read_text())
    assert all(c["abs_residual"] == 0 for c in rep["report"]["conditions"])
    assert {"version", "config", "calibration", "tolerances", "seed"} <= set(rep)
    assert len(capsys.readouterr().out.strip().splitlines()) == 1


def test_check_unit_source_exit_two(tmp_path):
    spec = write_spec(tmp_path / "s.json", kind="neumann", p=1, f="1", g=["0"])
    report = tmp_path / "r.json"
    assert run(["check", "--spec", spec, "--report", str(report)]) == EXIT_UNSOLVABLE
    res = json.loads(report.read_text())["report"]["conditions"][0]["abs_residual"]
    assert abs(res - np.pi ** 2 / 2) < 0.05
    assert run(["solve", "--spec", spec]) == EXIT_UNSOLVABLE
    out = tmp_path / "u.csv"
    assert run(["solve", "--spec", spec, "--force", "--out", str(out)]) == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["x1", "y1", "t", "rho", "psi", "u"] and len(rows) == 256


def test_kernel_green_boundary_rows(tmp_path):
    out = tmp_path / "k.csv"
    assert run(["kernel", "--type", "green", "--eta", "0.5,0,0", "--resolution", "16", "--out", str(out)]) == EXIT_OK
    header, rows = read_csv(out)
    assert header[-2:] == ["gauge", "value"]
    bnd = np.isclose(rows[:, 3], 1.0)
    assert bnd.sum() == 64 and np.abs(rows[bnd, 4]).max() < 1e-9
    assert np.all(rows[~bnd, 4] > 0)


@pytest.mark.parametrize("kind", ["fundamental", "poisson", "neumann"])
def test_kernel_types(tmp_path, kind):
    out = tmp_path / "k.csv"
    assert run(["kernel", "--type", kind, "--eta", "0.2,0.1,0.3", "--resolution", "8", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert np.all(np.isfinite(rows))


def test_kernel_bad_inputs(tmp_path):
    assert run(["kernel", "--type", "green", "--eta", "1.5,0,0"]) == EXIT_INVALID
    assert run(["kernel", "--type", "green", "--eta", "a,b"]) == EXIT_INVALID
    assert run(["kernel", "--type", "laplace", "--eta", "0,0,0"]) == EXIT_INVALID


def test_validation_exit_codes(tmp_path):
    bad = write_spec(tmp_path / "bad.json", kind="neumann", p=1, f="x1", g=["0"])
    assert run(["check", "--spec", bad]) == EXIT_INVALID
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run(["check", "--spec", str(broken)]) == EXIT_INVALID
    assert run(["check", "--spec", str(tmp_path / "missing.json")]) == EXIT_INVALID
    good = write_spec(tmp_path / "g.json", kind="neumann", p=1, f="0", g=["0"], resolution=8)
    assert run(["solve", "--spec", good, "--out", str(tmp_path / "nodir" / "u.csv")]) == EXIT_INVALID
    assert run(["solve", "--spec", good, "--resolution", "3"]) == EXIT_INVALID
    assert run(["frobnicate"]) == EXIT_INVALID


def test_internal_error_exit(tmp_path, monkeypatch):
    import koranyi.cli as cli
    good = write_spec(tmp_path / "g.json", kind="neumann", p=1, f="0", g=["0"], resolution=8)
    monkeypatch.setattr(cli, "check", lambda *a, **k: 1 / 0)
    assert run(["check", "--spec", good]) == EXIT_INTERNAL


def test_outputs_are_deterministic(tmp_path):
    spec = write_spec(tmp_path / "s.json", kind="dirichlet", q=1, f="1", h=["t"], resolution=8)
    blobs = []
    for _ in range(2):
        args = ["verify", "--spec", spec, "--out", str(tmp_path / "u.csv"), "--report", str(tmp_path / "r.json"),
                "--emit-plot-data", str(tmp_path / "p.csv"), "--seed", "7"]
        assert run(args) == EXIT_OK
        blobs.append([(tmp_path / f).read_bytes() for f in ("u.csv", "r.json", "p.csv")])
    assert blobs[0] == blobs[1]
    rep = json.loads(blobs[0][1])
    assert rep["seed"] == 7 and rep["verification"]["seed"] == 7
    header = blobs[0][2].decode().splitlines()[0]
    assert header == "rho,psi,u"


def test_calibrate_persists_to_cache(tmp_path):
    cache = tmp_path / "cache.json"
    assert run(["calibrate", "--boundary-resolution", "32", "--grid-cache", str(cache)]) == EXIT_OK
    grids = json.loads(cache.read_text())["grids"]
    (key, entry), = grids.items()
    assert "boundary" in key and abs(entry["calibration"] - 1) < 0.01
    spec = write_spec(tmp_path / "s.json", kind="neumann", p=1, f="0", g=["0"], resolution=8)
    report = tmp_path / "r.json"
    assert run(["check", "--spec", spec, "--boundary-resolution", "32", "--grid-cache", str(cache),
                "--report", str(report)]) == EXIT_OK
    assert json.loads(report.read_text())["calibration"] == entry["calibration"]


def test_grid_and_series_flags(tmp_path):
    out = tmp_path / "g.json"
    assert run(["grid", "--resolution", "6", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["format"] == "koranyi-grid/1"
    assert run(["grid", "--kind", "boundary", "--full", "--boundary-resolution", "8", "--out", str(out)]) == EXIT_OK
    coeffs = tmp_path / "c.json"
    coeffs.write_text(json.dumps([{"k": 1, "m": 2, "value": 0.1}]))
    spec = write_spec(tmp_path / "s.json", kind="neumann", p=1, f="0", g=["0"], resolution=8)
    assert run(["check", "--spec", spec, "--neumann-correction", "series", "--series-kmax", "2",
                "--series-mmax", "4", "--series-coeffs", str(coeffs)]) == EXIT_OK


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "koranyi.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "koranyi" in proc.stdout
