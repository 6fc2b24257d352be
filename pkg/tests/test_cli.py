import csv
import json

import pytest

from newton_aero.cli import main


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_newton_radial_profile(tmp_path):
    assert main(["newton-radial", "--x0", "1", "--M", "1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "profile.csv")
    assert rows[0] == ["v", "x", "u"]
    assert float(rows[1][0]) == 1.0 and float(rows[1][2]) == 0.0
    meta = json.loads((tmp_path / "profile.meta.json").read_text())
    assert meta["seed"] == 7 and "numpy" in meta["versions"] and "tol_active" in meta["tolerances"]


def test_duality_check_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["duality-check", "--bodies", "8", "--seed", "7", "--out", str(a)]) == 0
    assert main(["duality-check", "--bodies", "8", "--seed", "7", "--out", str(b),
                 "--workers", "2"]) == 0
    assert (a / "duality.csv").read_bytes() == (b / "duality.csv").read_bytes()
    gaps = [float(r[4]) for r in read_csv(a / "duality.csv")[1:]]
    assert max(gaps) <= 1e-12


def test_heel_sweep_has_transition_row(tmp_path):
    assert main(["heel-sweep", "--M", "1.0:1.4:0.2", "--m-max", "8", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert rows[0] == ["kind", "M", "m", "R", "J"]
    crit = [r for r in rows if r[0] == "M_crit"]
    assert len(crit) == 1 and 1.16 <= float(crit[0][1]) <= 1.19


def test_maxwell_commands(tmp_path):
    assert main(["maxwell-solve", "--v0", "1", "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "maxwell.csv")[0] == ["p", "v", "dv"]
    assert main(["maxwell-body", "--M", "1", "--m", "90", "--n", "65", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "body.json").read_text())
    assert body["domain"]["kind"] == "disk_approx"


def test_tilde_and_audit(tmp_path):
    assert main(["tilde-check", "--bodies", "5", "--out", str(tmp_path)]) == 0
    assert main(["heel-audit", "--M", "0.9", "--m-max", "6", "--trials", "10",
                 "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "audit.csv")[1][5] == "0"


def test_usage_error_is_json(tmp_path, capsys):
    assert main(["heel-sweep", "--M", "3:1", "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "usage"


def test_module_error_propagates(tmp_path, capsys):
    assert main(["maxwell-solve", "--v0", "1", "--dv0", "1.5", "--out", str(tmp_path)]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "slope_bound"
    assert main(["newton-radial", "--x0", "1", "--M", "1e-300", "--out", str(tmp_path)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "calibration"
