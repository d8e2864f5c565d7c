import json

import numpy as np
import pytest

from templelab.cli import main
from templelab.system import compute_frame
from templelab.systems import get_system


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_list_systems(capsys):
    assert main(["list-systems"]) == 0
    assert "langmuir" in capsys.readouterr().out


def test_check_pass_and_fail(capsys, tmp_path):
    assert main(["check", "--system", "rotated2", "--output", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 5
    assert read_json(tmp_path / "report.json")["pass"] is True
    assert main(["check", "--system", "psystem"]) == 1
    out = capsys.readouterr().out
    assert "temple       FAIL" in out.replace("  ", "  ")


def test_check_malformed_system_file(tmp_path, capsys):
    path = tmp_path / "bad.sys"
    path.write_text("n: 2\nlo: -1, -1\nhi: 1, 1\nc0: 1\nA[1,1]: u1 + * 2\n")
    assert main(["check", "--system", str(path), "--output", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and "line 5, column" in err["message"]
    assert read_json(tmp_path / "o" / "error.json")["error"] == "ExprError"


def test_solve_constant_data_reproduces_input(tmp_path):
    out = tmp_path / "s"
    code = main(["solve", "--system", "rotated2", "--grid", "-1", "1", "50", "--epsilon", "0.1",
                 "--t-end", "0.2", "--record-times", "0", "0.1", "0.2", "--state", "0.1,-0.2",
                 "--output", str(out)])
    assert code == 0
    body = (out / "initial.csv").read_text().splitlines()[1:]
    for k in range(3):
        assert (out / f"fields_{k:03d}.csv").read_text().splitlines()[1:] == body
    manifest = read_json(out / "manifest.json")
    assert manifest["config"]["system"] == "rotated2"
    assert manifest["record_times"] == [0.0, 0.1, 0.2]
    assert set(manifest["files"]) >= {"fields_000.csv", "report.json"}


def test_solve_from_config_and_env(tmp_path, monkeypatch):
    cfg = {"system": "burgers", "grid": {"x_min": -1, "x_max": 1, "cells": 40},
           "solve": {"epsilon": 0.1, "t_end": 0.1},
           "initial": {"pieces": {"breaks": [0.0], "states": [[0.5], [0.0]]}}}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    monkeypatch.setenv("TEMPLELAB_OUTPUT", str(tmp_path / "root"))
    assert main(["solve", "--config", str(path)]) == 0
    report = read_json(tmp_path / "root" / "solve" / "report.json")
    assert report["schema_version"] == 1 and report["records"][0]["t"] == 0.1


def test_solve_exit_codes(tmp_path, capsys):
    assert main(["solve", "--system", "burgers", "--grid", "-1", "1", "40", "--epsilon", "0.1",
                 "--t-end", "0.1", "--state", "7", "--output", str(tmp_path)]) == 3
    assert read_json(tmp_path / "error.json")["error"] == "DomainExit"
    assert main(["solve", "--system", "burgers"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--epsilon", "abc"])
    assert exc.value.code == 2


def test_riemann_pure_wave(tmp_path):
    sys = get_system("rotated2")
    u = np.array([0.05, 0.1])
    ur = u + 0.2 * compute_frame(sys, u).r[:, 0]
    out = tmp_path / "r"
    assert main(["riemann", "--system", "rotated2", "--left", ",".join(map(str, u.tolist())),
                 "--right", ",".join(map(str, ur.tolist())), "--output", str(out)]) == 0
    fan = read_json(out / "fan.json")
    nontrivial = [f for f in fan["families"] if f["waves"]]
    assert len(nontrivial) == 1 and nontrivial[0]["family"] == 1
    rows = (out / "fan.csv").read_text().splitlines()
    assert rows[0] == "xi,u_1,u_2" and len(rows) == 402


def test_study_vanishing_viscosity(tmp_path):
    out = tmp_path / "vv"
    assert main(["study", "vv-burgers-shock", "--output", str(out)]) == 0
    report = read_json(out / "report.json")
    assert {"p", "residual"} <= set(report["fit"])
    assert 0.4 <= report["fit"]["p"] <= 1.1
    assert read_json(out / "manifest.json")["config"]["study"]["name"] == "vanishing-viscosity"
    header = (out / "series.csv").read_text().splitlines()[0]
    assert header == "dx,epsilon,l1_error"


def test_study_config_mismatch(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"system": "burgers", "grid": {"x_min": -1, "x_max": 1, "cells": 20},
                                "study": {"name": "bv", "params": {}}}))
    assert main(["study", "decay", "--config", str(path), "--output", str(tmp_path)]) == 2
