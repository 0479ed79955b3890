import json
from pathlib import Path

import pytest

from gitstrata.cli import main
from gitstrata.io import read_trajectory_csv
from gitstrata.ratgeom import polyhedron_from_json

INSTANCES = Path(__file__).resolve().parent.parent / "instances"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_analyze_unstable_point(capsys):
    code, data, _ = run(capsys, "analyze", "--in", str(INSTANCES / "circle_pm.json"), "--point", "plus")
    assert code == 0
    assert data == {"status": "Unstable", "Msq": "1/1", "tau_x": ["-1/1"]}


def test_analyze_semistable_point(capsys):
    code, data, _ = run(capsys, "analyze", "--in", str(INSTANCES / "circle_pm.json"), "--point", "generic")
    assert code == 0 and data == {"status": "Semistable"}


def test_stratify(capsys):
    code, data, _ = run(capsys, "stratify", "--in", str(INSTANCES / "circle_pm.json"))
    assert code == 0 and len(data["strata"]) >= 2


def test_flow_writes_csv_and_json(tmp_path, capsys):
    csv, out = tmp_path / "traj.csv", tmp_path / "flow.json"
    code, _, _ = run(capsys, "flow", "--in", str(INSTANCES / "sl2_cubic.json"), "--point", "generic",
                     "--csv", str(csv), "--out", str(out))
    assert code == 0
    assert csv.read_text().splitlines()[0] == "t,f,phi_norm,grad_norm"
    traj = read_trajectory_csv(csv)
    assert traj.shape[1] == 4 and traj[0, 0] == 0.0
    data = json.loads(out.read_text())
    assert data["converged"] and float(data["M_estimate"]) < 1e-6


def test_flow_nonconvergence_exit_code(capsys):
    code, data, err = run(capsys, "flow", "--in", str(INSTANCES / "circle_pm.json"), "--point", "generic",
                          "--t-max", "0.01")
    assert code == 3
    assert data is not None and data["converged"] is False


def test_polytope_torus_and_borel(capsys):
    code, data, _ = run(capsys, "polytope", "--in", str(INSTANCES / "circle_pm.json"), "--point", "generic")
    assert code == 0 and data["mode"] == "T"
    poly = polyhedron_from_json(data["polyhedron"])
    assert sorted(p[0] for p in poly.points) == [-1, 1]
    code, data, _ = run(capsys, "polytope", "--mode", "Bx", "--in", str(INSTANCES / "sl2_cubic.json"),
                        "--point", "generic", "--samples", "4")
    assert code == 0 and data["mode"] == "Bx" and "sampling" in data


def test_theorem_c_reports_check(capsys):
    code, data, _ = run(capsys, "theorem-c", "--in", str(INSTANCES / "sl2_cubic.json"), "--point", "generic",
                        "--samples", "8")
    assert code == 0
    assert data["check"]["passed"]
    poly = polyhedron_from_json(data["polyhedron"])
    assert sorted(p[0] for p in poly.points) == [0, 3]


def test_crosscheck_suite(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _, err = run(capsys, "crosscheck", "--suite", "M-equality", "--seed", "0", "--samples", "10",
                       "--out", str(out))
    assert code == 0 and "PASS" in err
    data = json.loads(out.read_text())
    assert data["passed"] and data["reports"][0]["instances_run"] + data["reports"][0]["skipped"] == 10


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["analyze"],
    ["analyze", "--in", "/nonexistent/file.json"],
    ["flow", "--in", str(INSTANCES / "circle_pm.json"), "--t-max", "-1"],
    ["polytope", "--mode", "Q", "--in", str(INSTANCES / "circle_pm.json")],
    ["analyze", "--in", str(INSTANCES / "circle_pm.json"), "--point", "missing"],
    ["crosscheck", "--suite", "nope"],
])
def test_validation_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "version": "gitstrata/1",\n  "rep": {"rank": 1,, "weightsE": [[1]]}\n}\n')
    code, _, err = run(capsys, "analyze", "--in", str(bad))
    assert code == 2
    assert "line 3" in err and "column" in err


def test_thread_env_validated(monkeypatch, capsys):
    monkeypatch.setenv("GITSTRATA_THREADS", "zero")
    code, _, err = run(capsys, "analyze", "--in", str(INSTANCES / "circle_pm.json"))
    assert code == 2 and "GITSTRATA_THREADS" in err


def test_version_exits_zero(capsys):
    assert main(["--version"]) == 0
