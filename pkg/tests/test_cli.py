import csv
import json

import pytest

from widthlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["frame", "--nope"],
    ["verify"],
    ["volume", "--body", "cube"],
    ["verify", "cases", "--budget", "-1"],
    ["shadow"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_bad_config(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "frame", "--config", str(bad))[0] == 0  # frame ignores config
    assert run(capsys, "report", "--config", str(bad), "--only", "frame")[0] == 2
    bad.write_text('{"width_tol": -1}')
    assert run(capsys, "verify", "width", "--config", str(bad))[0] == 2
    assert run(capsys, "report", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_mesh_format_conflict(capsys, tmp_path):
    assert run(capsys, "mesh", "--format", "ply", "--out", str(tmp_path / "m.obj"))[0] == 2
    assert run(capsys, "mesh", "--out", str(tmp_path / "m.xyz"))[0] == 2


def test_frame_json(capsys):
    code, out, _ = run(capsys, "frame", "--json")
    doc = json.loads(out)
    assert code == 0 and set("ABCDEG") <= set(doc["points"])


def test_patches_dump(capsys, tmp_path):
    path = tmp_path / "p.csv"
    code, _, _ = run(capsys, "patches", "--dump", str(path), "--spacing", "0.2")
    assert code == 0
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert rows and set(rows[0]) == {"piece", "p1", "p2", "x1", "x2", "x3", "x4"}
    labels = {r["piece"] for r in rows}
    assert {"A", "F_AB", "S_CD"} <= labels


def test_verify_width_small(capsys):
    code, out, _ = run(capsys, "verify", "width", "--directions", "20", "--seed", "7")
    doc = json.loads(out)
    assert code == 0 and doc["width"]["verdict"] == "PASS"
    assert doc["width"]["metrics"]["n"] == 20


def test_width_tolerance_below_solver_precision(capsys):
    code, out, _ = run(capsys, "verify", "width", "--directions", "5", "--tol", "1e-12")
    assert code == 1 and json.loads(out)["width"]["verdict"] == "FAIL"


def test_verify_cases_only(capsys):
    code, out, _ = run(capsys, "verify", "cases", "--only", "4b", "--only", "3b", "--budget", "100")
    doc = json.loads(out)
    assert code == 0 and [r["config"] for r in doc] == ["4b", "3b"]


def test_shadow_arcs_csv(capsys, tmp_path):
    path = tmp_path / "arcs.csv"
    code, _, _ = run(capsys, "shadow", "--arcs", str(path), "--grid", "5")
    assert code == 0
    assert len(path.read_text().strip().splitlines()) == 1 + 6 * 5


def test_volume_text(capsys):
    code, out, _ = run(capsys, "volume", "--body", "ball3", "--n", "20000", "--seed", "1")
    assert code == 0 and out.startswith("ball3: 0.5")


def test_report_only(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "report", "--only", "frame", "--out", str(path))
    doc = json.loads(path.read_text())
    assert code == 0 and list(doc["checks"]) == ["frame"] and out.startswith("PASS")


def test_mesh_export(capsys, tmp_path):
    path = tmp_path / "ball.obj"
    code, out, _ = run(capsys, "mesh", "--body", "ball3", "--subdiv", "1", "--out", str(path), "--json")
    doc = json.loads(out)
    assert code == 0 and doc["format"] == "obj" and doc["watertight"]
    assert path.read_text().startswith(("v ", "#"))
