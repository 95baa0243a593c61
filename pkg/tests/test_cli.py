from __future__ import annotations

import io
import json
import subprocess
import sys

import numpy as np
import pytest

from reeb_growth.cli import main
from reeb_growth.gromov import octahedron
from reeb_growth.loops import circle_loop
from reeb_growth.maslov import rotation_path


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def rows(text):
    return [ln.split("\t") for ln in text.splitlines() if not ln.startswith("#")]


@pytest.fixture
def rot_pi(tmp_path):
    p = tmp_path / "rot_pi.json"
    p.write_text(rotation_path(np.pi, n_samples=201).to_json())
    return p


def test_betti_s5_table():
    code, out = run("betti", "--space", "loop(s5)", "--max", "15", "--format", "tsv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# reeb-growth ")
    assert len(lines) == 17 and lines[-1] == "15\t0"


def test_betti_product_row_12():
    code, out = run("betti", "--space", "loop(s5)*loop(s7)", "--max", "15")
    assert code == 0 and rows(out)[12] == ["12", "3"]


def test_json_schema_and_header():
    code, out = run("betti", "--space", "loop(s5)", "--max", "15", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1
    assert doc["betti"][:6] == [1, 0, 0, 0, 1, 1]
    assert set(doc["header"]) == {"tool", "input_sha256", "params"}


def test_byte_identical_runs(tmp_path, rot_pi):
    mesh = tmp_path / "octa.off"
    mesh.write_text(octahedron().to_off())
    for argv in (("betti", "--space", "loop(s3)*loop(s4)", "--max", "12"),
                 ("cz-index", "--path", str(rot_pi)),
                 ("gromov", "--mesh", str(mesh), "--k", "1", "--format", "json")):
        assert run(*argv) == run(*argv)


def test_cz_index(rot_pi):
    code, out = run("cz-index", "--path", str(rot_pi))
    assert code == 0 and rows(out) == [["1"]]
    code, out = run("cz-index", "--path", str(rot_pi), "--format", "json")
    doc = json.loads(out)
    assert doc["cz_index"] == "1" and abs(doc["delta"] - 1.0) < 1e-6


def test_rs_index(tmp_path, rot_pi):
    V = tmp_path / "V.json"
    V.write_text(json.dumps({"frame": [[1], [0]]}))
    code, out = run("rs-index", "--path", str(rot_pi), "--V", str(V))
    assert code == 0 and rows(out) == [["1"]]


def test_growth_commands(tmp_path):
    code, out = run("growth", "free-group", "--rank", "2", "--max-len", "6")
    assert code == 0
    r = rows(out)
    assert r[1] == ["2", "13"] and r[-1][0] == "rate_exp"
    counts = tmp_path / "c.tsv"
    counts.write_text("1\t2\n2\t8\n3\t18\n4\t32\n")
    code, out = run("growth", "--input", str(counts), "--mode", "poly")
    assert code == 0 and float(rows(out)[-1][1]) == pytest.approx(2.0)
    code, out = run("growth", "--space", "loop(s3)", "--max", "20", "--mode", "linear", "--format", "json")
    assert code == 0 and json.loads(out)["rate"] == pytest.approx(1.0, abs=0.1)


def test_flow_command(tmp_path):
    dest = tmp_path / "orbit.json"
    code, out = run("flow", "--space", "torus", "--H", "0.5*|p|^2", "--x0", "0,1", "--T", "1",
                    "--dt", "1e-3", "--out", str(dest), "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["action"] == pytest.approx(0.5, abs=1e-9)
    assert json.loads(dest.read_text())["space"]["kind"] == "torus"


def test_loop_commands(tmp_path):
    src = tmp_path / "c.json"
    u = np.arange(400) / 400
    src.write_text(circle_loop(400, phase=u + 0.1 * np.sin(2 * np.pi * u)).to_json())
    _, out = run("loop", "measure", "--input", str(src), "--format", "json")
    m = json.loads(out)
    _, out = run("loop", "reparam", "--input", str(src), "--format", "json", "--out", str(tmp_path / "r.json"))
    r = json.loads(out)
    assert r["energy"] < m["energy"]
    assert r["energy"] == pytest.approx(0.5 * r["length"] ** 2, rel=1e-9)
    _, out = run("loop", "lift", "--input", str(src), "--format", "json")
    assert json.loads(out)["energy"] >= json.loads(out)["predicted"]
    code, out = run("loop", "concat", "--input", str(src), "--input2", str(src), "--eps", "0.5", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["energy"] == pytest.approx(doc["predicted"], rel=1e-2)


def test_gromov_command(tmp_path):
    mesh = tmp_path / "octa.off"
    mesh.write_text(octahedron().to_off())
    report = tmp_path / "cells.tsv"
    code, out = run("gromov", "--mesh", str(mesh), "--k", "1", "--report", str(report), "--kappa", "1")
    assert code == 0
    r = rows(out)
    assert all(row[-1] == "pass" for row in r if row[0] != "kappa")
    assert ["kappa", "4.0"] in r
    lines = report.read_text().splitlines()
    assert len(lines) == 387 and all(ln.endswith("\t1") for ln in lines[1:])


def test_exit_codes(tmp_path):
    assert run("bogus")[0] == 2
    assert run("betti", "--space", "loop(s5)", "--max", "15", "--unknown")[0] == 2
    assert run("betti", "--space", "s1", "--max", "4")[0] == 1
    assert run("cz-index", "--path", str(tmp_path / "missing.json"))[0] == 1
    src = tmp_path / "c.json"
    src.write_text(circle_loop(50).to_json())
    assert run("loop", "concat", "--input", str(src))[0] == 2
    assert run("loop", "concat", "--input", str(src), "--input2", str(src), "--eps", "1.5")[0] == 1
    assert run("growth")[0] == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("REEB_GROWTH_THREADS", "2")
    assert run("betti", "--space", "loop(s3)*loop(s5)", "--max", "12") == run(
        "betti", "--space", "loop(s3)*loop(s5)", "--max", "12", "--workers", "1")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "reeb_growth", "betti", "--space", "loop(s7)", "--max", "15"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[-4:] == ["12\t1", "13\t1", "14\t0", "15\t0"]
