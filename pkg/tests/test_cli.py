import json
import math
import subprocess
import sys

import numpy as np
import pytest

from largesol import cli
from largesol.field import read_field_bin
from largesol.geometry import ConvexPolygon, load_raster, save_polygon
from largesol.verify import VerifyReport


@pytest.fixture
def square_json(tmp_path):
    path = tmp_path / "square.json"
    save_polygon(ConvexPolygon.rectangle(0, 0, 1, 1), path)
    return path


def run(args, capsys):
    code = cli.run([str(a) for a in args])
    out = capsys.readouterr()
    report = json.loads(out.out) if code == 0 and out.out.strip() else None
    return code, report, out.err


def test_large_square(tmp_path, square_json, capsys):
    out = tmp_path / "u.bin"
    code, rep, _ = run(["large", "--domain", square_json, "--f", "power:c=1,q=2", "--lambda-max", 40,
                        "--h", 0.002, "--out", out], capsys)
    assert code == 0
    res = rep["result"]
    assert res["min_u"] == pytest.approx(math.sqrt(2 + math.sqrt(math.pi)), rel=1e-9)
    assert res["ball_lower_bound_ok"]
    assert rep["header"]["defaults"]["grid_size"] == 64
    u, header = read_field_bin(out)
    assert header["f"] == "power:c=1,q=2" and u.shape == (header["ny"], header["nx"])


def test_ko_log1p(capsys):
    code, rep, _ = run(["ko", "--f", "log1p", "--p", 1.25], capsys)
    assert code == 0 and rep["result"]["result"] == "infinite"
    code, rep, _ = run(["ko", "--f", "power:q=2", "--p", 1.5], capsys)
    assert rep["result"]["value"] == pytest.approx(3 ** (2 / 3), rel=1e-6)


def test_cheeger_and_plambda(tmp_path, square_json, capsys):
    code, rep, _ = run(["cheeger", "--domain", square_json], capsys)
    assert code == 0 and rep["result"]["lambda_K"] == pytest.approx(2 + math.sqrt(math.pi), abs=1e-8)
    code, rep, _ = run(["cheeger", "--disk", 0.5, "--raster", 1 / 64, "--out", tmp_path / "k.pgm"], capsys)
    assert code == 0 and rep["result"]["lambda_K"] == pytest.approx(4.0, rel=0.03)
    assert load_raster(tmp_path / "k.pgm").mask.any()
    code, rep, _ = run(["plambda", "--domain", square_json, "--lambda", 4, "--out", tmp_path / "o.pgm"], capsys)
    assert rep["result"]["energy"] == pytest.approx(-0.2146018, abs=1e-7)
    code, rep, _ = run(["plambda", "--domain", square_json, "--lambda", 1], capsys)
    assert code == 0 and rep["result"]["energy"] == 0.0


def test_curvature_csv(tmp_path, capsys):
    out = tmp_path / "v.csv"
    code, rep, _ = run(["curvature", "--disk", 1, "--lambda-max", 10, "--h", 1 / 64, "--out", out], capsys)
    assert code == 0
    assert rep["result"]["min_v"] == rep["result"]["max_v"] == 2.0
    assert rep["result"]["mass_identity"]["rel_error"] <= 0.02
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert np.all(data[:, 2] == 2.0)


def test_radial_and_psweep(tmp_path, capsys):
    code, rep, _ = run(["radial", "--f", "power:q=2", "--p", 1.5, "--n", 10, "--out", tmp_path / "r.csv"], capsys)
    assert code == 0 and 0 < rep["result"]["center"] < 6 and rep["result"]["bound_ok"]
    rows = np.loadtxt(tmp_path / "r.csv", delimiter=",", skiprows=1)
    assert rows[-1, 1] == pytest.approx(10.0, rel=1e-6)
    code, rep, _ = run(["psweep", "--f", "power:q=2", "--plist", "1.5,1.3", "--mesh", 101,
                        "--out", tmp_path / "s.csv"], capsys)
    assert code == 0 and rep["result"]["failed"] == []
    assert len(np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)) == 2


def test_report_to_file(tmp_path, capsys):
    code, _, _ = run(["ko", "--f", "exp", "--p", 1.5, "--report", tmp_path / "r.json"], capsys)
    assert code == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["header"]["command"] == "ko" and rep["result"]["finite"]


@pytest.mark.parametrize("args", [
    ["ko", "--f", "const", "--p", 1.5],
    ["ko", "--f", "power:q=2", "--p", 2.5],
    ["radial", "--f", "power:q=0.3", "--p", 1.5, "--n", 2],
    ["plambda", "--disk", 1, "--lambda", 3, "--backend", "mincut", "--h", 4],
    ["curvature", "--disk", 1, "--lambda-max", 1, "--h", 0.1],
    ["large", "--disk", 1, "--f", "power:q=2", "--workers", 0],
])
def test_config_errors(args, capsys):
    code, _, err = run(args, capsys)
    assert code == 2
    assert err.startswith("error: [")


def test_solver_error_exit_code(tmp_path, capsys):
    table = tmp_path / "f.csv"
    table.write_text("s,f\n0,0\n1,1\n10,100\n")
    # the boundary datum 50 lies past the last tabulated s = 10
    code, _, err = run(["radial", "--f", f"table:{table}", "--p", 1.5, "--n", 50], capsys)
    assert code == 3
    assert err.startswith("error: [absorption.Nonlinearity]")


def test_io_errors(tmp_path, capsys):
    code, _, err = run(["cheeger", "--domain", tmp_path / "missing.json"], capsys)
    assert code == 5 and "cli_runner.io" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = run(["cheeger", "--domain", bad], capsys)
    assert code == 5


def test_verify_failure_exit_code(monkeypatch, capsys):
    def fake(suite, h, plist=None):
        rep = VerifyReport(suite)
        rep.add("always fails", 1, 0, 0, False)
        return rep
    monkeypatch.setattr(cli, "verify", fake)
    code, _, err = run(["verify", "--suite", "disk"], capsys)
    assert code == 4
    assert "FAIL  always fails" in err and "cli_runner.verify" in err


def test_verify_disk(capsys):
    code, rep, err = run(["verify", "--suite", "disk"], capsys)
    assert code == 0
    checks = rep["result"]["checks"]
    assert len(checks) == 6 and all(c["passed"] for c in checks)
    assert err.count("PASS") == 6


def test_deterministic_outputs(tmp_path, square_json, capsys):
    args = ["large", "--domain", square_json, "--f", "exp", "--lambda-max", 30, "--h", 1 / 64,
            "--backend", "mincut", "--workers", 1]
    for ext in ("csv", "bin"):
        out = tmp_path / f"u.{ext}"
        rep = tmp_path / "rep.json"
        runs = []
        for _ in range(2):
            assert cli.run([str(a) for a in args + ["--out", out, "--report", rep]]) == 0
            runs.append((out.read_bytes(), rep.read_bytes()))
        assert runs[0] == runs[1]
    capsys.readouterr()


def test_parallel_scalars_match_serial(square_json, capsys):
    base = ["curvature", "--domain", square_json, "--lambda-max", 60, "--h", 1 / 128]
    _, r1, _ = run(base + ["--workers", 1], capsys)
    _, r4, _ = run(base + ["--workers", 4], capsys)
    for key in ("lambda_K", "coverage", "min_v", "max_v"):
        assert r1["result"][key] == pytest.approx(r4["result"][key], abs=1e-12)
    assert r1["result"]["mass_identity"] == r4["result"]["mass_identity"]


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "largesol.cli", "ko", "--f", "log1p", "--p", "1.1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and '"infinite"' in proc.stdout
