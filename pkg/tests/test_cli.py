import csv
import io
import json
import math
import subprocess
import sys

import pytest

from qbb.cli import main, parse_range, to_json, UsageError

IMAGING = ["--model", "imaging", "--d", "2", "--n", "4", "--alpha", "1.4142135"]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_bounds_imaging_json(capsys):
    code, out, _ = run(["bounds", *IMAGING, "--skip-sdp"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["losses"]["SPM"] == pytest.approx(0.1639501, abs=1e-7)
    assert doc["losses"]["PGM*"] == pytest.approx(0.1899917, abs=1e-7)
    assert doc["provenance"]["model"]["params"] == {"d": 2, "n": 4, "alpha": 1.4142135}
    assert doc["provenance"]["tolerances"]["gap_tol"] == 1e-7
    assert "NH" not in doc["losses"]


def test_floats_have_17_digits():
    text = to_json({"x": 0.1, "y": [1 / 3]})
    assert "0.10000000000000001" in text
    assert "0.33333333333333331" in text
    assert json.loads(text)["y"][0] == 1 / 3


def test_bounds_planar_flag_and_solver_stats(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, _ = run(["bounds", "--model", "planar", "--w1", "0.83", "--w2", "0.5", "--beta", "0.07",
                      "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["flags"]["nontrivial_upper_bound"] is True
    assert doc["solver"]["NH"]["status"] == "optimal"
    assert doc["incompat"]["I_NH"] > 0


def test_bounds_csv(capsys):
    code, out, _ = run(["bounds", "--model", "planar", "--skip-sdp", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["L_PGM"]) == pytest.approx(2 * float(rows[0]["L_SPM"]))


def test_reports_are_reproducible(capsys):
    argv = ["bounds", "--model", "phase-dephasing", "--copies", "2"]
    first = run(argv, capsys)[1]
    assert run(argv, capsys)[1] == first


def test_missing_grid_file(capsys):
    code, _, err = run(["bounds", "--model", "grid:missing.txt"], capsys)
    assert code == 65
    assert "missing.txt" in err


def test_model_error_exit(capsys):
    code, _, _ = run(["bounds", "--model", "planar", "--w1", "1", "--w2", "0.2"], capsys)
    assert code == 65


@pytest.mark.parametrize("argv", [
    ["bounds", "--model", "imaging", "--bogus"],
    ["bounds"],
    ["frobnicate"],
    ["bounds", "--model", "imaging", "--d", "two"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == 64
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["bounds", "--model", "tomography"],
    ["bounds", "--model", "imaging", "--alpha", "wide"],
    ["sweep", "--model", "planar", "--vary", "beta=1:0.5:0"],
    ["sweep", "--model", "planar", "--vary", "copies=1:3"],
    ["sweep", "--model", "imaging", "--vary", "d=2.5:4:3"],
    ["sweep", "--model", "imaging", "--vary", "d=5:4"],
    ["bounds", "--model", "planar", "--tomography", "--restrict", "3"],
])
def test_semantic_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 64
    assert "error" in err


def test_parse_range():
    assert parse_range("d=2:5") == ("d", [2, 3, 4, 5])
    name, vals = parse_range("w2=0.1:0.55:10")
    assert name == "w2" and len(vals) == 10 and vals[-1] == pytest.approx(0.55)
    for bad in ("d", "d=2", "d=a:b", "=1:2"):
        with pytest.raises(UsageError):
            parse_range(bad)


def test_sweep_rows_in_order(capsys, monkeypatch):
    argv = ["sweep", "--model", "imaging", "--vary", "d=1:3", "--skip-sdp"]
    code, out, _ = run(argv, capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [r["d"] for r in rows] == ["1", "2", "3"]
    assert [float(r["alpha"]) for r in rows] == pytest.approx([1, math.sqrt(2), math.sqrt(3)])
    assert rows[0]["violations"] == ""
    monkeypatch.setenv("QBB_THREADS", "1")
    assert run(argv, capsys)[1] == out


def test_sweep_marks_bad_points(capsys):
    # W1 = 0.9 leaves the Bloch disc once W2 > 0.436
    code, out, _ = run(["sweep", "--model", "planar", "--w1", "0.9", "--vary", "w2=0.3:0.6:4",
                        "--skip-sdp"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 2
    assert rows[0]["violations"] == ""
    assert rows[-1]["violations"].startswith("error:")


def test_bad_thread_cap(capsys, monkeypatch):
    monkeypatch.setenv("QBB_THREADS", "lots")
    code, _, _ = run(["sweep", "--model", "planar", "--vary", "beta=0.5:1:2", "--skip-sdp"], capsys)
    assert code == 64


def test_verify_spm(capsys, tmp_path):
    path = tmp_path / "spm.txt"
    model = ["--model", "imaging", "--d", "1", "--n", "4", "--alpha", "1"]
    assert run(["make-povm", *model, "--out", str(path)], capsys)[0] == 0
    code, out, _ = run(["verify", *model, "--povm", str(path)], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["passed"] is True
    assert doc["trace_upsilon"] == pytest.approx((math.pi**2 / 3 - 1) / 16, abs=1e-7)


def test_verify_restricted(capsys, tmp_path):
    path = tmp_path / "spm.txt"
    model = ["--model", "phase-dephasing", "--restrict", "1"]
    run(["make-povm", *model, "--index", "1", "--out", str(path)], capsys)
    assert run(["verify", *model, "--povm", str(path)], capsys)[0] == 0


def test_verify_identity_on_planar(capsys, tmp_path):
    path = tmp_path / "id.txt"
    run(["make-povm", "--model", "planar", "--kind", "identity", "--out", str(path)], capsys)
    code, out, _ = run(["verify", "--model", "planar", "--povm", str(path)], capsys)
    assert code == 3
    assert json.loads(out)["passed"] is False


@pytest.mark.parametrize("text", ["dim=2\nelement: 1 2 3\n", "garbage\n", ""])
def test_verify_malformed_povm(capsys, tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    code, _, _ = run(["verify", "--model", "planar", "--povm", str(path)], capsys)
    assert code == 65


def test_verify_missing_povm(capsys, tmp_path):
    code, _, _ = run(["verify", "--model", "planar", "--povm", str(tmp_path / "nope.txt")], capsys)
    assert code == 65


def test_tomography_column(capsys):
    code, out, _ = run(["bounds", "--model", "phase-dephasing", "--copies", "2", "--tomography"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["losses"]["NH"] <= doc["losses"]["tomography"] <= doc["losses"]["prior"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qbb", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("qbb ")
