import json
import subprocess
import sys
from pathlib import Path

import pytest

from vardist import FrequencyTable
from vardist.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def two_point(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("y,count\n0,2.718281828459045\n1,1\n")
    return str(path)


def test_estimate_happy_path(two_point, capsys):
    code, out, _ = run(["estimate", "--table", two_point, "--family", "exponential", "--method", "dv"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["rate"] == pytest.approx(1.0, abs=1e-12)
    assert doc["exact"] is True
    assert "dv_at_optimum" in doc


def test_malformed_csv_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,count\n0,abc\n1,2\n")
    code, out, err = run(["estimate", "--table", str(bad), "--family", "exponential"], capsys)
    assert code == 2
    assert out == ""
    assert "error" in err


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, _ = run(["distance", "--table", str(tmp_path / "nope.csv"), "--model", "normal:0,1"], capsys)
    assert code == 2


def test_no_solution_exit_3(tmp_path, capsys):
    path = tmp_path / "up.csv"
    path.write_text("y,count\n0,1\n1,3\n")
    code, out, _ = run(["estimate", "--table", str(path), "--family", "exponential", "--method", "dv"], capsys)
    assert code == 3
    doc = json.loads(out)
    assert doc["status"] == "no-solution"
    assert doc["params"]["rate"] < 0
    assert doc["dv_at_optimum"] is None
    assert doc["diagnostics"]["fallback"]["status"] == "tolerance-set"


def test_degenerate_exit_3(tmp_path, capsys):
    path = tmp_path / "sym.csv"
    path.write_text("y,count\n-1,5\n1,5\n")
    code, out, _ = run(["estimate", "--table", str(path), "--family", "normal", "--known", "mean=0"], capsys)
    assert code == 3
    assert json.loads(out)["status"] == "degenerate"


def test_unknown_flag_exit_2(capsys):
    code, out, err = run(["estimate", "--bogus"], capsys)
    assert code == 2
    assert out == ""
    assert "usage" in err


def test_version_and_help(capsys):
    code, out, _ = run(["--version"], capsys)
    assert code == 0 and out.startswith("vardist ")
    code, out, _ = run(["--help"], capsys)
    assert code == 0 and "simulate" in out
    code, out, _ = run(["simulate", "--help"], capsys)
    assert code == 0 and "--gamma-convention" in out


def test_simulate_requires_seed_and_convention(capsys):
    assert run(["simulate", "--experiment", "binomial-id", "--replicates", "5"], capsys)[0] == 2
    assert run(["simulate", "--experiment", "weibull-gamma", "--replicates", "5", "--seed", "1"], capsys)[0] == 2


def test_distance_and_select(tmp_path, capsys):
    path = tmp_path / "b.csv"
    FrequencyTable([0, 1, 2, 3], [43, 38, 15, 3]).to_csv(path)
    code, out, _ = run(["distance", "--table", str(path), "--model", "binomial:8,0.1", "--top", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["top_terms"]) == 3 and doc["dv"] > 0
    code, out, _ = run(["select", "--table", str(path), "--candidate", "binomial:8,0.1",
                        "--candidate", "binomial:15,0.15"], capsys)
    assert code == 0
    assert json.loads(out)["winner"] == "binomial:8,0.1"


def test_classical_truncated_region(tmp_path, capsys):
    path = tmp_path / "n.csv"
    path.write_text("y,count\n-1.5331,23000\n0.03869,89000\n")
    code, out, _ = run(["estimate", "--table", str(path), "--family", "normal", "--method", "classical-truncated",
                        "--known", "sd=1", "--region", "[-1.7951,-1.2712),[-0.22335,0.30055)"], capsys)
    assert code == 0
    assert json.loads(out)["params"]["mean"] == pytest.approx(0.11075, abs=2e-2)


def test_twelve_significant_digits(two_point, capsys):
    _, out, _ = run(["distance", "--table", two_point, "--model", "exponential:0.3"], capsys)
    dv = json.loads(out)["dv"]
    assert len(repr(dv).replace(".", "").lstrip("0")) <= 13


def test_byte_identical_stdout(tmp_path):
    cmd = [sys.executable, "-m", "vardist", "simulate", "--experiment", "binomial-id",
           "--replicates", "30", "--seed", "5"]
    a = subprocess.run(cmd, capture_output=True, check=True)
    b = subprocess.run(cmd, capture_output=True, check=True)
    assert a.stdout == b.stdout
    assert json.loads(a.stdout)["spec"]["seed"] == 5


def test_emit_csv_round_trip(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, _, _ = run(["simulate", "--experiment", "weibull-gamma", "--replicates", "3", "--seed", "2",
                      "--gamma-convention", "scale", "--emit-csv", str(out_dir)], capsys)
    assert code == 0
    assert (out_dir / "replicates.csv").read_text().startswith("replicate,generator")
    tables = sorted(Path(out_dir, "tables").glob("*.csv"))
    assert len(tables) == 3
    t = str(tables[0])
    assert run(["estimate", "--table", t, "--family", "weibull", "--known", "shape=1.2"], capsys)[0] == 0
    assert run(["select", "--table", t, "--candidate", "weibull:1.2,1.5", "--candidate", "gamma:2,2"], capsys)[0] == 0
    assert run(["distance", "--table", t, "--model", "gamma:2,2"], capsys)[0] == 0
