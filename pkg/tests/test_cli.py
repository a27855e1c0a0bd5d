import pytest

from nbldpc.cli import main
from nbldpc.ensemble import THRESHOLD_OPTIMIZED_Q4, format_ensemble
from nbldpc.exitchart import ITERATION_REFERENCE
from nbldpc.graph import girth, read_matrix

import oracles


@pytest.fixture
def reg(tmp_path):
    path = tmp_path / "r36.txt"
    path.write_text("q 4\nlambda 3 1\nrho 6 1\n")
    return path


def test_analyze_polynomial(capsys):
    coeffs = ",".join(map(str, ITERATION_REFERENCE[0][1]))
    assert main(["analyze", "--chart-poly", coeffs]) == 0
    out = capsys.readouterr().out
    assert "N_estimate" in out and "N_discrete" in out


def test_analyze_ensemble_and_csv(reg, tmp_path, capsys):
    out = tmp_path / "f.csv"
    assert main(["analyze", str(reg), "--p0", "0.05", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "K " in text and "threshold" in text
    assert out.read_text().startswith("# command: analyze")


def test_analyze_errors(reg):
    assert main(["analyze", str(reg), "--p0", "1e-6", "--pt", "1e-2"]) == 2
    assert main(["analyze", str(reg), "--p0", "0.3"]) == 1
    assert main(["analyze"]) == 2
    assert main(["analyze", "--chart-poly", "a,b"]) == 2


def test_binary_analysis(tmp_path, capsys):
    path = tmp_path / "b.txt"
    path.write_text("lambda 3 1\nrho 6 1\n")
    assert main(["analyze", str(path), "--q", "2", "--p0", "0.03"]) == 0
    assert "threshold 0.0394" in capsys.readouterr().out


def test_construct_round_trip_and_girth(tmp_path, capsys):
    ens = tmp_path / "e.txt"
    ens.write_text("q 4\nlambda 2 1\nrho 4 1\n")
    out = tmp_path / "h.txt"
    assert main(["construct", str(ens), "--n", "8", "--seed", "1", "--out", str(out)]) == 0
    H = read_matrix(out)
    assert H.n == 8 and H.m == 4
    assert f"girth {girth(H)}" in capsys.readouterr().out
    assert girth(H) == oracles.girth_bfs(H.to_dense())


def test_construct_infeasible(reg):
    assert main(["construct", str(reg), "--n", "1"]) == 1


def test_simulate_is_byte_reproducible(reg, tmp_path):
    h = tmp_path / "h.txt"
    assert main(["construct", str(reg), "--n", "60", "--out", str(h)]) == 0
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path, workers in ((a, "1"), (b, "2")):
        assert main(["simulate", str(h), "--sweep", "1.0,2.0", "--max-iter", "10",
                     "--max-trials", "64", "--seed", "7", "--out", str(path),
                     "--workers", workers]) == 0
    strip = lambda p: [l for l in p.read_text().splitlines() if "workers" not in l]
    assert strip(a) == strip(b)


def test_simulate_zero_noise_row(reg, tmp_path, capsys):
    h = tmp_path / "h.txt"
    main(["construct", str(reg), "--n", "60", "--out", str(h)])
    capsys.readouterr()
    assert main(["simulate", str(h), "--decoder", "gallager-b", "--sweep", "0",
                 "--max-trials", "32"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert row[1] == "0.0" and row[2] == "0.0"


def test_simulate_usage_errors(reg, tmp_path):
    h = tmp_path / "h.txt"
    main(["construct", str(reg), "--n", "60", "--out", str(h)])
    assert main(["simulate", str(h), "--sweep", ""]) == 2
    assert main(["simulate", str(h), "--sweep", "1", "--max-iter", "0"]) == 2
    assert main(["simulate", str(tmp_path / "missing.txt"), "--sweep", "1"]) == 2


def test_design(reg, tmp_path):
    out, traj = tmp_path / "o.txt", tmp_path / "t.csv"
    assert main(["design", str(reg), "--max-rounds", "3", "--out", str(out),
                 "--trajectory", str(traj)]) == 0
    K = [float(l.split(",")[1]) for l in traj.read_text().splitlines()
         if l and not l.startswith("#") and not l.startswith("round")]
    assert all(b <= a for a, b in zip(K, K[1:]))
    assert "lambda" in out.read_text()


def test_design_errors(reg, tmp_path):
    assert main(["design", str(reg), "--zeta1", "0.3"]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text(format_ensemble(THRESHOLD_OPTIMIZED_Q4))
    assert main(["design", str(bad)]) == 1


def test_tables(tmp_path, capsys):
    assert main(["tables", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "iterations.csv").exists() and (tmp_path / "min_dv.csv").exists()
    assert capsys.readouterr().out.count("min_dv R=") == 6


def test_bad_subcommand():
    assert main(["frobnicate"]) == 2
