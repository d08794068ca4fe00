"""Command-line entry points, driven through main(argv)."""

import csv
import os

import numpy as np
import pytest

import seldet as sd
from seldet.cli import main
from helpers import random_spd, tridiag


@pytest.fixture
def matrix_file(tmp_path):
    rng = np.random.default_rng(202)
    a = random_spd(rng, 30)
    path = tmp_path / "a.mtx"
    with open(path, "w", encoding="utf-8") as fh:
        sd.write_matrix_market(a, fh)
    return str(path), a


@pytest.fixture
def dataset_file(tmp_path):
    path = tmp_path / "trial.tsv"
    rc = main(["gen", "--years", "3", "--centers", "5", "--fraction", "0.6",
               "--controls", "3", "--new-per-year", "3",
               "--mean-persistence", "2", "--missing", "0.05",
               "--seed", "11", "--out", str(path)])
    assert rc == 0
    return str(path)


# ----------------------------------------------------------------- analyze


def test_analyze_reports_identity_pass(matrix_file, capsys):
    path, _ = matrix_file
    assert main(["analyze", path]) == 0
    out = capsys.readouterr().out
    assert "flop identity : PASS" in out
    assert "nnz(L)" in out


def test_analyze_csv_output(matrix_file, tmp_path, capsys):
    path, a = matrix_file
    out_csv = tmp_path / "report.csv"
    assert main(["analyze", path, "--ordering", "natural",
                 "--out", str(out_csv)]) == 0
    with open(out_csv, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert int(rows[0]["n"]) == a.n
    assert rows[0]["identity"] == "PASS"
    sym = sd.symbolic_factor(a, sd.natural_order(a.n))
    assert int(rows[0]["nnz_L"]) == sym.nnz_L


def test_analyze_ordering_from_file(matrix_file, tmp_path, capsys):
    path, a = matrix_file
    perm_path = tmp_path / "p.txt"
    with open(perm_path, "w", encoding="utf-8") as fh:
        sd.write_order(sd.amd_order(a), fh)
    assert main(["analyze", path, "--ordering", f"file:{perm_path}"]) == 0


def test_analyze_missing_file_fails(capsys):
    assert main(["analyze", "/nonexistent/x.mtx"]) == 1
    assert "error:" in capsys.readouterr().err


def test_analyze_unknown_ordering_fails(matrix_file, capsys):
    path, _ = matrix_file
    assert main(["analyze", path, "--ordering", "bogus"]) == 1
    assert "unknown ordering" in capsys.readouterr().err


# ------------------------------------------------------------------ selinv


def test_selinv_verify_passes(matrix_file, capsys):
    path, _ = matrix_file
    assert main(["selinv", path, "--verify"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_selinv_writes_inverse_subset(matrix_file, tmp_path, capsys):
    path, a = matrix_file
    out_path = tmp_path / "z.mtx"
    assert main(["selinv", path, "--out", str(out_path)]) == 0
    with open(out_path, encoding="utf-8") as fh:
        z = sd.read_matrix_market(fh.read())
    inv = sd.dense_inverse_oracle(a)
    rows, cols, vals = z.triplets()
    assert np.allclose(vals, inv[rows, cols], atol=1e-10 * np.abs(inv).max())


def test_selinv_indefinite_input_fails(tmp_path, capsys):
    a = sd.from_coo_arrays(2, np.array([0, 1, 1]), np.array([0, 0, 1]),
                           np.array([1.0, 2.0, 1.0]))
    path = tmp_path / "indef.mtx"
    with open(path, "w", encoding="utf-8") as fh:
        sd.write_matrix_market(a, fh)
    assert main(["selinv", str(path)]) == 1
    assert "non-positive pivot" in capsys.readouterr().err


# -------------------------------------------------------------------- reml


def test_reml_report_with_checks(dataset_file, capsys):
    rc = main(["reml", dataset_file, "--check-h-form", "--fd-check"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "loglik" in out
    assert out.count("PASS") >= 2  # H-form agreement + FD agreement
    assert "FAIL" not in out


def test_reml_custom_parameters(dataset_file, capsys):
    rc = main(["reml", dataset_file, "--sigma2", "2.0",
               "--gamma", "0.5", "--phi", "1.5"])
    assert rc == 0
    assert "gamma:variety" in capsys.readouterr().out


def test_reml_csv_out(dataset_file, tmp_path, capsys):
    out_csv = tmp_path / "reml.csv"
    assert main(["reml", dataset_file, "--out", str(out_csv)]) == 0
    with open(out_csv, newline="", encoding="utf-8") as fh:
        rows = {r["quantity"]: r["value"] for r in csv.DictReader(fh)}
    assert "loglik" in rows
    d = sd.read_dataset(open(dataset_file, encoding="utf-8"))
    v = sd.VarianceParams(1.0, (1.0,) * len(d.factors),
                          (1.0,) * d.n_residual_blocks)
    assert float(rows["loglik"]) == pytest.approx(
        sd.restricted_loglik(d, v), rel=1e-9)


def test_reml_file_ordering(dataset_file, tmp_path, capsys):
    d = sd.read_dataset(open(dataset_file, encoding="utf-8"))
    dim = d.p + sum(f.n_levels for f in d.factors)
    perm_path = tmp_path / "perm.txt"
    with open(perm_path, "w", encoding="utf-8") as fh:
        sd.write_order(sd.natural_order(dim), fh)
    assert main(["reml", dataset_file, "--ordering", f"file:{perm_path}"]) == 0


def test_reml_wrong_parameter_count_fails(dataset_file, capsys):
    assert main(["reml", dataset_file, "--gamma", "1,1"]) == 1
    assert "error:" in capsys.readouterr().err


# --------------------------------------------------------------------- gen


def test_gen_writes_readable_dataset(dataset_file, capsys):
    d = sd.read_dataset(open(dataset_file, encoding="utf-8"))
    assert d.n_obs > 0
    assert tuple(f.name for f in d.factors) == sd.RANDOM_TERMS


def test_gen_preset_and_variance_overrides(tmp_path, capsys):
    path = tmp_path / "t.tsv"
    rc = main(["gen", "--years", "2", "--centers", "3", "--controls", "2",
               "--new-per-year", "1", "--mean-persistence", "1.5",
               "--missing", "0.0", "--var", "variety=2.0",
               "--var", "year=0.5", "--seed", "3", "--out", str(path)])
    assert rc == 0
    assert "units" in capsys.readouterr().out


def test_gen_rejects_bad_var_spec(tmp_path, capsys):
    rc = main(["gen", "--years", "2", "--var", "nope=1.0",
               "--out", str(tmp_path / "x.tsv")])
    assert rc == 1


# ------------------------------------------------------------------- bench


def test_bench_csv_schema(tmp_path, capsys):
    # amd only: the natural ordering fills these systems so badly that a
    # single rung would dominate the whole suite's runtime
    out_csv = tmp_path / "bench.csv"
    rc = main(["bench", "--problems", "prob1", "--orderings", "amd",
               "--out", str(out_csv)])
    assert rc == 0
    with open(out_csv, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    row = rows[0]
    assert row["problem"] == "prob1" and row["ordering"] == "amd"
    assert int(row["pred_ldlt"]) == int(row["meas_ldlt"])
    assert int(row["pred_selinv"]) == int(row["meas_selinv"])
    assert os.path.exists(str(out_csv) + ".pairs.csv")


def test_bench_unknown_problem_fails(capsys):
    assert main(["bench", "--problems", "prob99"]) == 1
    assert "failed" in capsys.readouterr().err


# ------------------------------------------------------------------ verify


def test_verify_small_matrix_passes(matrix_file, capsys):
    path, _ = matrix_file
    assert main(["verify", path]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4
    assert "FAIL" not in out


def test_verify_rejects_large_input(tmp_path, capsys):
    a = sd.identity_matrix(501)
    path = tmp_path / "big.mtx"
    with open(path, "w", encoding="utf-8") as fh:
        sd.write_matrix_market(a, fh)
    assert main(["verify", str(path)]) == 1


def test_verify_chain(tmp_path, capsys):
    a = tridiag([2.0, 2.0, 2.0], [-1.0, -1.0])
    path = tmp_path / "chain.mtx"
    with open(path, "w", encoding="utf-8") as fh:
        sd.write_matrix_market(a, fh)
    assert main(["verify", str(path), "--ordering", "natural"]) == 0
