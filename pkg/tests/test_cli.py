"""Exercises the benchmark command line end to end via main().

Most tests call radda.cli.main(argv) directly and inspect exit codes plus
captured stdout; one subprocess test checks the installed console script.
"""

import json
import shutil
import subprocess

import numpy as np
import pytest

from radda import cli
from radda.cli import (COMPARE_HEADER, EXIT_BREAKDOWN, EXIT_EQUIVALENCE,
                       EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, RUN_HEADER,
                       SWEEP_HEADER, main)
from radda.problems import CareProblem, make_example1
from radda.serialize import save_problem


def run_main(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRun:
    def test_csv_trajectory(self, capsys):
        code, out, err = run_main(
            capsys, ["run", "--example", "1", "--n", "64"])
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == RUN_HEADER
        assert len(lines) >= 2
        # every row: iteration index, residual, two ranks, a wall time
        for i, line in enumerate(lines[1:]):
            k, res, rx, ry, ms = line.split(",")
            assert int(k) == i
            assert float(res) >= 0.0
            assert int(rx) == 2 ** i and int(ry) == 2 ** i
            assert float(ms) >= 0.0
        assert "termination=converged" in err

    def test_csv_floats_roundtrip_exactly(self, capsys):
        code, out, _ = run_main(
            capsys, ["run", "--example", "1", "--n", "32"])
        assert code == EXIT_OK
        from radda.lowrank import radda_solve
        _, report = radda_solve(make_example1(32))
        res_at = dict(report.residual_history)
        for line in out.splitlines()[1:]:
            k, res, _, _, _ = line.split(",")
            # repr-based CSV floats parse back to the exact binary value
            assert float(res) == res_at[int(k)]

    def test_json_trajectory(self, capsys):
        code, out, _ = run_main(
            capsys, ["run", "--example", "2", "--n", "32",
                     "--format", "json"])
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["command"] == "run"
        assert doc["mode"] == "lowrank"
        assert doc["n"] == 32
        assert doc["termination"] == "converged"
        assert doc["iterations"] == len(doc["rows"]) - 1
        for row in doc["rows"]:
            assert set(row) == {"k", "res", "rank_x", "rank_y", "wall_ms"}

    def test_dense_mode(self, capsys):
        code, out, err = run_main(
            capsys, ["run", "--example", "1", "--n", "48",
                     "--mode", "dense"])
        assert code == EXIT_OK
        assert out.splitlines()[0] == RUN_HEADER
        assert "dense: n=48" in err

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "traj.csv"
        code, out, _ = run_main(
            capsys, ["run", "--example", "1", "--n", "32",
                     "--out", str(target)])
        assert code == EXIT_OK
        assert out == ""
        assert target.read_text().splitlines()[0] == RUN_HEADER

    def test_problem_file(self, capsys, tmp_path):
        path = tmp_path / "prob.json"
        save_problem(path, make_example1(24))
        code, out, _ = run_main(capsys, ["run", "--problem", str(path)])
        assert code == EXIT_OK
        assert out.splitlines()[0] == RUN_HEADER

    def test_alpha_and_truncation_flags(self, capsys):
        code, _, err = run_main(
            capsys, ["run", "--example", "1", "--n", "64",
                     "--alpha", "17.0", "--truncate-tol", "1e-12"])
        assert code == EXIT_OK
        assert "termination=converged" in err

    def test_budget_exhausted_is_exit_1(self, capsys):
        code, out, _ = run_main(
            capsys, ["run", "--example", "1", "--n", "32",
                     "--maxit", "1", "--tol", "1e-30"])
        assert code == EXIT_NOT_CONVERGED
        # trajectory still emitted for the completed iterations
        assert out.splitlines()[0] == RUN_HEADER
        assert len(out.splitlines()) == 3  # k = 0, 1

    def test_singular_shift_is_exit_3(self, capsys, tmp_path):
        # A = I makes the default shift alpha = 1 land exactly on an
        # eigenvalue, so the shifted factorisation is singular.
        path = tmp_path / "identity.json"
        problem = CareProblem(np.eye(2), np.ones((2, 1)), np.ones((1, 2)))
        save_problem(path, problem)
        code, _, err = run_main(capsys, ["run", "--problem", str(path)])
        assert code == EXIT_BREAKDOWN
        assert "error:" in err


class TestUsageErrors:
    def test_missing_source(self, capsys):
        code, _, err = run_main(capsys, ["run"])
        assert code == EXIT_USAGE
        assert "--example/--problem" in err

    def test_problem_with_n(self, capsys, tmp_path):
        path = tmp_path / "p.json"
        save_problem(path, make_example1(8))
        code, _, err = run_main(
            capsys, ["run", "--problem", str(path), "--n", "16"])
        assert code == EXIT_USAGE
        assert "--n" in err

    def test_run_mode_both(self, capsys):
        code, _, err = run_main(
            capsys, ["run", "--example", "1", "--mode", "both"])
        assert code == EXIT_USAGE
        assert "compare" in err

    def test_n_below_family_minimum(self, capsys):
        code, _, _ = run_main(capsys, ["run", "--example", "2", "--n", "2"])
        assert code == EXIT_USAGE

    def test_bad_tolerances(self, capsys):
        for argv in (["run", "--example", "1", "--tol", "0"],
                     ["run", "--example", "1", "--maxit", "0"],
                     ["run", "--example", "1", "--truncate-tol", "-1"]):
            code, _, _ = run_main(capsys, argv)
            assert code == EXIT_USAGE

    def test_missing_problem_file(self, capsys, tmp_path):
        code, _, err = run_main(
            capsys, ["run", "--problem", str(tmp_path / "nope.json")])
        assert code == EXIT_USAGE
        assert "error:" in err

    def test_dense_over_cap(self, capsys):
        code, _, err = run_main(
            capsys, ["run", "--example", "1", "--n", "600",
                     "--mode", "dense"])
        assert code == EXIT_USAGE
        assert "capped" in err

    def test_dense_cap_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv("RADDA_DENSE_CAP", "32")
        code, _, err = run_main(
            capsys, ["run", "--example", "1", "--n", "64",
                     "--mode", "dense"])
        assert code == EXIT_USAGE
        assert "n=32" in err

    def test_dense_cap_env_invalid(self, capsys, monkeypatch):
        monkeypatch.setenv("RADDA_DENSE_CAP", "lots")
        code, _, _ = run_main(capsys, ["run", "--example", "1"])
        assert code == EXIT_USAGE


class TestCompare:
    def test_lockstep_csv(self, capsys):
        code, out, err = run_main(
            capsys, ["compare", "--example", "1", "--n", "24"])
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == COMPARE_HEADER
        for line in lines[1:]:
            _, res_lr, res_dn, dev = line.split(",")
            assert float(dev) <= cli.EQUIVALENCE_THRESHOLD
            assert float(res_lr) >= 0.0 and float(res_dn) >= 0.0
        assert "max_deviation" in err

    def test_lockstep_json(self, capsys):
        code, out, _ = run_main(
            capsys, ["compare", "--example", "2", "--n", "16",
                     "--format", "json"])
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["command"] == "compare"
        assert doc["max_deviation"] <= cli.EQUIVALENCE_THRESHOLD
        assert doc["rows"][-1]["res_lowrank"] <= 1e-12

    def test_deviation_gate_is_exit_4(self, capsys, monkeypatch):
        # force the gate shut so any deviation at all trips it
        monkeypatch.setattr(cli, "EQUIVALENCE_THRESHOLD", -1.0)
        code, _, err = run_main(
            capsys, ["compare", "--example", "1", "--n", "16"])
        assert code == EXIT_EQUIVALENCE
        assert "exceeds" in err

    def test_over_cap(self, capsys, monkeypatch):
        monkeypatch.setenv("RADDA_DENSE_CAP", "16")
        code, _, _ = run_main(
            capsys, ["compare", "--example", "1", "--n", "32"])
        assert code == EXIT_USAGE


class TestSweep:
    def test_grid_csv(self, capsys):
        code, out, err = run_main(
            capsys, ["sweep", "--example", "1", "--sizes", "16,32",
                     "--alphas", "auto"])
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == SWEEP_HEADER
        assert len(lines) == 3
        sizes = []
        for line in lines[1:]:
            n, alpha, res, it, cpu, status = line.split(",")
            sizes.append(int(n))
            assert float(alpha) > 0.0
            assert float(res) <= 1e-11
            assert int(it) >= 1
            assert status == "converged"
        assert sizes == [16, 32]
        assert "2 converged" in err

    def test_explicit_alphas_json(self, capsys):
        code, out, _ = run_main(
            capsys, ["sweep", "--example", "1", "--sizes", "16",
                     "--alphas", "17.0,20.0", "--format", "json"])
        assert code == EXIT_OK
        doc = json.loads(out)
        assert [row["alpha"] for row in doc["rows"]] == [17.0, 20.0]
        assert all(row["status"] == "converged" for row in doc["rows"])

    def test_failed_row_recorded_not_fatal(self, capsys):
        # n = 1 is below the family minimum: the row records the error and
        # the rest of the grid still runs
        code, out, _ = run_main(
            capsys, ["sweep", "--example", "1", "--sizes", "1,16"])
        assert code == EXIT_NOT_CONVERGED
        lines = out.splitlines()
        assert len(lines) == 3
        assert "error:ValueError" in lines[1]
        assert lines[2].endswith("converged")

    def test_empty_sizes(self, capsys):
        code, _, _ = run_main(
            capsys, ["sweep", "--example", "1", "--sizes", ""])
        assert code == EXIT_USAGE

    def test_bad_sizes_and_alphas(self, capsys):
        code, _, _ = run_main(
            capsys, ["sweep", "--example", "1", "--sizes", "big"])
        assert code == EXIT_USAGE
        code, _, _ = run_main(
            capsys, ["sweep", "--example", "1", "--alphas", "fast"])
        assert code == EXIT_USAGE

    def test_requires_example(self, capsys, tmp_path):
        path = tmp_path / "p.json"
        save_problem(path, make_example1(8))
        code, _, err = run_main(capsys, ["sweep", "--problem", str(path)])
        assert code == EXIT_USAGE
        assert "--example" in err

    def test_mode_both_rejected(self, capsys):
        code, _, _ = run_main(
            capsys, ["sweep", "--example", "1", "--mode", "both"])
        assert code == EXIT_USAGE


def test_console_script_installed():
    exe = shutil.which("radda-bench")
    assert exe is not None, "radda-bench entry point not on PATH"
    proc = subprocess.run(
        [exe, "run", "--example", "1", "--n", "32"],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == EXIT_OK
    assert proc.stdout.splitlines()[0] == RUN_HEADER
    assert "termination=converged" in proc.stderr
