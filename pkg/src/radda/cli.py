"""Benchmark harness for the Riccati solvers.

Subcommands
-----------
run      one solve (low-rank or dense mode), per-iteration records out
compare  both solvers in lockstep on one problem, per-iteration deviation
sweep    size/shift grid in one mode, one summary row per run

Data goes to --out or stdout (CSV or JSON); human-readable summaries go to
stderr.  Exit codes: 0 converged, 1 not converged within the budget,
2 usage error, 3 iteration breakdown, 4 low-rank/dense equivalence
regression (compare only).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .cayley import ShiftSingularError, build_shifted, choose_alpha, \
    init_dense, init_lowrank
from .dense import AddaDenseState, SingularUpdateError, adda_solve_dense, \
    adda_step_dense
from .lowrank import BreakdownError, ImplicitAhat, RaddaState, radda_solve, \
    radda_step, residual_lowrank
from .problems import CareProblem, DENSE_CAP, SizeCapError, make_example1, \
    make_example2, qnorm, residual_dense
from .serialize import load_problem

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_USAGE = 2
EXIT_BREAKDOWN = 3
EXIT_EQUIVALENCE = 4

#: compare mode flags a regression when the factored iterate drifts from the
#: dense iterate beyond this relative Frobenius distance
EQUIVALENCE_THRESHOLD = 1e-9

RUN_HEADER = "k,res,rank_x,rank_y,wall_ms"
COMPARE_HEADER = "k,res_lowrank,res_dense,x_deviation"
SWEEP_HEADER = "n,alpha,res,it,cpu_s,status"


@dataclass
class RunConfig:
    """Resolved CLI options shared by the subcommands."""

    example: int | None = None
    problem_path: str | None = None
    n: int = 128
    alpha: float | None = None
    tol: float = 1e-12
    maxit: int = 30
    mode: str = "lowrank"
    truncate_tol: float = 0.0
    fmt: str = "csv"
    out: str | None = None
    dense_cap: int = DENSE_CAP


def _dense_cap_from_env() -> int:
    raw = os.environ.get("RADDA_DENSE_CAP")
    if raw is None:
        return DENSE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise SystemExit(f"RADDA_DENSE_CAP must be an integer, got {raw!r}")
    if cap < 1:
        raise SystemExit(f"RADDA_DENSE_CAP must be positive, got {cap}")
    return cap


def _load(config: RunConfig) -> CareProblem:
    if config.problem_path is not None:
        return load_problem(config.problem_path)
    if config.example == 1:
        return make_example1(config.n)
    if config.example == 2:
        return make_example2(config.n)
    raise ValueError("one of --example/--problem is required")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _csv(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join("" if v is None else
                              (repr(float(v)) if isinstance(v, float) else str(v))
                              for v in row))
    return "\n".join(lines) + "\n"


def _json_doc(meta: dict, columns: list, rows) -> str:
    doc = dict(meta)
    doc["rows"] = [dict(zip(columns, row)) for row in rows]
    return json.dumps(doc, indent=2, default=float) + "\n"


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_run(config: RunConfig) -> int:
    """One solve; emits the per-iteration trajectory."""
    problem = _load(config)
    if config.mode == "dense" and problem.n > config.dense_cap:
        _info(f"error: dense mode is capped at n={config.dense_cap} "
              f"(got n={problem.n}); use --mode lowrank")
        return EXIT_USAGE

    partial = None
    code = EXIT_OK
    try:
        if config.mode == "lowrank":
            _, report = radda_solve(problem, alpha=config.alpha,
                                    tol=config.tol, maxit=config.maxit,
                                    truncate_tol=config.truncate_tol)
        else:
            _, report = adda_solve_dense(problem, alpha=config.alpha,
                                         tol=config.tol, maxit=config.maxit,
                                         cap=config.dense_cap)
    except BreakdownError as exc:
        _info(f"error: {exc}")
        partial = exc.report
        code = EXIT_BREAKDOWN
    except (ShiftSingularError, SingularUpdateError) as exc:
        _info(f"error: {exc}")
        code = EXIT_BREAKDOWN
    if code == EXIT_OK and report.termination != "converged":
        code = EXIT_NOT_CONVERGED
    if code == EXIT_BREAKDOWN:
        report = partial

    if report is not None:
        res_at = dict(report.residual_history)
        rows = [(k, res_at.get(k), rx, ry, 1e3 * report.wall_times[i])
                for i, (k, rx, ry) in enumerate(report.rank_history)]
        if config.fmt == "csv":
            _emit(_csv(RUN_HEADER, rows), config.out)
        else:
            meta = {
                "command": "run",
                "mode": config.mode,
                "n": problem.n,
                "alpha": config.alpha,
                "tol": config.tol,
                "iterations": report.iterations,
                "termination": report.termination,
            }
            _emit(_json_doc(meta, RUN_HEADER.split(","), rows), config.out)
        final = report.residual_history[-1][1] if report.residual_history else float("nan")
        _info(f"{config.mode}: n={problem.n} iterations={report.iterations} "
              f"residual={final:.3e} termination={report.termination} "
              f"time={sum(report.wall_times):.3f}s")
    return code


def cmd_compare(config: RunConfig) -> int:
    """Both solvers in lockstep; emits per-iteration residuals and the
    relative Frobenius deviation of the reconstructed factored iterate."""
    problem = _load(config)
    if problem.n > config.dense_cap:
        _info(f"error: compare needs the dense side, capped at "
              f"n={config.dense_cap} (got n={problem.n})")
        return EXIT_USAGE

    alpha = choose_alpha(problem) if config.alpha is None else config.alpha
    rows = []
    max_dev = 0.0
    code = EXIT_OK
    try:
        shifted = build_shifted(problem, alpha)
        init = init_lowrank(problem, shifted)
        lr = RaddaState(k=0, D=init.D0, Sigma=init.Sigma0, P=init.P0,
                        Gamma=init.Gamma0,
                        ahat=ImplicitAhat(base=init.ahat0),
                        cross=init.D0.T @ init.P0)
        ahat0, X0, Y0 = init_dense(problem, shifted, cap=config.dense_cap)
        dn = AddaDenseState(k=0, ahat=ahat0, X=X0, Y=Y0)
        qn = qnorm(problem)
        converged = False
        for k in range(config.maxit + 1):
            if k > 0:
                lr = radda_step(lr)
                dn = adda_step_dense(dn)
            X_lr = lr.D @ lr.Sigma @ lr.D.T
            res_lr = residual_lowrank(problem, lr.D, lr.Sigma, qn)
            res_dn = residual_dense(problem, dn.X)
            scale = np.linalg.norm(dn.X, "fro")
            dev = np.linalg.norm(X_lr - dn.X, "fro") / (scale or 1.0)
            max_dev = max(max_dev, dev)
            rows.append((k, float(res_lr), float(res_dn), float(dev)))
            if res_lr <= config.tol and res_dn <= config.tol:
                converged = True
                break
        if not converged:
            code = EXIT_NOT_CONVERGED
    except (BreakdownError, ShiftSingularError, SingularUpdateError) as exc:
        _info(f"error: {exc}")
        code = EXIT_BREAKDOWN

    if config.fmt == "csv":
        _emit(_csv(COMPARE_HEADER, rows), config.out)
    else:
        meta = {
            "command": "compare",
            "n": problem.n,
            "alpha": alpha,
            "tol": config.tol,
            "max_deviation": max_dev,
        }
        _emit(_json_doc(meta, COMPARE_HEADER.split(","), rows), config.out)
    _info(f"compare: n={problem.n} steps={len(rows)} "
          f"max_deviation={max_dev:.3e}")
    if code == EXIT_OK and max_dev > EQUIVALENCE_THRESHOLD:
        _info(f"error: low-rank/dense deviation {max_dev:.3e} exceeds "
              f"{EQUIVALENCE_THRESHOLD:.1e}")
        return EXIT_EQUIVALENCE
    return code


def cmd_sweep(config: RunConfig, sizes: list, alphas: list) -> int:
    """Grid of runs; one summary row per (n, alpha) pair.

    Individual failures are recorded in the status column and the sweep
    keeps going.
    """
    if not sizes:
        _info("error: --sizes must name at least one problem size")
        return EXIT_USAGE
    rows = []
    all_converged = True
    for n in sizes:
        for a in alphas:
            cfg = RunConfig(**{**config.__dict__, "n": n, "alpha": a})
            t0 = perf_counter()
            try:
                problem = _load(cfg)
                if cfg.mode == "dense":
                    _, report = adda_solve_dense(
                        problem, alpha=a, tol=cfg.tol, maxit=cfg.maxit,
                        cap=cfg.dense_cap)
                else:
                    _, report = radda_solve(
                        problem, alpha=a, tol=cfg.tol, maxit=cfg.maxit,
                        truncate_tol=cfg.truncate_tol)
                elapsed = perf_counter() - t0
                res = report.residual_history[-1][1]
                a_used = choose_alpha(problem) if a is None else a
                rows.append((n, float(a_used), float(res),
                             report.iterations, float(elapsed),
                             report.termination))
                if report.termination != "converged":
                    all_converged = False
            except Exception as exc:  # per-row capture by design
                elapsed = perf_counter() - t0
                rows.append((n, None if a is None else float(a), None, None,
                             float(elapsed), f"error:{type(exc).__name__}"))
                all_converged = False
    if config.fmt == "csv":
        _emit(_csv(SWEEP_HEADER, rows), config.out)
    else:
        meta = {"command": "sweep", "mode": config.mode, "tol": config.tol}
        _emit(_json_doc(meta, SWEEP_HEADER.split(","), rows), config.out)
    _info(f"sweep: {len(rows)} runs, "
          f"{sum(1 for r in rows if r[5] == 'converged')} converged")
    return EXIT_OK if all_converged else EXIT_NOT_CONVERGED


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radda-bench",
        description="Benchmark driver for the low-rank Riccati doubling solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--example", type=int, choices=(1, 2),
                     help="built-in problem family")
    src.add_argument("--problem", metavar="PATH",
                     help="JSON problem file (see radda.serialize)")
    common.add_argument("--n", type=int, default=None,
                        help="problem size for --example (default 128)")
    common.add_argument("--alpha", type=float, default=None,
                        help="shift override (default: sqrt of norm product)")
    common.add_argument("--tol", type=float, default=1e-12,
                        help="relative residual stopping tolerance")
    common.add_argument("--maxit", type=int, default=30,
                        help="iteration budget")
    common.add_argument("--mode", choices=("lowrank", "dense", "both"),
                        default="lowrank", help="solver selection")
    common.add_argument("--truncate-tol", type=float, default=0.0,
                        help="factor recompression cutoff (0 = off)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"),
                        default="csv", help="output format")
    common.add_argument("--out", default=None,
                        help="write records here instead of stdout")

    sub.add_parser("run", parents=[common],
                   help="single solve, per-iteration records")
    sub.add_parser("compare", parents=[common],
                   help="low-rank and dense solvers in lockstep")
    sweep = sub.add_parser("sweep", parents=[common],
                           help="size/shift grid, one row per run")
    sweep.add_argument("--sizes", default="128,256,512",
                       help="comma-separated problem sizes")
    sweep.add_argument("--alphas", default="auto",
                       help="comma-separated shifts, or 'auto'")
    return parser


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        example=args.example,
        problem_path=args.problem,
        n=128 if args.n is None else args.n,
        alpha=args.alpha,
        tol=args.tol,
        maxit=args.maxit,
        mode=args.mode,
        truncate_tol=args.truncate_tol,
        fmt=args.fmt,
        out=args.out,
        dense_cap=_dense_cap_from_env(),
    )


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
    except SystemExit as exc:
        _info(f"error: {exc}")
        return EXIT_USAGE

    if args.example is None and args.problem is None:
        _info("error: one of --example/--problem is required")
        return EXIT_USAGE
    if args.problem is not None and args.n is not None:
        _info("error: --n only applies to the built-in --example families")
        return EXIT_USAGE
    if args.command == "sweep" and args.problem is not None:
        _info("error: sweep varies the problem size; it needs --example")
        return EXIT_USAGE
    if args.example is not None:
        min_n = 2 if args.example == 1 else 3
        if config.n < min_n:
            _info(f"error: example {args.example} needs n >= {min_n}")
            return EXIT_USAGE
    if args.tol <= 0 or args.maxit < 1 or args.truncate_tol < 0:
        _info("error: --tol must be > 0, --maxit >= 1, --truncate-tol >= 0")
        return EXIT_USAGE

    try:
        if args.command == "run":
            if config.mode == "both":
                _info("error: run emits one trajectory; "
                      "use the compare subcommand for both solvers")
                return EXIT_USAGE
            return cmd_run(config)
        if args.command == "compare":
            return cmd_compare(config)
        if config.mode == "both":
            _info("error: sweep runs one mode; pick lowrank or dense")
            return EXIT_USAGE
        try:
            sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        except ValueError:
            _info(f"error: bad --sizes value {args.sizes!r}")
            return EXIT_USAGE
        if args.alphas.strip() == "auto":
            alphas = [None]
        else:
            try:
                alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
            except ValueError:
                _info(f"error: bad --alphas value {args.alphas!r}")
                return EXIT_USAGE
        return cmd_sweep(config, sizes, alphas)
    except (SizeCapError, ValueError) as exc:
        _info(f"error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _info(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
