"""Command-line front end.

Subcommands: generate | solve | compare | gap-check. Exit codes are a
stable contract: 0 success, 2 config error, 3 solver divergence (with the
partial trace flushed). Output files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .alm import DivergenceError, StepSchedule, derive_schedule, solve
from .baselines import solve_baseline
from .cournot import CournotConfig, generate
from .metrics import (GapOracleConfig, infeasibility, minty_gap,
                      solve_tiny_kkt, theta_error)
from .problem import evaluate_kkt_residual
from .trace import TraceEvaluator, write_compare_csv, write_trace_csv

INSTANCE_SCHEMA = "mvi-instance/1"
SUMMARY_SCHEMA = "mvi-summary/1"
SOLVERS = ("alm", "tikhonov", "eg")


class ConfigError(Exception):
    pass


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_via(path: Path, writer) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}")


def _cournot_config(data: dict) -> CournotConfig:
    if not isinstance(data, dict):
        raise ConfigError("instance config must be a JSON object")
    try:
        return CournotConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"instance config: {exc}")
    except ValueError as exc:
        raise ConfigError(f"instance config: {exc}")


def _resolve_instance(spec) -> CournotConfig:
    if isinstance(spec, str):
        payload = _load_json(spec)
        if payload.get("schema") != INSTANCE_SCHEMA:
            raise ConfigError(
                f"instance file {spec}: expected schema {INSTANCE_SCHEMA}")
        return _cournot_config(payload.get("config", {}))
    return _cournot_config(spec)


def _build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).parent, capture_output=True, text=True,
            timeout=5)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return f"mvibench-{__version__}"


def cmd_generate(args) -> int:
    cfg = _cournot_config(_load_json(args.config))
    if args.seed is not None:
        cfg = CournotConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    _, theta_star, obs = generate(cfg)
    payload = {
        "schema": INSTANCE_SCHEMA,
        "config": cfg.to_dict(),
        "theta_star": theta_star.tolist(),
        "coefficients": {"r": obs["r"].tolist(), "g": obs["g"].tolist()},
        "observations": {"X_t": obs["X_t"].tolist(),
                         "p_obs": obs["p_obs"].tolist()},
    }
    out = Path(args.out) / "instance.json"
    _atomic_write(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(str(out))
    return 0


def _run_one(cfg: CournotConfig, solver: str, schedule_spec, K: int,
             trace_every: int, gap_budget: int):
    """Run one solver; returns (rows, summary_dict, include_x_err)."""
    problem, theta_star, _ = generate(cfg)
    oracle = None
    if cfg.N <= 3 and problem.J == 1:
        try:
            oracle = solve_tiny_kkt(problem, theta_star)
        except (ValueError, RuntimeError):
            oracle = None
    evaluator = TraceEvaluator(
        problem, theta_star, oracle=oracle,
        gap_cfg=GapOracleConfig(inner_iterations=gap_budget,
                                lower_bound_samples=500, seed=cfg.seed))

    x0 = np.zeros(problem.n)
    theta0 = np.zeros(problem.m)
    eta_hint = problem.hints.mu_H / problem.hints.L_H ** 2

    t0 = time.perf_counter()
    if solver == "alm":
        if schedule_spec == "auto":
            schedule = derive_schedule(problem, seed=cfg.seed)
        else:
            schedule = StepSchedule(mode="user_supplied", **schedule_spec)
        final, rows = solve(problem, schedule, x0, theta0, K, trace_every,
                            evaluator=evaluator)
        x_last, lam, theta = final.x, final.lam, final.theta
        sched_used = {"gamma": schedule.gamma, "rho": schedule.rho,
                      "eta": schedule.eta, "mode": schedule.mode}
    else:
        gamma = None if schedule_spec == "auto" else schedule_spec["gamma"]
        z, theta, rows = solve_baseline(
            problem, solver, x0, theta0, K, trace_every, eta=eta_hint,
            gamma=gamma, evaluator=evaluator, seed=cfg.seed)
        x_last, lam = z[:problem.n], z[problem.n:]
        sched_used = {"gamma": gamma, "eta": eta_hint, "mode": "auto"
                      if schedule_spec == "auto" else "user_supplied"}
    elapsed = time.perf_counter() - t0

    final_cfg = GapOracleConfig(seed=cfg.seed)
    gap_val, _ = minty_gap(problem, x_last, theta_star, final_cfg)
    summary = {
        "schema": SUMMARY_SCHEMA,
        "solver": solver,
        "instance": cfg.to_dict(),
        "iterations": K,
        "schedule_used": sched_used,
        "elapsed_s": elapsed,
        "build_id": _build_id(),
        "final": {
            "infeasibility": infeasibility(problem, x_last, theta_star),
            "gap": gap_val,
            "kkt_residual": evaluate_kkt_residual(
                problem, x_last, theta, lam),
            "lambda_norm": float(np.linalg.norm(lam)),
            "theta_err": theta_error(theta, theta_star),
        },
    }
    if rows:
        last = rows[-1]
        summary["final"]["infeas_ergodic"] = last.infeas_ergodic
        summary["final"]["gap_ergodic"] = last.gap_ergodic
    if oracle is not None:
        summary["final"]["x_norm_err"] = float(
            np.linalg.norm(x_last - oracle.x_star))
    return rows, summary, oracle is not None


_RUN_CONFIG_KEYS = {"instance", "solver", "schedule", "K", "trace_every",
                    "output_dir", "trace_gap_iterations"}


def _parse_run_config(data: dict, args) -> dict:
    cfg = dict(data)
    unknown = sorted(set(cfg) - _RUN_CONFIG_KEYS)
    if unknown:
        raise ConfigError(
            f"unknown config field(s): {', '.join(unknown)}; "
            f"expected a subset of {sorted(_RUN_CONFIG_KEYS)}")
    if args.k is not None:
        cfg["K"] = args.k
    if args.solver is not None:
        cfg["solver"] = args.solver
    if args.trace_every is not None:
        cfg["trace_every"] = args.trace_every
    if args.out is not None:
        cfg["output_dir"] = args.out
    if "instance" not in cfg:
        raise ConfigError("missing field: instance")
    K = cfg.get("K", 100_000)
    if not isinstance(K, int) or K < 1:
        raise ConfigError("K: must be a positive integer")
    solver = cfg.get("solver", "alm")
    if solver not in SOLVERS:
        raise ConfigError(f"solver: unknown tag {solver!r}; "
                          f"expected one of {SOLVERS}")
    trace_every = cfg.get("trace_every", max(1, K // 1000))
    if not isinstance(trace_every, int) or trace_every < 1:
        raise ConfigError("trace_every: must be a positive integer")
    schedule = cfg.get("schedule", "auto")
    if schedule != "auto":
        if not isinstance(schedule, dict) or \
                set(schedule) != {"gamma", "rho", "eta"}:
            raise ConfigError(
                "schedule: must be 'auto' or {gamma, rho, eta}")
    inst = _resolve_instance(cfg["instance"])
    if args.seed is not None:
        inst = CournotConfig.from_dict({**inst.to_dict(), "seed": args.seed})
    return {
        "instance": inst, "solver": solver, "K": K,
        "trace_every": trace_every, "schedule": schedule,
        "output_dir": Path(cfg.get("output_dir", ".")),
        "gap_budget": int(cfg.get("trace_gap_iterations", 300)),
    }


def cmd_solve(args) -> int:
    rc = _parse_run_config(_load_json(args.config), args)
    out_dir = rc["output_dir"]
    trace_path = out_dir / f"{rc['solver']}_trace.csv"
    try:
        rows, summary, has_oracle = _run_one(
            rc["instance"], rc["solver"], rc["schedule"], rc["K"],
            rc["trace_every"], rc["gap_budget"])
    except DivergenceError as exc:
        _atomic_write_via(trace_path, lambda tmp: write_trace_csv(
            exc.partial_trace, tmp, include_x_err=False))
        print(f"divergence at iteration {exc.iteration}; partial trace "
              f"written to {trace_path}", file=sys.stderr)
        return 3
    _atomic_write_via(trace_path, lambda tmp: write_trace_csv(
        rows, tmp, include_x_err=has_oracle))
    summary_path = out_dir / f"{rc['solver']}_summary.json"
    _atomic_write(summary_path,
                  json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(str(trace_path))
    print(str(summary_path))
    return 0


def cmd_compare(args) -> int:
    data = _load_json(args.config)
    if "runs" in data:
        runs = data["runs"]
        if not isinstance(runs, list) or len(runs) < 2:
            raise ConfigError("runs: need at least two run configs")
        insts = [json.dumps(r.get("instance"), sort_keys=True) for r in runs]
        if len(set(insts)) != 1:
            raise ConfigError("runs: all run configs must share one instance")
        base = dict(runs[0])
        solvers = [r.get("solver", "alm") for r in runs]
    else:
        solvers = data.get("solvers")
        if not isinstance(solvers, list) or len(solvers) < 2:
            raise ConfigError("solvers: need at least two solver tags")
        base = {k: v for k, v in data.items() if k != "solvers"}
    for s in solvers:
        if s not in SOLVERS:
            raise ConfigError(f"solvers: unknown tag {s!r}")
    if len(set(solvers)) != len(solvers):
        raise ConfigError("solvers: duplicate tags")

    tagged = []
    summaries = {}
    include_x_err = True
    for solver in solvers:
        base["solver"] = solver
        rc = _parse_run_config(base, args)
        rows, summary, has_oracle = _run_one(
            rc["instance"], solver, rc["schedule"], rc["K"],
            rc["trace_every"], rc["gap_budget"])
        tagged.append((solver, rows))
        summaries[solver] = summary
        include_x_err = include_x_err and has_oracle

    out_dir = rc["output_dir"]
    csv_path = out_dir / "compare.csv"
    _atomic_write_via(csv_path, lambda tmp: write_compare_csv(
        tagged, tmp, include_x_err=include_x_err))
    summary_path = out_dir / "compare_summary.json"
    _atomic_write(summary_path,
                  json.dumps({"schema": SUMMARY_SCHEMA, "runs": summaries},
                             indent=2, sort_keys=True) + "\n")
    print(str(csv_path))
    print(str(summary_path))
    return 0


def cmd_gap_check(args) -> int:
    payload = _load_json(args.config)
    if payload.get("schema") == INSTANCE_SCHEMA:
        cfg = _cournot_config(payload.get("config", {}))
    else:
        cfg = _cournot_config(payload)
    problem, theta_star, _ = generate(cfg)
    try:
        x = np.array([float(t) for t in args.x.split(",")])
    except ValueError:
        raise ConfigError("--x: expected comma-separated floats")
    if x.size != problem.n:
        raise ConfigError(f"--x: expected {problem.n} components")
    gap_cfg = GapOracleConfig(
        eps_enlargement=args.eps, seed=cfg.seed)
    gap, cert = minty_gap(problem, x, theta_star, gap_cfg)
    print(json.dumps({
        "gap": gap,
        "infeasibility": infeasibility(problem, x, theta_star),
        "certificate": cert.tolist(),
    }, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvibench",
        description="Benchmarks for misspecified constrained VIs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=out_default)
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("generate", help="write an instance JSON file")
    common(sp, out_default=".")
    sp.set_defaults(fn=cmd_generate)

    sp = sub.add_parser("solve", help="run one solver, write trace + summary")
    common(sp)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--solver", choices=SOLVERS, default=None)
    sp.add_argument("--trace-every", type=int, default=None)
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("compare", help="run several solvers, combined CSV")
    common(sp)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--solver", default=None, help=argparse.SUPPRESS)
    sp.add_argument("--trace-every", type=int, default=None)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("gap-check", help="gap and infeasibility of a point")
    common(sp)
    sp.add_argument("--x", required=True,
                    help="comma-separated primal point")
    sp.add_argument("--eps", type=float, default=None)
    sp.set_defaults(fn=cmd_gap_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"divergence at iteration {exc.iteration}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
