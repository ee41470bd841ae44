"""Command-line front end: ``mems-sim run|sweep|check|validate``."""

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .audit import audit_trajectory
from .config import (
    RUN_KEYS,
    SWEEP_KEYS,
    ConfigError,
    SweepConfig,
    build_run_config,
    lambda_list,
    merge,
    read_config_file,
)
from .dynamics import OutcomeKind, run_simulation
from .grid import MappedGrid, ModelParams
from .theory import lambda_star, singularity_certificate
from .validate import run_battery

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
EXIT_VIOLATIONS = 5

SWEEP_COLUMNS = ("lambda", "outcome", "T_touchdown", "lambda_star", "certificate_applicable")


def _add_run_flags(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--lambda", dest="lambda", help="applied-voltage parameter (> 0)")
    p.add_argument("--epsilon", help="aspect ratio; 0 selects the vanishing aspect ratio model")
    p.add_argument("--q", help="Sobolev exponent of the blow-up proxy (> 2)")
    p.add_argument("--u0", help="zero | arch:h | bell:a,w | eig:c | file:path")
    p.add_argument("--nx")
    p.add_argument("--neta")
    p.add_argument("--dt-init", dest="dt_init")
    p.add_argument("--dt-min", dest="dt_min")
    p.add_argument("--dt-max", dest="dt_max")
    p.add_argument("--t-max", dest="t_max")
    p.add_argument("--touch-eps", dest="touch_eps")
    p.add_argument("--cfl-source", dest="cfl_source")
    p.add_argument("--out")
    p.add_argument("--snapshot-stride", dest="snapshot_stride")


def build_parser():
    parser = argparse.ArgumentParser(prog="mems-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one configuration")
    _add_run_flags(run)

    sweep = sub.add_parser("sweep", help="simulate a list of lambda values")
    _add_run_flags(sweep)
    sweep.add_argument("--lambdas", help="comma-separated lambda values")
    sweep.add_argument("--lambda-min", dest="lambda_min")
    sweep.add_argument("--lambda-max", dest="lambda_max")
    sweep.add_argument("--lambda-count", dest="lambda_count")
    sweep.add_argument("--spacing", help="linear | geometric")
    sweep.add_argument("--workers")

    check = sub.add_parser("check", help="re-evaluate the theory checks on a stored run")
    check.add_argument("trajectory", help="trajectory CSV written by 'run'")
    _add_run_flags(check)
    check.add_argument("--report", help="JSON report path (default: check.json next to the trajectory)")

    sub.add_parser("validate", help="run the solver validation battery")
    return parser


def _flag_values(args, keys):
    return {k: getattr(args, k, None) for k in keys}


def parse_config(args):
    """RunConfig or SweepConfig from parsed arguments; raises ConfigError."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    if args.command == "sweep":
        allowed = {**RUN_KEYS, **SWEEP_KEYS}
        values = merge(file_values, _flag_values(args, allowed), allowed)
        lams = lambda_list(values)
        base = build_run_config({**values, "lambda": lams[0]})
        workers = values["workers"]
        env = os.environ.get("MEMS_SIM_THREADS")
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ConfigError("MEMS_SIM_THREADS", f"malformed value {env!r}") from None
        if workers < 1:
            raise ConfigError("workers", "must be at least 1")
        return SweepConfig(base=base, lambdas=lams, workers=workers)
    values = merge(file_values, _flag_values(args, RUN_KEYS), RUN_KEYS)
    return build_run_config(values)


def summarize(cfg, traj, outcome):
    params = cfg.params
    proof = traj.proof
    summary = {
        "model": "vanishing-aspect" if params.reduced else "free-boundary",
        "lambda": params.lam,
        "epsilon": params.epsilon,
        "q": params.q,
        "u0": cfg.u0,
        "max_u0": float(traj.u0.max()),
        "nx": cfg.nx,
        "neta": cfg.neta,
        "lambda_star": proof.lambda_star,
        "alpha": proof.alpha,
        "outcome": outcome.kind.value,
        "T": outcome.T,
        "detail": outcome.detail,
        "steps": len(traj.records) - 1,
    }
    summary["certificate"] = singularity_certificate(traj.records, proof, traj.C0)
    return summary


def cmd_run(cfg):
    traj, outcome = run_simulation(
        cfg.params, cfg.initial_profile(), cfg.controls, cfg.grid, cfg.snapshot_stride
    )
    out = Path(cfg.out)
    summary = summarize(cfg, traj, outcome)
    try:
        out.mkdir(parents=True, exist_ok=True)
        io.write_trajectory_csv(out / "trajectory.csv", traj.records)
        io.write_snapshots(out, cfg.grid.base.x, traj.states, traj.steps)
        io.write_json(out / "summary.json", summary)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{summary['outcome']} at T = {summary['T']:.6g} "
          f"(lambda = {cfg.lam:g}, lambda_star = {summary['lambda_star']:.6g})")
    if outcome.kind is OutcomeKind.NUMERICAL_FAILURE:
        print(f"numerical failure: {outcome.detail}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _sweep_one(cfg):
    """One sweep row; runs in a worker process."""
    lam_star = lambda_star(float(cfg.initial_profile().max()), cfg.epsilon)
    row = {"lambda": cfg.lam, "lambda_star": lam_star, "certificate_applicable": cfg.lam > lam_star}
    try:
        _, outcome = run_simulation(cfg.params, cfg.initial_profile(), cfg.controls, cfg.grid)
        row["outcome"] = outcome.kind.value
        row["T_touchdown"] = outcome.T if outcome.kind is OutcomeKind.TOUCHDOWN else None
    except Exception as exc:  # recorded in-row, the sweep goes on
        row["outcome"] = f"error: {type(exc).__name__}: {exc}"
        row["T_touchdown"] = None
    return row


def run_sweep(sweep: SweepConfig):
    cfgs = [sweep.base.with_lambda(lam) for lam in sweep.lambdas]
    if sweep.workers == 1:
        rows = [_sweep_one(c) for c in cfgs]
    else:
        with ProcessPoolExecutor(max_workers=sweep.workers) as pool:
            rows = list(pool.map(_sweep_one, cfgs))
    return sorted(rows, key=lambda r: r["lambda"])


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([
                io.fmt(r["lambda"]), r["outcome"], io.fmt(r["T_touchdown"]),
                io.fmt(r["lambda_star"]), "true" if r["certificate_applicable"] else "false",
            ])


def cmd_sweep(sweep: SweepConfig):
    rows = run_sweep(sweep)
    out = Path(sweep.base.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(out / "sweep.csv", rows)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in rows:
        t = "" if r["T_touchdown"] is None else f" T = {r['T_touchdown']:.6g}"
        print(f"lambda = {r['lambda']:<10g} {r['outcome']}{t}")
    return EXIT_OK


def cmd_check(args):
    traj_path = Path(args.trajectory)
    run_dir = traj_path.parent
    summary_path = run_dir / "summary.json"
    summary = io.read_json(summary_path) if summary_path.exists() else {}

    def pick(key, flag, kind):
        value = getattr(args, flag, None)
        if value is not None:
            try:
                return kind(value)
            except ValueError:
                raise ConfigError(flag, f"malformed value {value!r}") from None
        if key in summary:
            return kind(summary[key])
        raise ConfigError(flag, "not given and not found in summary.json")

    lam = pick("lambda", "lambda", float)
    eps = pick("epsilon", "epsilon", float)
    nx = pick("nx", "nx", int)
    neta = pick("neta", "neta", int)
    try:
        params = ModelParams(lam, eps)
        grid = MappedGrid.create(nx, neta)
    except ValueError as exc:
        raise ConfigError("check", str(exc)) from None
    try:
        records = io.read_trajectory_csv(traj_path)
    except (OSError, ValueError) as exc:
        raise ConfigError("trajectory", str(exc)) from None
    try:
        snapshots = io.read_snapshots(run_dir)
    except (OSError, ValueError) as exc:
        raise ConfigError("snapshots", str(exc)) from None
    if not snapshots or snapshots[0][0] != 0:
        raise ConfigError("snapshots", "initial snapshot missing")
    if any(len(u) != nx for _, _, u in snapshots):
        raise ConfigError("nx", "snapshot length does not match nx")

    report, n_bad = audit_trajectory(records, snapshots, params, grid)
    report_path = Path(args.report) if args.report else run_dir / "check.json"
    try:
        io.write_json(report_path, report)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{n_bad} violation(s); "
          f"dissipation {len(report['dissipation_violations'])}, "
          f"envelope {len(report['envelope_violations'])}, "
          f"comparison {len(report['comparison_violations'])}; report at {report_path}")
    return EXIT_OK if n_bad == 0 else EXIT_VIOLATIONS


def cmd_validate():
    results = run_battery()
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  {r.seconds:6.2f}s  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else 1


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    np.seterr(all="ignore")
    try:
        if args.command == "validate":
            return cmd_validate()
        if args.command == "check":
            return cmd_check(args)
        cfg = parse_config(args)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
