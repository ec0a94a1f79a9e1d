"""Command line entry points.

Three subcommands:

* ``rssd fsv``   batch recovery of planted sparse vectors in subspaces,
* ``rssd odl``   batch orthogonal dictionary learning,
* ``rssd check`` numerical self-checks (gradients, bounds, limits).

Every experiment flag mirrors a key of the TOML config file given with
--config; flags given on the command line win. Exit codes: 0 on success,
1 on failed self-checks, 2 on configuration errors, 3 on I/O errors.
"""

import argparse
import sys
from dataclasses import fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .harness import ExperimentConfig, run_experiment, emit_report
from .numcheck import default_checks
from .solver import SolverConfig

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _add_experiment_flags(sub, kind):
    sub.add_argument("--config", metavar="FILE", help="TOML config file")
    sub.add_argument("--n", type=int, nargs="+", help="problem sizes n")
    if kind == "fsv":
        sub.add_argument("--m", type=int, nargs="+",
                         help="ambient dimensions m, paired with --n")
    sub.add_argument("--p", type=float, nargs="+", help="exponents in (0, 1]")
    sub.add_argument("--tau", type=float, nargs="+", help="truncation thresholds")
    sub.add_argument("--trials", type=int, help="trials per cell")
    sub.add_argument("--seed", type=int, help="base seed")
    sub.add_argument("--grid", action=argparse.BooleanOptionalAction, default=None,
                     help="search the shrink-factor grid per trial")
    sub.add_argument("--budget-iters", type=int, dest="budget_iters",
                     help="iteration budget per run")
    sub.add_argument("--budget-seconds", type=float, dest="budget_seconds",
                     help="wall-clock budget per run in seconds")
    sub.add_argument("--scale-by-p", dest="scale_by_p", default=None,
                     action=argparse.BooleanOptionalAction,
                     help="rescale step cap and gradient thresholds by the "
                          "exponent p"
                          + (" (default: on)" if kind == "odl" else " (default: off)"))
    sub.add_argument("--out", metavar="DIR", help="output directory for reports")
    sub.add_argument("--jobs", type=int, help="worker processes")
    if kind == "odl":
        sub.add_argument("--init", choices=("gaussian", "uniform"),
                         help="initial point distribution")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rssd",
        description="Smoothing steepest descent for sparse recovery on "
                    "the sphere and the orthogonal group.")
    subs = parser.add_subparsers(dest="command", required=True)
    fsv = subs.add_parser("fsv", help="find sparse vectors in subspaces")
    _add_experiment_flags(fsv, "fsv")
    odl = subs.add_parser("odl", help="learn orthogonal dictionaries")
    _add_experiment_flags(odl, "odl")
    chk = subs.add_parser("check", help="run numerical self-checks")
    chk.add_argument("--seed", type=int, default=0)
    return parser


def _load_config_file(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _merged(args, file_cfg, key, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return file_cfg.get(key, default)


def _solver_from(file_cfg, args):
    table = dict(file_cfg.get("solver", {}))
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(table) - known
    if unknown:
        raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
    solver = SolverConfig(record_history=False, **table)
    budget_iters = _merged(args, file_cfg, "budget_iters")
    if budget_iters is not None:
        solver = replace(solver, max_iters=int(budget_iters))
    budget_seconds = _merged(args, file_cfg, "budget_seconds")
    if budget_seconds is not None and budget_seconds > 0:
        solver = replace(solver, max_seconds=float(budget_seconds))
    return solver


def _experiment_config(kind, args):
    file_cfg = {}
    if args.config is not None:
        file_cfg = _load_config_file(args.config)

    n = _merged(args, file_cfg, "n")
    if n is None:
        raise ValueError("no problem sizes given: pass --n or set n in the config")
    n = [n] if isinstance(n, int) else list(n)
    if kind == "fsv":
        m = _merged(args, file_cfg, "m")
        if m is None:
            raise ValueError("fsv needs ambient dimensions: pass --m or set m in the config")
        m = [m] if isinstance(m, int) else list(m)
        if len(m) != len(n):
            raise ValueError(f"--n and --m must pair up, got {len(n)} and {len(m)} values")
        sizes = tuple(zip(n, m))
        default_p, default_tau = (1.0,), (1e-8,)
    else:
        sizes = tuple(n)
        default_p, default_tau = (0.001,), (1e-4,)

    p = _merged(args, file_cfg, "p", default_p)
    tau = _merged(args, file_cfg, "tau", default_tau)
    p = (p,) if isinstance(p, float) else tuple(p)
    tau = (tau,) if isinstance(tau, float) else tuple(tau)

    cfg = ExperimentConfig(
        kind=kind,
        sizes=sizes,
        p_values=p,
        taus=tau,
        trials=int(_merged(args, file_cfg, "trials", 10)),
        seed=int(_merged(args, file_cfg, "seed", 0)),
        schedule_grid=bool(_merged(args, file_cfg, "grid", False)),
        solver=_solver_from(file_cfg, args),
        scale_by_p=bool(_merged(args, file_cfg, "scale_by_p", kind == "odl")),
        odl_init=_merged(args, file_cfg, "init", "gaussian"),
        jobs=int(_merged(args, file_cfg, "jobs", 1)),
    )
    out = _merged(args, file_cfg, "out")
    return cfg, out


def _cmd_experiment(kind, args):
    cfg, out = _experiment_config(kind, args)
    report = run_experiment(cfg)
    header = "  ".join(f"{c:>10s}" for c in
                       ("n", "m", "p", "tau", "schedule", "result", "mean_iters"))
    print(header)
    for cell in report.cells:
        print("  ".join([f"{cell.n:>10d}", f"{cell.m:>10d}", f"{cell.p:>10g}",
                         f"{cell.tau:>10g}", f"{cell.schedule:>10s}",
                         f"{cell.successes_or_mean_sparsity:>10g}",
                         f"{cell.mean_iters:>10.1f}"]))
    n_err = sum(1 for r in report.records if r.error is not None)
    if n_err:
        print(f"warning: {n_err} of {len(report.records)} trials errored", file=sys.stderr)
    if out is not None:
        for path in emit_report(report, out):
            print(f"wrote {path}")
    return EXIT_OK


def _cmd_check(args):
    reports = default_checks(seed=args.seed)
    ok = True
    for rep in reports:
        print(rep.summary_line())
        ok = ok and rep.passed
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return _cmd_check(args)
        return _cmd_experiment(args.command, args)
    except (ValueError, TypeError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
