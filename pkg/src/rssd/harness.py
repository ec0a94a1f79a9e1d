"""Batch experiment runner with deterministic seeding and report emission.

Every trial's randomness is derived as a pure function of the base seed,
the cell (family, sizes) and the trial index, with separate substreams
for the problem instance and the initial point. Results are therefore
bit-identical no matter how many worker processes execute the batch; the
only nondeterministic fields are wall-clock timings.
"""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .problems import gen_fsv, gen_odl, truncated_nnz, fsv_success, sparsity_level
from .smoothing import fsv_objective, odl_objective
from .solver import SolverConfig, rssd_run, rssd_grid, SCHEDULE_GRID

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "CellAggregate",
    "ExperimentReport",
    "derive_seed",
    "run_experiment",
    "emit_report",
]

_STREAM_INSTANCE = 0
_STREAM_INIT = 1
_KIND_ID = {"fsv": 1, "odl": 2}

CSV_COLUMNS = ["n", "m", "p", "tau", "schedule", "trials",
               "successes_or_mean_sparsity", "mean_iters", "mean_seconds"]


def derive_seed(base_seed, kind, n, m, trial, stream):
    """Deterministic 64-bit seed for one substream of one trial.

    A pure function of its arguments: independent of execution order,
    parallelism and of which other cells are present in the batch.
    """
    key = (_KIND_ID[kind], int(n), int(m), int(trial), int(stream))
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment batch: a grid of cells, each run for `trials` trials.

    For kind "fsv", sizes holds (n, m) pairs. For kind "odl", sizes holds
    the dictionary orders n (the sample count m is implied by n). Metrics
    are evaluated at every threshold in taus. With schedule_grid=True
    each trial runs the whole (theta_mu, theta_delta) grid and keeps the
    best run per the family's selection metric, evaluated at min(taus).

    scale_by_p rescales the step cap and the gradient-threshold schedule
    to the exponent: alpha_bar/p, delta0*p and delta_stop*p. The slope of
    the smoothed p-th power is proportional to p near the seam, so for
    tiny exponents (the dictionary runs use p=0.001) thresholds tuned at
    p=1 read the initial point as already stationary and the schedule
    burns down before the iterate moves. At p=1 the rescaling is the
    identity.
    """

    kind: str
    sizes: tuple
    p_values: tuple
    taus: tuple
    trials: int
    seed: int
    schedule_grid: bool = False
    schedules: tuple = SCHEDULE_GRID
    solver: Optional[SolverConfig] = None
    scale_by_p: bool = False
    odl_init: str = "gaussian"
    traj_stride: int = 25
    jobs: int = 1
    store_points: bool = False

    def __post_init__(self):
        if self.kind not in _KIND_ID:
            raise ValueError(f"kind must be 'fsv' or 'odl', got {self.kind!r}")
        if len(self.sizes) == 0:
            raise ValueError("sizes must not be empty")
        if self.kind == "fsv":
            for pair in self.sizes:
                if len(pair) != 2 or int(pair[0]) < 1 or int(pair[1]) <= int(pair[0]):
                    raise ValueError(f"fsv sizes must be (n, m) pairs with m > n, got {pair!r}")
        else:
            for n in self.sizes:
                if int(n) < 2:
                    raise ValueError(f"odl sizes must be integers >= 2, got {n!r}")
        if len(self.p_values) == 0 or any(not (0.0 < p <= 1.0) for p in self.p_values):
            raise ValueError(f"p values must lie in (0, 1], got {self.p_values!r}")
        if len(self.taus) == 0 or any(not (t > 0.0) for t in self.taus):
            raise ValueError(f"taus must be positive, got {self.taus!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.odl_init not in ("gaussian", "uniform"):
            raise ValueError(f"odl_init must be 'gaussian' or 'uniform', got {self.odl_init!r}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be at least 1, got {self.jobs}")
        if self.traj_stride < 0:
            raise ValueError(f"traj_stride must be nonnegative, got {self.traj_stride}")


@dataclass(frozen=True)
class _TrialTask:
    kind: str
    n: int
    m: int
    p: float
    trial: int
    instance_seed: int
    init_seed: int
    solver: SolverConfig
    schedule_grid: bool
    schedules: tuple
    taus: tuple
    select_tau: float
    odl_init: str
    traj_stride: int
    store_points: bool


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of a single (cell, trial) run; metrics are keyed by tau."""

    kind: str
    n: int
    m: int
    p: float
    schedule: str
    trial: int
    instance_seed: int
    init_seed: int
    status: str
    iterations: int
    shrink_count: int
    wall_time: float
    f_final: float
    grad_norm: float
    mu_final: float
    delta_final: float
    metrics: dict
    best_schedule: Optional[tuple] = None
    true_sparsity: Optional[float] = None
    trajectory: Optional[tuple] = None
    x_final: Optional[tuple] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class CellAggregate:
    """Per-(cell, tau) summary row of the CSV report."""

    n: int
    m: int
    p: float
    tau: float
    schedule: str
    trials: int
    n_errors: int
    successes_or_mean_sparsity: float
    mean_iters: float
    mean_seconds: float


@dataclass(frozen=True)
class ExperimentReport:
    kind: str
    seed: int
    config: dict
    records: tuple
    cells: tuple


def _tau_key(tau):
    return f"{tau:.6g}"


def _schedule_label(cfg):
    if cfg.schedule_grid:
        return "grid"
    solver = cfg.solver if cfg.solver is not None else SolverConfig(record_history=False)
    return f"{solver.theta_mu:g}/{solver.theta_delta:g}"


def _execute_trial(task):
    label = "grid" if task.schedule_grid else f"{task.solver.theta_mu:g}/{task.solver.theta_delta:g}"
    base = dict(kind=task.kind, n=task.n, m=task.m, p=task.p, schedule=label,
                trial=task.trial, instance_seed=task.instance_seed,
                init_seed=task.init_seed)
    try:
        rng = np.random.Generator(np.random.Philox(task.init_seed))
        if task.kind == "fsv":
            inst = gen_fsv(task.n, task.m, task.instance_seed)
            obj = fsv_objective(inst.q, task.p)
            x0 = obj.manifold.random_point(rng)
            callback = None
            samples = None

            def metric(res):
                return (truncated_nnz(inst.q @ res.x, task.select_tau), res.f)
        else:
            inst = gen_odl(task.n, task.instance_seed)
            obj = odl_objective(inst.y, task.p)
            x0 = obj.manifold.random_point(rng, dist=task.odl_init)
            samples = []
            t0 = time.perf_counter()

            def callback(state):
                if task.traj_stride and state.iteration % task.traj_stride == 0:
                    samples.append((time.perf_counter() - t0,
                                    sparsity_level(inst, state.x, task.select_tau)))

            def metric(res):
                return -sparsity_level(inst, res.x, task.select_tau)

        if task.schedule_grid:
            result = rssd_grid(obj, x0, task.solver, task.schedules, metric,
                               callback=callback)
        else:
            result = rssd_run(obj, x0, task.solver, callback=callback)

        if task.kind == "fsv":
            metrics = {_tau_key(t): bool(fsv_success(inst, result.x, t)) for t in task.taus}
            truth = None
        else:
            metrics = {_tau_key(t): float(sparsity_level(inst, result.x, t))
                       for t in task.taus}
            truth = float(inst.true_sparsity)

        return TrialRecord(
            **base,
            status=result.status.value,
            iterations=result.iterations,
            shrink_count=result.shrink_count,
            wall_time=result.wall_time,
            f_final=result.f,
            grad_norm=result.grad_norm,
            mu_final=result.mu,
            delta_final=result.delta,
            metrics=metrics,
            best_schedule=result.schedule if task.schedule_grid else None,
            true_sparsity=truth,
            trajectory=tuple(samples) if samples else None,
            x_final=tuple(np.asarray(result.x).ravel().tolist())
            if task.store_points else None,
        )
    except Exception as exc:  # noqa: BLE001 - a failed trial must not kill the batch
        return TrialRecord(
            **base,
            status="error",
            iterations=0,
            shrink_count=0,
            wall_time=0.0,
            f_final=float("nan"),
            grad_norm=float("nan"),
            mu_final=float("nan"),
            delta_final=float("nan"),
            metrics={},
            error=f"{type(exc).__name__}: {exc}",
        )


def _build_tasks(cfg):
    solver = cfg.solver if cfg.solver is not None else SolverConfig(record_history=False)
    select_tau = min(cfg.taus)
    tasks = []
    for size in cfg.sizes:
        if cfg.kind == "fsv":
            n, m = int(size[0]), int(size[1])
        else:
            n = int(size)
            m = int(np.floor(10.0 * n ** 1.5))
        for p in cfg.p_values:
            p = float(p)
            trial_solver = solver
            if cfg.scale_by_p and p != 1.0:
                trial_solver = replace(solver,
                                       alpha_bar=solver.alpha_bar / p,
                                       delta0=solver.delta0 * p,
                                       delta_stop=solver.delta_stop * p)
            for trial in range(cfg.trials):
                tasks.append(_TrialTask(
                    kind=cfg.kind, n=n, m=m, p=p, trial=trial,
                    instance_seed=derive_seed(cfg.seed, cfg.kind, n, m, trial,
                                              _STREAM_INSTANCE),
                    init_seed=derive_seed(cfg.seed, cfg.kind, n, m, trial, _STREAM_INIT),
                    solver=trial_solver,
                    schedule_grid=cfg.schedule_grid,
                    schedules=tuple(tuple(s) for s in cfg.schedules),
                    taus=tuple(cfg.taus),
                    select_tau=select_tau,
                    odl_init=cfg.odl_init,
                    traj_stride=cfg.traj_stride,
                    store_points=cfg.store_points,
                ))
    return tasks


def _aggregate(cfg, records):
    groups = {}
    for rec in records:
        groups.setdefault((rec.n, rec.m, rec.p, rec.schedule), []).append(rec)
    cells = []
    for (n, m, p, schedule), recs in sorted(groups.items()):
        ok = [r for r in recs if r.error is None]
        n_err = len(recs) - len(ok)
        mean_iters = float(np.mean([r.iterations for r in ok])) if ok else float("nan")
        mean_secs = float(np.mean([r.wall_time for r in ok])) if ok else float("nan")
        for tau in cfg.taus:
            key = _tau_key(tau)
            if cfg.kind == "fsv":
                value = float(sum(1 for r in ok if r.metrics.get(key)))
            else:
                vals = [r.metrics[key] for r in ok if key in r.metrics]
                value = float(np.mean(vals)) if vals else float("nan")
            cells.append(CellAggregate(
                n=n, m=m, p=p, tau=float(tau), schedule=schedule,
                trials=len(recs), n_errors=n_err,
                successes_or_mean_sparsity=value,
                mean_iters=mean_iters, mean_seconds=mean_secs,
            ))
    return tuple(cells)


def _config_echo(cfg):
    d = asdict(cfg)
    if cfg.solver is not None:
        d["solver"] = asdict(cfg.solver)
    return d


def run_experiment(cfg):
    """Run every (cell, trial) of the batch and aggregate the results.

    Trials are independent; with cfg.jobs > 1 they execute in a process
    pool. Records are collected in task order, so reports are identical
    for any jobs value apart from timing fields.
    """
    tasks = _build_tasks(cfg)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = tuple(pool.map(_execute_trial, tasks))
    else:
        records = tuple(_execute_trial(t) for t in tasks)
    return ExperimentReport(
        kind=cfg.kind,
        seed=cfg.seed,
        config=_config_echo(cfg),
        records=records,
        cells=_aggregate(cfg, records),
    )


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def emit_report(report, out_dir, formats=("csv", "json")):
    """Write the report under out_dir; returns the list of paths written.

    "csv" writes summary.csv with one row per (cell, tau) and, for odl
    runs that sampled them, one trajectory file per trial with columns
    elapsed_s,sparsity. "json" writes report.json with the full records.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out_dir / "summary.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for cell in report.cells:
                writer.writerow([cell.n, cell.m, f"{cell.p:g}", f"{cell.tau:g}",
                                 cell.schedule, cell.trials,
                                 f"{cell.successes_or_mean_sparsity:g}",
                                 f"{cell.mean_iters:g}", f"{cell.mean_seconds:.6g}"])
        written.append(path)
        traj_dir = out_dir / "trajectories"
        for rec in report.records:
            if rec.trajectory:
                traj_dir.mkdir(exist_ok=True)
                tpath = traj_dir / f"trial_n{rec.n}_p{rec.p:g}_{rec.trial}.csv"
                with open(tpath, "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["elapsed_s", "sparsity"])
                    for elapsed, sparsity in rec.trajectory:
                        writer.writerow([f"{elapsed:.6f}", f"{sparsity:.10g}"])
                written.append(tpath)
    if "json" in formats:
        path = out_dir / "report.json"
        payload = {
            "kind": report.kind,
            "seed": report.seed,
            "config": report.config,
            "cells": [asdict(c) for c in report.cells],
            "records": [asdict(r) for r in report.records],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=_json_default)
            fh.write("\n")
        written.append(path)
    return written
