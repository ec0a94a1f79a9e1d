"""Smoothing steepest descent on embedded manifolds.

Each iteration evaluates the negative Riemannian gradient eta of the
smoothed objective at the current smoothing level mu and takes one of
three branches:

* stop        if ||eta|| <= delta_opt and mu <= mu_opt,
* shrink      if ||eta|| <= delta: multiply mu by theta_mu and delta by
              theta_delta, keep the iterate,
* descend     otherwise: Armijo backtracking from step alpha_bar along
              eta, then retract.

Driving (mu, delta) to zero recovers limiting stationary points of the
nonsmooth objective; in practice runs are stopped once the pair falls
below configured thresholds (mu_stop, delta_stop).
"""

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Status",
    "BacktrackError",
    "SolverConfig",
    "IterationRecord",
    "SolverState",
    "LineSearchResult",
    "SolveResult",
    "SCHEDULE_GRID",
    "armijo_search",
    "rssd_step",
    "rssd_run",
    "rssd_grid",
]

# schedule pairs (theta_mu, theta_delta) searched by rssd_grid by default
SCHEDULE_GRID = ((0.5, 0.5), (0.1, 0.5), (0.5, 0.1), (0.8, 0.2), (0.2, 0.8))

EVENT_SHRINK = "shrink"
EVENT_DESCEND = "descend"
EVENT_STOP = "stop"
EVENT_STALL = "stall"


class Status(str, Enum):
    """Reason a run ended."""

    CONVERGED_OPT = "converged_opt"          # ||eta|| <= delta_opt and mu <= mu_opt
    CONVERGED_SCHEDULE = "converged_schedule"  # mu < mu_stop and delta < delta_stop
    MAX_ITERS = "max_iters"
    TIME_BUDGET = "time_budget"


class BacktrackError(RuntimeError):
    """Raised when Armijo backtracking exhausts its budget.

    Attributes
    ----------
    backtracks : int
        Number of step reductions tried before giving up.
    """

    def __init__(self, backtracks):
        self.backtracks = backtracks
        super().__init__(
            f"Armijo condition not met after {backtracks} backtracking steps"
        )


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the smoothing descent loop.

    Defaults reproduce the standard setting: mu0 = 1, delta0 = 0.1, both
    shrink factors 0.5, Armijo constants sigma = 1e-4, beta = 0.5,
    alpha_bar = 1, and termination once mu < 1e-6 and delta < 1e-4.
    mu_opt/delta_opt = 0 disables the stationarity stop; mu_stop or
    delta_stop = 0 disables the schedule stop.
    """

    mu0: float = 1.0
    delta0: float = 0.1
    theta_mu: float = 0.5
    theta_delta: float = 0.5
    sigma: float = 1e-4
    beta: float = 0.5
    alpha_bar: float = 1.0
    mu_opt: float = 0.0
    delta_opt: float = 0.0
    mu_stop: float = 1e-6
    delta_stop: float = 1e-4
    max_iters: int = 1000
    max_backtracks: int = 50
    max_seconds: Optional[float] = None
    record_history: bool = True

    def __post_init__(self):
        _require(np.isfinite(self.mu0) and self.mu0 > 0, f"mu0 must be positive, got {self.mu0}")
        _require(np.isfinite(self.delta0) and self.delta0 > 0,
                 f"delta0 must be positive, got {self.delta0}")
        _require(0.0 < self.theta_mu < 1.0, f"theta_mu must lie in (0, 1), got {self.theta_mu}")
        _require(0.0 < self.theta_delta < 1.0,
                 f"theta_delta must lie in (0, 1), got {self.theta_delta}")
        _require(0.0 < self.sigma < 1.0, f"sigma must lie in (0, 1), got {self.sigma}")
        _require(0.0 < self.beta < 1.0, f"beta must lie in (0, 1), got {self.beta}")
        _require(np.isfinite(self.alpha_bar) and self.alpha_bar > 0,
                 f"alpha_bar must be positive, got {self.alpha_bar}")
        _require(self.mu_opt >= 0, f"mu_opt must be nonnegative, got {self.mu_opt}")
        _require(self.delta_opt >= 0, f"delta_opt must be nonnegative, got {self.delta_opt}")
        _require(self.mu_stop >= 0, f"mu_stop must be nonnegative, got {self.mu_stop}")
        _require(self.delta_stop >= 0, f"delta_stop must be nonnegative, got {self.delta_stop}")
        _require(self.max_iters >= 1, f"max_iters must be at least 1, got {self.max_iters}")
        _require(self.max_backtracks >= 1,
                 f"max_backtracks must be at least 1, got {self.max_backtracks}")
        if self.max_seconds is not None:
            _require(self.max_seconds > 0, f"max_seconds must be positive, got {self.max_seconds}")


@dataclass(frozen=True)
class IterationRecord:
    """One solver iteration: values observed at the iterate before the move."""

    iteration: int
    event: str            # "shrink", "descend", "stall" or "stop"
    f_smooth: float       # f_tilde(x, mu) before the move
    grad_norm: float      # ||eta|| = ||grad f_tilde(x, mu)||
    step_size: float      # accepted Armijo step, 0.0 for shrink/stop
    mu: float
    delta: float


@dataclass(frozen=True)
class SolverState:
    """Iterate, schedule values and bookkeeping between steps."""

    x: np.ndarray
    mu: float
    delta: float
    iteration: int = 0
    shrink_count: int = 0
    last_event: str = ""
    history: tuple = ()


@dataclass(frozen=True)
class LineSearchResult:
    step: float
    point: np.ndarray
    value: float
    backtracks: int


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a run.

    f is the nonsmooth objective at the final point, f_smooth and
    grad_norm are evaluated at the final (x, mu). For grid searches the
    winning run is returned with grid_runs holding every schedule's
    result in grid order.
    """

    x: np.ndarray
    f: float
    f_smooth: float
    grad_norm: float
    mu: float
    delta: float
    status: Status
    iterations: int
    shrink_count: int
    wall_time: float
    schedule: tuple
    history: tuple = ()
    grid_runs: Optional[tuple] = None


def armijo_search(obj, x, eta, mu, config, f0=None):
    """Backtracking line search along a descent direction.

    Finds the smallest integer m >= 0 such that t = beta^m * alpha_bar
    satisfies

        f_tilde(R_x(t eta), mu) <= f_tilde(x, mu) - sigma * t * ||eta||^2

    where eta is the negative Riemannian gradient, so ||eta|| equals the
    gradient norm appearing in the sufficient-decrease bound.

    Parameters
    ----------
    f0 : float, optional
        Precomputed f_tilde(x, mu), to save one evaluation.

    Returns
    -------
    LineSearchResult
        Accepted step, retracted point, its smoothed value, and the
        number of rejected trial steps.

    Raises
    ------
    ValueError
        If eta is the zero vector.
    BacktrackError
        If no step is accepted within config.max_backtracks reductions.
    """
    gnorm2 = float(np.sum(eta * eta))
    if gnorm2 == 0.0:
        raise ValueError("line search called with a zero direction")
    if f0 is None:
        f0 = obj.value(x, mu)
    t = config.alpha_bar
    for m in range(config.max_backtracks + 1):
        x_new = obj.manifold.retract(x, t * eta)
        f_new = obj.value(x_new, mu)
        if f_new <= f0 - config.sigma * t * gnorm2:
            return LineSearchResult(step=t, point=x_new, value=f_new, backtracks=m)
        t *= config.beta
    raise BacktrackError(config.max_backtracks)


def _record(state, config, rec):
    if config.record_history:
        return state.history + (rec,)
    return state.history


def rssd_step(state, obj, config):
    """Advance the solver by one iteration; exactly one branch fires.

    Returns a new state; state.last_event tells which branch was taken.
    A "stop" event leaves the iterate and schedule unchanged.

    In exact arithmetic the descend branch always makes strict progress,
    but in double precision the required decrease can fall below the
    resolution of f_tilde near a minimizer of the current smoothed
    problem. Two symptoms are possible: the line search runs out of
    backtracks without certifying a decrease, or it accepts a step whose
    value does not actually drop (a tie at the last representable bits).
    Both mean the iterate is a numerical fixed point of this mu, so the
    schedule advances exactly as in the shrink branch and the event is
    recorded as "stall".
    """
    eta = -obj.riemannian_gradient(state.x, state.mu)
    gnorm = float(np.linalg.norm(eta))
    f_curr = obj.value(state.x, state.mu)

    if gnorm <= config.delta_opt and state.mu <= config.mu_opt:
        rec = IterationRecord(state.iteration, EVENT_STOP, f_curr, gnorm, 0.0,
                              state.mu, state.delta)
        return replace(state,
                       iteration=state.iteration + 1,
                       last_event=EVENT_STOP,
                       history=_record(state, config, rec))

    if gnorm <= state.delta:
        rec = IterationRecord(state.iteration, EVENT_SHRINK, f_curr, gnorm, 0.0,
                              state.mu, state.delta)
        return replace(state,
                       mu=config.theta_mu * state.mu,
                       delta=config.theta_delta * state.delta,
                       iteration=state.iteration + 1,
                       shrink_count=state.shrink_count + 1,
                       last_event=EVENT_SHRINK,
                       history=_record(state, config, rec))

    try:
        ls = armijo_search(obj, state.x, eta, state.mu, config, f0=f_curr)
        stalled = ls.value >= f_curr
        step = ls.step
    except BacktrackError:
        stalled = True
        step = 0.0
    if stalled:
        rec = IterationRecord(state.iteration, EVENT_STALL, f_curr, gnorm, step,
                              state.mu, state.delta)
        return replace(state,
                       mu=config.theta_mu * state.mu,
                       delta=config.theta_delta * state.delta,
                       iteration=state.iteration + 1,
                       shrink_count=state.shrink_count + 1,
                       last_event=EVENT_STALL,
                       history=_record(state, config, rec))
    rec = IterationRecord(state.iteration, EVENT_DESCEND, f_curr, gnorm, ls.step,
                          state.mu, state.delta)
    return replace(state,
                   x=ls.point,
                   iteration=state.iteration + 1,
                   last_event=EVENT_DESCEND,
                   history=_record(state, config, rec))


def rssd_run(obj, x0, config=None, callback=None):
    """Run the smoothing descent loop from x0 until a termination event.

    Parameters
    ----------
    obj : SmoothedObjective
    x0 : ndarray
        Starting point; validated against the objective's manifold.
    config : SolverConfig, optional
    callback : callable, optional
        Called as callback(state) after every iteration.

    Returns
    -------
    SolveResult
    """
    if config is None:
        config = SolverConfig()
    x0 = obj.manifold.check_point(x0)
    state = SolverState(x=x0, mu=config.mu0, delta=config.delta0)
    t_start = time.perf_counter()
    status = Status.MAX_ITERS
    while state.iteration < config.max_iters:
        if config.max_seconds is not None and time.perf_counter() - t_start > config.max_seconds:
            status = Status.TIME_BUDGET
            break
        state = rssd_step(state, obj, config)
        if callback is not None:
            callback(state)
        if state.last_event == EVENT_STOP:
            status = Status.CONVERGED_OPT
            break
        if (config.mu_stop > 0.0 and config.delta_stop > 0.0
                and state.mu < config.mu_stop and state.delta < config.delta_stop):
            status = Status.CONVERGED_SCHEDULE
            break
    wall = time.perf_counter() - t_start
    return SolveResult(
        x=state.x,
        f=obj.value_nonsmooth(state.x),
        f_smooth=obj.value(state.x, state.mu),
        grad_norm=float(np.linalg.norm(obj.riemannian_gradient(state.x, state.mu))),
        mu=state.mu,
        delta=state.delta,
        status=status,
        iterations=state.iteration,
        shrink_count=state.shrink_count,
        wall_time=wall,
        schedule=(config.theta_mu, config.theta_delta),
        history=state.history,
        grid_runs=None,
    )


def rssd_grid(obj, x0, config=None, schedules=SCHEDULE_GRID, metric=None, callback=None):
    """Run the solver once per (theta_mu, theta_delta) pair and keep the best.

    All runs start from the same x0. The winner minimizes metric(result);
    by default that is the final nonsmooth objective value. Ties keep the
    earliest pair in the grid.

    Returns
    -------
    SolveResult
        The selected run, with grid_runs set to the tuple of all runs.
    """
    if config is None:
        config = SolverConfig()
    if len(schedules) == 0:
        raise ValueError("schedule grid is empty")
    if metric is None:
        metric = lambda res: res.f
    runs = []
    for theta_mu, theta_delta in schedules:
        cfg = replace(config, theta_mu=theta_mu, theta_delta=theta_delta)
        runs.append(rssd_run(obj, x0, cfg, callback=callback))
    best = min(range(len(runs)), key=lambda i: (metric(runs[i]), i))
    return replace(runs[best], grid_runs=tuple(runs))
