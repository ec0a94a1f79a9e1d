import numpy as np
import pytest
from numpy.testing import assert_allclose

from rssd.manifolds import UnitSphere
from rssd.problems import gen_fsv
from rssd.smoothing import fsv_objective, SmoothedObjective
from rssd.solver import (
    Status,
    BacktrackError,
    SolverConfig,
    SolverState,
    SCHEDULE_GRID,
    armijo_search,
    rssd_step,
    rssd_run,
    rssd_grid,
)


class _Affine:
    """Smooth test objective f(x) = 1 - x[0] on the circle (no smoothing term)."""

    manifold = UnitSphere(2)

    def value(self, x, mu):
        return 1.0 - float(x[0])

    def value_nonsmooth(self, x):
        return 1.0 - float(x[0])

    def riemannian_gradient(self, x, mu):
        return self.manifold.project(x, np.array([-1.0, 0.0]))


class _Constant:
    """Flat value with a fabricated nonzero gradient: no step can ever be
    certified, which is exactly the numerical-stall situation."""

    manifold = UnitSphere(2)

    def __init__(self, gnorm=1.0):
        self.gnorm = gnorm

    def value(self, x, mu):
        return 1.0

    def value_nonsmooth(self, x):
        return 1.0

    def riemannian_gradient(self, x, mu):
        return self.manifold.project(x, np.array([-self.gnorm, 0.0]))


class _ZeroGradient:
    manifold = UnitSphere(2)

    def value(self, x, mu):
        return 1.0

    def value_nonsmooth(self, x):
        return 1.0

    def riemannian_gradient(self, x, mu):
        return np.zeros(2)


@pytest.mark.parametrize("bad", [
    dict(mu0=0.0), dict(mu0=-1.0), dict(delta0=0.0),
    dict(theta_mu=0.0), dict(theta_mu=1.0), dict(theta_delta=1.5),
    dict(sigma=0.0), dict(sigma=1.0), dict(beta=0.0), dict(beta=1.0),
    dict(alpha_bar=0.0), dict(mu_opt=-1e-9), dict(delta_opt=-1.0),
    dict(mu_stop=-1.0), dict(delta_stop=-0.1),
    dict(max_iters=0), dict(max_backtracks=0), dict(max_seconds=0.0),
])
def test_config_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        SolverConfig(**bad)


class TestArmijoSearch:
    def test_accepts_full_step_on_easy_descent(self):
        obj = _Affine()
        x = np.array([0.0, 1.0])
        eta = -obj.riemannian_gradient(x, 1.0)
        ls = armijo_search(obj, x, eta, 1.0, SolverConfig())
        assert ls.backtracks == 0
        assert ls.step == 1.0
        assert_allclose(obj.value(x, 1.0) - ls.value, 1 / np.sqrt(2), rtol=1e-12)
        assert_allclose(ls.point, np.array([1.0, 1.0]) / np.sqrt(2), rtol=1e-12)

    def test_stricter_sigma_needs_more_backtracks(self):
        obj = _Affine()
        x = np.array([0.0, 1.0])
        eta = -obj.riemannian_gradient(x, 1.0)
        strict = armijo_search(obj, x, eta, 1.0, SolverConfig(sigma=0.9))
        assert strict.backtracks == 2
        assert strict.step == 0.25

    def test_postcondition_on_problem_instance(self):
        inst = gen_fsv(5, 30, 2)
        obj = fsv_objective(inst.q, 1.0)
        rng = np.random.Generator(np.random.Philox(6))
        config = SolverConfig()
        for _ in range(10):
            x = obj.manifold.random_point(rng)
            mu = 0.05
            eta = -obj.riemannian_gradient(x, mu)
            f0 = obj.value(x, mu)
            ls = armijo_search(obj, x, eta, mu, config)
            required = f0 - config.sigma * ls.step * float(eta @ eta)
            assert ls.value <= required
            # the step is beta^m * alpha_bar for the reported m
            assert_allclose(ls.step,
                            config.beta ** ls.backtracks * config.alpha_bar,
                            rtol=1e-15)

    def test_precomputed_value_matches(self):
        obj = _Affine()
        x = np.array([0.0, 1.0])
        eta = -obj.riemannian_gradient(x, 1.0)
        a = armijo_search(obj, x, eta, 1.0, SolverConfig())
        b = armijo_search(obj, x, eta, 1.0, SolverConfig(), f0=obj.value(x, 1.0))
        assert a.step == b.step and a.value == b.value

    def test_zero_direction_rejected(self):
        with pytest.raises(ValueError):
            armijo_search(_Affine(), np.array([0.0, 1.0]), np.zeros(2), 1.0,
                          SolverConfig())

    def test_exhaustion_raises_with_count(self):
        obj = _Affine()
        x = np.array([0.0, 1.0])
        ascent = obj.riemannian_gradient(x, 1.0)  # uphill direction
        with pytest.raises(BacktrackError) as exc:
            armijo_search(obj, x, ascent, 1.0, SolverConfig(max_backtracks=7))
        assert exc.value.backtracks == 7
        assert "7" in str(exc.value)


class TestStepBranches:
    def test_stop_branch(self):
        config = SolverConfig(mu_opt=np.inf, delta_opt=np.inf)
        x = np.array([0.0, 1.0])
        state = SolverState(x=x, mu=1.0, delta=0.1)
        out = rssd_step(state, _Affine(), config)
        assert out.last_event == "stop"
        assert out.iteration == 1
        assert out.mu == 1.0 and out.delta == 0.1
        assert np.array_equal(out.x, x)
        assert out.history[-1].event == "stop"

    def test_zero_gradient_takes_shrink(self):
        config = SolverConfig()
        state = SolverState(x=np.array([0.0, 1.0]), mu=1.0, delta=0.1)
        out = rssd_step(state, _ZeroGradient(), config)
        assert out.last_event == "shrink"
        assert out.mu == 0.5 and out.delta == 0.05
        assert out.shrink_count == 1
        assert np.array_equal(out.x, state.x)

    def test_shrink_exactly_when_gradient_within_tolerance(self):
        inst = gen_fsv(5, 30, 4)
        obj = fsv_objective(inst.q, 1.0)
        x = obj.manifold.random_point(np.random.Generator(np.random.Philox(0)))
        gnorm = float(np.linalg.norm(obj.riemannian_gradient(x, 0.05)))
        assert gnorm > 0
        below = rssd_step(SolverState(x=x, mu=0.05, delta=gnorm), obj,
                          SolverConfig())
        assert below.last_event == "shrink"
        above = rssd_step(SolverState(x=x, mu=0.05, delta=gnorm * 0.999), obj,
                          SolverConfig())
        assert above.last_event == "descend"

    def test_descend_branch_strictly_decreases(self):
        inst = gen_fsv(5, 30, 4)
        obj = fsv_objective(inst.q, 1.0)
        x = obj.manifold.random_point(np.random.Generator(np.random.Philox(1)))
        state = SolverState(x=x, mu=0.05, delta=1e-6)
        out = rssd_step(state, obj, SolverConfig())
        assert out.last_event == "descend"
        assert out.mu == state.mu and out.delta == state.delta
        assert obj.value(out.x, state.mu) < obj.value(x, state.mu)
        assert abs(np.linalg.norm(out.x) - 1.0) <= 1e-12
        rec = out.history[-1]
        assert rec.event == "descend" and rec.step_size > 0.0

    def test_stall_on_backtrack_exhaustion(self):
        config = SolverConfig(max_backtracks=5)
        state = SolverState(x=np.array([0.0, 1.0]), mu=1.0, delta=0.1)
        out = rssd_step(state, _Constant(), config)
        assert out.last_event == "stall"
        assert out.mu == 0.5 and out.delta == 0.05
        assert out.shrink_count == 1
        assert np.array_equal(out.x, state.x)
        assert out.history[-1].step_size == 0.0

    def test_stall_on_accepted_tie(self):
        # required decrease sigma*t*g^2 ~ 1e-20 rounds away against f = 1,
        # so the search "accepts" a step whose value never actually drops
        config = SolverConfig()
        state = SolverState(x=np.array([0.0, 1.0]), mu=1e-5, delta=1e-9)
        out = rssd_step(state, _Constant(gnorm=1e-8), config)
        assert out.last_event == "stall"
        assert np.array_equal(out.x, state.x)
        assert out.shrink_count == 1


class TestRun:
    def test_full_schedule_on_sparse_recovery(self):
        inst = gen_fsv(5, 50, 0)
        obj = fsv_objective(inst.q, 0.8)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(11)))
        res = rssd_run(obj, x0, SolverConfig())
        assert res.status is Status.CONVERGED_SCHEDULE
        assert res.mu < 1e-6 and res.delta < 1e-4
        assert res.shrink_count >= 20
        assert res.iterations == len(res.history) <= 1000
        assert res.mu == 0.5 ** res.shrink_count
        assert res.schedule == (0.5, 0.5)
        assert res.f == obj.value_nonsmooth(res.x)
        assert res.f_smooth == obj.value(res.x, res.mu)

    def test_schedule_invariant_and_monotone_descent(self):
        inst = gen_fsv(5, 50, 0)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(13)))
        res = rssd_run(obj, x0, SolverConfig())
        hist = res.history
        shrinks = 0
        for prev, cur in zip(hist, hist[1:]):
            ratio_mu = cur.mu / prev.mu
            ratio_delta = cur.delta / prev.delta
            if prev.event in ("shrink", "stall"):
                assert ratio_mu == 0.5 and ratio_delta == 0.5
                shrinks += 1
            else:
                assert ratio_mu == 1.0 and ratio_delta == 1.0
            if prev.event == "descend" and cur.mu == prev.mu:
                assert cur.f_smooth < prev.f_smooth
        assert shrinks == res.shrink_count - (1 if hist[-1].event in
                                              ("shrink", "stall") else 0)

    def test_deterministic(self):
        inst = gen_fsv(4, 20, 9)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(3)))
        r1 = rssd_run(obj, x0, SolverConfig())
        r2 = rssd_run(obj, x0, SolverConfig())
        assert np.array_equal(r1.x, r2.x)
        assert r1.f == r2.f and r1.iterations == r2.iterations
        assert [h.f_smooth for h in r1.history] == [h.f_smooth for h in r2.history]

    def test_invalid_start_rejected(self):
        inst = gen_fsv(4, 20, 9)
        obj = fsv_objective(inst.q, 1.0)
        with pytest.raises(ValueError):
            rssd_run(obj, np.full(4, 0.7), SolverConfig())

    def test_history_can_be_disabled(self):
        inst = gen_fsv(4, 20, 9)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(3)))
        res = rssd_run(obj, x0, SolverConfig(record_history=False))
        assert res.history == ()
        assert res.iterations > 0

    def test_callback_sees_every_iteration(self):
        inst = gen_fsv(4, 20, 9)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(3)))
        seen = []
        res = rssd_run(obj, x0, SolverConfig(),
                       callback=lambda s: seen.append(s.last_event))
        assert len(seen) == res.iterations
        assert set(seen) <= {"shrink", "descend", "stall", "stop"}

    def test_iteration_budget(self):
        inst = gen_fsv(5, 50, 0)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(7)))
        res = rssd_run(obj, x0, SolverConfig(max_iters=5))
        assert res.status is Status.MAX_ITERS
        assert res.iterations == 5

    def test_time_budget(self):
        inst = gen_fsv(5, 50, 0)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(7)))
        res = rssd_run(obj, x0, SolverConfig(max_seconds=1e-9, max_iters=50))
        assert res.status is Status.TIME_BUDGET
        assert res.iterations < 50

    def test_stationarity_stop(self):
        res = rssd_run(_ZeroGradient(), np.array([0.0, 1.0]),
                       SolverConfig(mu_opt=np.inf, delta_opt=np.inf))
        assert res.status is Status.CONVERGED_OPT
        assert res.iterations == 1

    def test_smooth_objective_gradient_tracks_tolerance(self):
        """With no smoothing term the gradient does not depend on mu, so at
        schedule termination it sits within one shrink factor of delta."""
        rng = np.random.Generator(np.random.Philox(5))
        res = rssd_run(_Affine(), UnitSphere(2).random_point(rng), SolverConfig())
        assert res.status is Status.CONVERGED_SCHEDULE
        assert res.grad_norm <= res.delta / 0.5


class TestGrid:
    def test_single_pair_equals_plain_run(self):
        inst = gen_fsv(4, 20, 5)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(2)))
        plain = rssd_run(obj, x0, SolverConfig())
        grid = rssd_grid(obj, x0, SolverConfig(), schedules=((0.5, 0.5),))
        assert np.array_equal(plain.x, grid.x)
        assert plain.f == grid.f
        assert len(grid.grid_runs) == 1

    def test_winner_minimizes_metric(self):
        inst = gen_fsv(4, 24, 6)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(4)))
        res = rssd_grid(obj, x0, SolverConfig())
        assert len(res.grid_runs) == len(SCHEDULE_GRID)
        assert res.f == min(r.f for r in res.grid_runs)
        fs = [r.f for r in res.grid_runs]
        assert res.schedule == SCHEDULE_GRID[fs.index(min(fs))]

    def test_custom_metric_and_tie_breaking(self):
        inst = gen_fsv(4, 24, 6)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(4)))
        res = rssd_grid(obj, x0, SolverConfig(), metric=lambda r: 0.0)
        assert res.schedule == SCHEDULE_GRID[0]
        worst = rssd_grid(obj, x0, SolverConfig(), metric=lambda r: -r.f)
        assert worst.f == max(r.f for r in worst.grid_runs)

    def test_empty_grid_rejected(self):
        inst = gen_fsv(4, 20, 5)
        obj = fsv_objective(inst.q, 1.0)
        x0 = obj.manifold.random_point(np.random.Generator(np.random.Philox(2)))
        with pytest.raises(ValueError):
            rssd_grid(obj, x0, SolverConfig(), schedules=())

    def test_documented_grid(self):
        assert SCHEDULE_GRID == ((0.5, 0.5), (0.1, 0.5), (0.5, 0.1),
                                 (0.8, 0.2), (0.2, 0.8))
