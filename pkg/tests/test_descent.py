import numpy as np
import pytest

from cqlqg.calculus.gradient import gradient
from cqlqg.core.closedloop import lqg_cost
from cqlqg.core.exceptions import ArmijoExhaustedError, PreconditionError, StabilizationNotFoundError
from cqlqg.core.model import ControllerParams, random_stabilizing
from cqlqg.optimizer.config import SolverConfig
from cqlqg.optimizer.descent import (
    Termination,
    armijo_step,
    descend,
    multi_start,
    search_horizon,
    start_seeds,
)

from helpers import perturbed


def _half_norm_sq(v):
    return 0.5 * v.inner(v)


def _assert_valid_trace(result, cfg):
    costs = result.costs
    assert np.all(np.diff(costs) < 0)
    for rec, cost_next in zip(result.trace, costs[1:]):
        # Armijo certificate of every accepted step
        assert rec.cost - cost_next >= cfg.sigma * rec.stepsize * rec.grad_norm**2 * (1 - 1e-9)
        assert rec.stepsize == pytest.approx(rec.horizon * cfg.f**rec.armijo_j)
    assert [rec.k for rec in result.trace] == list(range(result.iterations))


def test_search_horizon():
    assert search_horizon(1.0, 2.0, 1.0) == 0.5
    assert search_horizon(1.0, 0.0, 1.0) == 1.0
    assert search_horizon(4.0, -1.0, 10.0) == 4.0
    assert search_horizon(4.0, 1e-320, 3.0) == 3.0
    assert search_horizon(1.0, 0.5, 1.0) == 1.0
    with pytest.raises(PreconditionError):
        search_horizon(-1.0, 1.0, 1.0)


def test_armijo_on_quadratic(u8):
    cfg = SolverConfig(f=0.5, sigma=0.9)
    g = u8.astype(ControllerParams)
    s, j, cost_new = armijo_step(None, u8, g, _half_norm_sq(u8), 1.0, cfg, cost_fn=_half_norm_sq)
    assert j == 3
    assert s == 0.125
    assert cost_new == pytest.approx(_half_norm_sq(u8) * (1 - s) ** 2)
    assert _half_norm_sq(u8) - cost_new >= cfg.sigma * s * g.inner(g)


def test_armijo_skips_infinite_candidates(u8):
    cfg = SolverConfig(f=0.5, sigma=0.1)

    def cost_fn(v):
        # outside a ball around u the candidate counts as destabilizing
        return _half_norm_sq(v) if (v - u8).norm() < 0.3 * u8.norm() else float("inf")

    s, j, _ = armijo_step(None, u8, u8, _half_norm_sq(u8), 1.0, cfg, cost_fn=cost_fn)
    assert (s, j) == (0.25, 2)


def test_armijo_exhausted(u8):
    cfg = SolverConfig(armijo_max_mu=5)
    with pytest.raises(ArmijoExhaustedError) as info:
        armijo_step(None, u8, u8, 1.0, 1.0, cfg, cost_fn=lambda v: 1.0)
    assert info.value.mu == 5


def test_descend_requires_stabilizing_start(plant8):
    zero = ControllerParams.zeros(plant8.n, plant8.m2, plant8.p1)
    with pytest.raises(PreconditionError):
        descend(plant8, zero, SolverConfig())


def test_descend_from_example8_optimum(plant8, u8):
    cfg = SolverConfig(max_iters=200)
    result = descend(plant8, u8, cfg)
    assert result.final_cost <= 12.1036
    assert result.final_cost <= lqg_cost(plant8, u8).value
    assert result.iterations >= 1
    _assert_valid_trace(result, cfg)
    assert result.to_frame().columns == ["k", "cost", "grad_norm", "horizon", "stepsize", "armijo_j", "u_norm"]


def test_epsilon_zero_runs_to_max_iters(plant10, u10):
    cfg = SolverConfig(epsilon=0.0, max_iters=20)
    result = descend(plant10, u10, cfg)
    assert result.terminated == Termination.MAX_ITERS
    assert result.iterations == 20
    _assert_valid_trace(result, cfg)


def test_fd_second_derivative_mode(plant10, u10, rng):
    u0 = perturbed(plant10, u10, rng, 0.005)
    cfg = SolverConfig(max_iters=10, second_derivative="fd")
    result = descend(plant10, u0, cfg)
    assert result.final_cost < lqg_cost(plant10, u0).value
    _assert_valid_trace(result, cfg)


def test_fd_stencil_outside_stabilizing_set_falls_back_to_h_max(plant10, u10):
    cfg = SolverConfig(epsilon=0.0, max_iters=5, second_derivative="fd", fd_step=0.3)
    result = descend(plant10, u10, cfg)
    assert result.iterations == 5
    assert any(rec.horizon == cfg.h_max for rec in result.trace)
    _assert_valid_trace(result, cfg)


def test_descend_uses_configured_lyapunov_method(plant10, u10, monkeypatch):
    import cqlqg.core.matlib as matlib

    def kron_forbidden(A, W):
        raise AssertionError("kron backend used despite lyapunov_method = schur")

    monkeypatch.setattr(matlib, "_lyapunov_kron", kron_forbidden)
    cfg = SolverConfig(epsilon=0.0, max_iters=3, lyapunov_method="schur")
    result = descend(plant10, u10, cfg)
    assert result.iterations == 3
    _assert_valid_trace(result, cfg)


def test_start_seeds_are_reproducible():
    assert start_seeds(7, 4) == start_seeds(7, 4)
    assert len(set(start_seeds(7, 4))) == 4
    assert start_seeds(7, 4) != start_seeds(8, 4)


def test_single_start_matches_descend(plant10):
    cfg = SolverConfig(max_iters=25, rng_seed=11)
    best, results = multi_start(plant10, cfg, n_starts=1)
    assert len(results) == 1 and best is results[0]

    u0, tries = random_stabilizing(plant10, start_seeds(11, 1)[0])
    direct = descend(plant10, u0, cfg)
    assert best.tries_used == tries
    assert np.array_equal(best.final_u.to_vector(), direct.final_u.to_vector())
    assert best.final_cost == direct.final_cost


def test_multi_start_is_deterministic(plant10):
    cfg = SolverConfig(max_iters=15, rng_seed=5)
    best_a, runs_a = multi_start(plant10, cfg, n_starts=3, workers=1)
    best_b, runs_b = multi_start(plant10, cfg, n_starts=3, workers=3)
    assert [r.seed for r in runs_a] == start_seeds(5, 3)
    assert [r.seed for r in runs_a] == [r.seed for r in runs_b]
    assert [r.final_cost for r in runs_a] == [r.final_cost for r in runs_b]
    assert best_a.final_cost == min(r.final_cost for r in runs_a)
    assert best_a.seed == best_b.seed


def test_multi_start_reports_failed_stabilization(plant8):
    with pytest.raises(StabilizationNotFoundError) as info:
        multi_start(plant8, SolverConfig(), n_starts=2, scale=0.0, max_tries=3)
    assert info.value.tries_used == 6
    with pytest.raises(PreconditionError):
        multi_start(plant8, SolverConfig(), n_starts=0)


@pytest.mark.slow
def test_example10_terminates_at_stationary_point(plant10):
    cfg = SolverConfig(epsilon=1e-9)
    u0, _ = random_stabilizing(plant10, 4)
    g0, _ = gradient(plant10, u0)
    result = descend(plant10, u0, cfg)
    assert result.terminated == Termination.GRADIENT_SMALL
    g_final, _ = gradient(plant10, result.final_u)
    assert g_final.norm() / g0.norm() < 1e-4


@pytest.mark.slow
def test_example8_multi_start(plant8):
    cfg = SolverConfig()
    best, results = multi_start(plant8, cfg, n_starts=10, workers=4)
    assert len(results) == 10
    for run in results:
        assert run.terminated != Termination.MAX_ITERS
        assert 50 <= run.iterations <= 25000
        _assert_valid_trace(run, cfg)
    assert best.final_cost == pytest.approx(12.1026, abs=1e-2)


@pytest.mark.slow
def test_example10_multi_start(plant10):
    cfg = SolverConfig(rng_seed=7)
    best, results = multi_start(plant10, cfg, n_starts=10, workers=4)
    assert best.final_cost == pytest.approx(2.0418, abs=5e-3)
