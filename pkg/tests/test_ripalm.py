import math
import warnings

import numpy as np
import pytest

from ripalm.common.errors import MaxIterations, ParameterWarning
from ripalm.common.models import CriterionKind, MethodName, SolveStatus
from ripalm.core.ripalm import (
    RipalmConfig,
    RipalmState,
    aug_lag_gradient,
    criterion_lhs,
    criterion_rhs,
    default_schedules,
    ripalm_solve,
    ripalm_step,
)
from ripalm.problems.bpdn.model import BpdnInstance, BpdnProblem
from ripalm.problems.bpdn.residuals import kkt_residuals_bpdn
from ripalm.problems.qrot.model import QrotProblem
from ripalm.problems.qrot.residuals import kkt_residuals_qrot

from conftest import QuadraticProblem


def quadratic_residual(problem):
    return lambda state: float(np.linalg.norm(state.x - problem.b) + np.linalg.norm(state.y - state.x))


def test_aug_lag_gradient_vanishes_at_stationary_point(quadratic_problem):
    b = quadratic_problem.b
    # prox(x + sigma y) = (x + sigma y) / (1 + sigma) = b
    y = np.array([0.25, 0.5, -0.125])
    x = 2.0 * b - y
    np.testing.assert_allclose(aug_lag_gradient(quadratic_problem, y, x, 1.0), 0.0, atol=1e-15)


def test_criterion_lhs_examples():
    assert criterion_lhs(np.ones(2), np.ones(2), np.zeros(2), 3.0) == 0.0
    assert criterion_lhs(np.ones(2), np.ones(2), np.array([0.0, 0.5]), 2.0) == pytest.approx(1.0)
    assert criterion_lhs(np.array([1.0, 0.0]), np.zeros(2), np.array([2.0, 0.0]), 1.0) == pytest.approx(8.0)


def test_criterion_rhs_examples():
    problem = QuadraticProblem(np.zeros(2))
    y_next = np.array([1.0, 2.0])
    assert criterion_rhs(problem, np.zeros(2), y_next, np.zeros(2), 1.0, 5.0, 0.0) == 0.0

    # prox(x + y) = (x + y)/2 == x when x = y
    assert criterion_rhs(problem, y_next, y_next, y_next, 1.0, 5.0, 0.9) == 0.0

    # x_prev = -y_next/3 makes ||prox - x_prev||^2 = ||2 y_next/3||^2 = 4 with y_next = (3, 0)
    y_next = np.array([3.0, 0.0])
    x_prev = -y_next / 3.0
    y_prev = y_next - np.array([1.0, 0.0])
    assert criterion_rhs(problem, x_prev, y_next, y_prev, 1.0, 5.0, 0.5) == pytest.approx(4.5)


def test_default_schedules():
    cfg = default_schedules()
    assert cfg.sigma_at(0) == 1.0
    assert cfg.sigma_at(22) < 1e4
    assert cfg.sigma_at(23) == 1e4
    assert cfg.sigma_at(10 ** 6) == 1e4
    assert cfg.tau_at(10) == 5.0
    assert cfg.rho == 0.99


def test_callable_tau_schedule():
    cfg = RipalmConfig(tau_schedule=lambda k: 5.0 + 1.0 / (k + 1) ** 2, max_outer=10)
    assert cfg.tau_at(0) == 6.0
    assert cfg.tau_min() == pytest.approx(5.01)


def test_step_on_exact_subproblem_minimizer(quadratic_problem):
    b = quadratic_problem.b
    y = np.array([0.25, 0.5, -0.125])
    w = np.array([1.0, 1.0, 1.0])
    state = RipalmState(y=y, x=2.0 * b - y, w=w)
    nxt = ripalm_step(quadratic_problem, state, default_schedules())
    assert nxt.inner_iterations == 0
    assert nxt.criterion_lhs == 0.0
    np.testing.assert_allclose(nxt.x, b)
    np.testing.assert_allclose(nxt.w, w)
    assert nxt.k == 1


def test_step_update_identities(toy_qrot):
    problem = QrotProblem(toy_qrot)
    cfg = default_schedules()
    state = RipalmState.initial(problem)
    for _ in range(4):
        nxt = ripalm_step(problem, state, cfg)
        assert nxt.criterion_lhs <= nxt.criterion_rhs
        np.testing.assert_allclose(nxt.w + nxt.sigma * nxt.delta, state.w, atol=1e-14)
        fresh = problem.prox_f(state.x + nxt.sigma * problem.apply_At(nxt.y), nxt.sigma)
        np.testing.assert_array_equal(nxt.x, fresh)
        state = nxt


def test_infinite_tolerance_returns_initial_state(toy_qrot):
    problem = QrotProblem(toy_qrot)
    state, report = ripalm_solve(problem, RipalmConfig(tol=math.inf), lambda s: 1.0)
    assert report.outer_iterations == 0
    assert report.status == SolveStatus.CONVERGED
    assert state.k == 0
    np.testing.assert_array_equal(state.y, 0.0)


def test_qrot_toy_reaches_closed_form_optimum(toy_qrot):
    problem = QrotProblem(toy_qrot)

    def residual_fn(state):
        return kkt_residuals_qrot(toy_qrot, problem.split(state.y), state.x).res

    state, report = ripalm_solve(problem, default_schedules(), residual_fn)
    assert report.status == SolveStatus.CONVERGED
    assert report.residual < 1e-6
    np.testing.assert_allclose(state.x, 0.25, atol=1e-5)
    assert report.method == MethodName.RIPALM
    assert report.inner_iterations == sum(r.inner_iterations for r in report.records)


def test_bpdn_zero_is_optimal_inside_ball(rng):
    b = 0.1 * rng.standard_normal(5)
    inst = BpdnInstance(D=np.eye(5), b=b, kappa_hat=2.0 * float(np.linalg.norm(b)))
    problem = BpdnProblem(inst)

    def residual_fn(state):
        return kkt_residuals_bpdn(inst, problem.split(state.x), state.y).res

    state, report = ripalm_solve(problem, default_schedules(), residual_fn)
    assert report.status == SolveStatus.CONVERGED
    assert np.abs(problem.split(state.x).s).sum() <= 2e-6


@pytest.mark.parametrize("criterion,rho", [(CriterionKind.ABSOLUTE, 0.99), (CriterionKind.CORRECTED, 0.3)])
def test_alternative_criteria_converge(toy_qrot, criterion, rho):
    problem = QrotProblem(toy_qrot)

    def residual_fn(state):
        return kkt_residuals_qrot(toy_qrot, problem.split(state.y), state.x).res

    cfg = RipalmConfig(criterion=criterion, rho=rho)
    state, report = ripalm_solve(problem, cfg, residual_fn)
    assert report.status == SolveStatus.CONVERGED
    np.testing.assert_allclose(state.x, 0.25, atol=1e-5)
    assert all(r.criterion_lhs <= r.criterion_rhs for r in report.records)


def test_max_iterations_returns_best_state(quadratic_problem):
    cfg = RipalmConfig(max_outer=1, tol=1e-12)
    state, report = ripalm_solve(quadratic_problem, cfg, quadratic_residual(quadratic_problem))
    assert report.status == SolveStatus.MAX_ITERATIONS
    assert report.outer_iterations == 1

    with pytest.raises(MaxIterations) as excinfo:
        ripalm_solve(quadratic_problem, cfg, quadratic_residual(quadratic_problem), raise_on_max_iterations=True)
    assert excinfo.value.report.status == SolveStatus.MAX_ITERATIONS


def test_quadratic_problem_converges_to_saddle_point(quadratic_problem):
    state, report = ripalm_solve(quadratic_problem, default_schedules(), quadratic_residual(quadratic_problem))
    assert report.status == SolveStatus.CONVERGED
    np.testing.assert_allclose(state.x, quadratic_problem.b, atol=1e-6)
    np.testing.assert_allclose(state.y, quadratic_problem.b, atol=1e-6)


def test_parameter_guard_warns_below_threshold():
    with pytest.warns(ParameterWarning):
        RipalmConfig(tau=1.0, rho=0.99)
    with pytest.warns(ParameterWarning):
        RipalmConfig(criterion=CriterionKind.CORRECTED, rho=0.5)


def test_default_parameters_do_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        RipalmConfig(tau=5.0, rho=0.99)
        RipalmConfig(criterion=CriterionKind.CORRECTED, rho=0.3)


def test_invalid_sigma_bounds():
    with pytest.raises(ValueError):
        RipalmConfig(sigma_min=10.0, sigma_max=1.0)
