import numpy as np
import pytest
from numpy.testing import assert_allclose

from ripalm.common.errors import Breakdown, InputError, NotSpd
from ripalm.common.numerics import (
    CholeskySolver,
    as_matrix,
    as_vector,
    check_spd,
    cholesky_solve,
    pcg_solve,
    spd_solve,
)


def random_spd(rng, dim):
    M = rng.standard_normal((dim, dim))
    return M.T @ M + np.eye(dim)


def test_cholesky_identity_and_diagonal():
    assert_allclose(cholesky_solve(np.eye(3), np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])
    assert_allclose(cholesky_solve(np.diag([2.0, 4.0]), np.array([2.0, 8.0])), [1.0, 2.0])


def test_cholesky_residual_on_random_spd(rng):
    A = random_spd(rng, 5)
    rhs = rng.standard_normal(5)
    d = cholesky_solve(A, rhs)
    assert np.linalg.norm(A @ d - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_cholesky_rejects_indefinite_and_asymmetric():
    with pytest.raises(NotSpd):
        cholesky_solve(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2))
    with pytest.raises(NotSpd):
        CholeskySolver(np.array([[2.0, 1.0], [0.0, 2.0]]))


def test_cholesky_solver_reuses_factor_for_matrix_rhs(rng):
    A = random_spd(rng, 4)
    B = rng.standard_normal((4, 3))
    assert_allclose(A @ CholeskySolver(A).solve(B), B, atol=1e-10)


def test_pcg_identity_converges_in_one_iteration():
    e1 = np.array([1.0, 0.0, 0.0])
    result = pcg_solve(lambda d: d, e1, tol=1e-12, maxit=10)
    assert result.converged
    assert result.iterations == 1
    assert_allclose(result.x, e1)


def test_pcg_diagonal():
    diag = np.array([1.0, 10.0])
    result = pcg_solve(lambda d: diag * d, np.array([1.0, 10.0]), tol=1e-12, maxit=10)
    assert_allclose(result.x, [1.0, 1.0], atol=1e-10)


def test_pcg_agrees_with_cholesky(rng):
    A = random_spd(rng, 8)
    rhs = rng.standard_normal(8)
    result = pcg_solve(lambda d: A @ d, rhs, tol=1e-12, maxit=100, precond=lambda r: r / np.diag(A))
    assert np.linalg.norm(result.x - cholesky_solve(A, rhs)) <= 1e-8


def test_pcg_breakdown_on_negative_curvature():
    with pytest.raises(Breakdown):
        pcg_solve(lambda d: -d, np.ones(3), tol=1e-12, maxit=10)


def test_pcg_returns_best_iterate_at_maxit(rng):
    A = random_spd(rng, 30)
    rhs = rng.standard_normal(30)
    result = pcg_solve(lambda d: A @ d, rhs, tol=1e-14, maxit=2)
    assert not result.converged
    assert result.residual == pytest.approx(np.linalg.norm(A @ result.x - rhs))


def test_spd_solve_direct_and_iterative_paths_agree(rng):
    A = random_spd(rng, 10)
    rhs = rng.standard_normal(10)
    direct = spd_solve(rhs, lambda d: A @ d, dense=lambda: A, tol=1e-10)
    iterative = spd_solve(rhs, lambda d: A @ d, diag=np.diag(A), tol=1e-10)
    assert np.linalg.norm(A @ direct - rhs) <= 1e-10
    assert np.linalg.norm(A @ iterative - rhs) <= 1e-10


def test_spd_solve_warns_when_pcg_stops_short(caplog):
    A = np.diag(np.arange(1.0, 11.0))
    with caplog.at_level("WARNING", logger="ripalm.common.numerics"):
        d = spd_solve(np.ones(10), lambda v: A @ v, tol=1e-12, maxit=1)
    assert np.linalg.norm(A @ d - np.ones(10)) > 1e-12
    assert any("PCG stopped" in r.getMessage() for r in caplog.records)

    caplog.clear()
    with caplog.at_level("WARNING", logger="ripalm.common.numerics"):
        spd_solve(np.ones(10), lambda v: A @ v, tol=1e-10)
    assert not caplog.records


def test_check_spd(rng):
    assert check_spd(lambda d: 2.0 * d, 4, rng)
    assert not check_spd(lambda d: -d, 4, rng)


def test_conversions_reject_non_finite():
    with pytest.raises(InputError):
        as_vector([1.0, np.nan])
    with pytest.raises(InputError):
        as_matrix([[1.0, np.inf]])
    assert as_matrix([1.0, 2.0]).shape == (1, 2)
