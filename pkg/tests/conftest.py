import numpy as np
import pytest

from ripalm.common.numerics import DenseVector
from ripalm.core.oracle import ProblemOracle, SubproblemOracle
from ripalm.problems.bpdn.model import BpdnInstance
from ripalm.problems.qrot.model import QrotInstance


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


class QuadraticSubproblem(SubproblemOracle):
    def __init__(self, b, x_bar, y_bar, sigma, tau):
        self.b, self.x_bar, self.y_bar = b, x_bar, y_bar
        self.sigma, self.tau = sigma, tau

    def value(self, y):
        z = self.x_bar + self.sigma * y
        dy = y - self.y_bar
        return -float(self.b @ y) + float(z @ z) / (2 * self.sigma * (1 + self.sigma)) + self.tau / (2 * self.sigma) * float(dy @ dy)

    def gradient(self, y):
        return (self.x_bar + self.sigma * y) / (1 + self.sigma) - self.b + (self.tau / self.sigma) * (y - self.y_bar)

    def curvature(self) -> float:
        return self.sigma / (1 + self.sigma) + self.tau / self.sigma

    def jacobian_matvec(self, y, d):
        return self.curvature() * d

    def newton_solve(self, y, g, tol):
        return -g / self.curvature()


class QuadraticProblem(ProblemOracle):
    """min 1/2 ||x||^2 s.t. x = b; the saddle point is x* = y* = b."""

    def __init__(self, b: DenseVector):
        self._b = np.asarray(b, dtype=np.float64)

    @property
    def b(self):
        return self._b

    def apply_A(self, x):
        return x

    def apply_At(self, y):
        return y

    def prox_f(self, point, sigma):
        return point / (1 + sigma)

    def subproblem(self, x_bar, y_bar, sigma, tau):
        return QuadraticSubproblem(self._b, x_bar, y_bar, sigma, tau)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def quadratic_problem():
    return QuadraticProblem(np.array([1.0, -2.0, 0.5]))


@pytest.fixture
def toy_qrot():
    """2x2 instance with C = 0; the optimal plan is 0.25 everywhere."""
    return QrotInstance(C=np.zeros((2, 2)), alpha=np.array([0.5, 0.5]), beta=np.array([0.5, 0.5]), lam=1.0)


@pytest.fixture
def small_bpdn(rng):
    D = rng.standard_normal((6, 15))
    b = rng.standard_normal(6)
    return BpdnInstance(D=D, b=b, kappa_hat=0.1 * float(np.linalg.norm(b)))
