import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ...common.errors import InputError
from ...common.numerics import DIRECT_SOLVE_MAX_DIM, CholeskySolver, DenseMatrix, DenseVector, as_matrix, as_vector, spd_solve
from ...core.oracle import ProblemOracle, SubproblemOracle

logger = logging.getLogger(__name__)

KAPPA_FLOOR = 1e-12
NEWTON_RTOL = 1e-10


@dataclass(frozen=True)
class BpdnInstance:
    """min ||s||_1  s.t.  ||D s - b|| <= kappa_hat."""

    D: DenseMatrix
    b: DenseVector
    kappa_hat: float

    def __post_init__(self):
        D = as_matrix(self.D, name="D")
        b = as_vector(self.b, name="b")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "kappa_hat", max(float(self.kappa_hat), KAPPA_FLOOR))
        if D.shape[0] != b.shape[0]:
            raise InputError(f"dictionary has {D.shape[0]} rows but b has {b.shape[0]} entries")
        if D.shape[0] < 1 or D.shape[1] < 1:
            raise InputError(f"empty dictionary of shape {D.shape}")

    @property
    def m(self) -> int:
        return self.D.shape[0]

    @property
    def n(self) -> int:
        return self.D.shape[1]


@dataclass
class BpdnPrimalPoint:
    """Lifted primal point with t = D s - b."""

    s: DenseVector
    t: DenseVector

    @classmethod
    def split(cls, x: DenseVector, n: int) -> "BpdnPrimalPoint":
        return cls(s=x[:n], t=x[n:])

    def stack(self) -> DenseVector:
        return np.concatenate([self.s, self.t])


class BallCase(str, Enum):
    INTERIOR = "ball_interior"
    EXTERIOR = "ball_exterior"


def prox_l1(u: DenseVector, sigma: float) -> DenseVector:
    return np.sign(u) * np.maximum(np.abs(u) - sigma, 0.0)


def proj_l2ball(v: DenseVector, kappa_hat: float) -> DenseVector:
    norm = float(np.linalg.norm(v))
    if norm <= kappa_hat:
        return v.copy()
    return (kappa_hat / norm) * v


def prox_l2norm(x: DenseVector, kappa_hat: float) -> DenseVector:
    """prox of kappa_hat ||.||_2 (block soft-thresholding)."""
    norm = float(np.linalg.norm(x))
    if norm <= kappa_hat:
        return np.zeros_like(x)
    return (1.0 - kappa_hat / norm) * x


def phi_value(inst: BpdnInstance, y: DenseVector, sbar, tbar, ybar, sigma: float, tau: float) -> float:
    """Proximal augmented Lagrangian objective in y."""
    a = sbar + sigma * (inst.D.T @ y)
    c = tbar - sigma * y
    shrunk = prox_l1(a, sigma)
    c_norm = float(np.linalg.norm(c))
    outside = max(c_norm - inst.kappa_hat, 0.0)
    dy = y - ybar
    return (
        -float(inst.b @ y)
        + float(shrunk @ shrunk) / (2.0 * sigma)
        - float(sbar @ sbar) / (2.0 * sigma)
        + (c_norm ** 2 - outside ** 2) / (2.0 * sigma)
        - float(tbar @ tbar) / (2.0 * sigma)
        + tau / (2.0 * sigma) * float(dy @ dy)
    )


def grad_phi(inst: BpdnInstance, y: DenseVector, sbar, tbar, ybar, sigma: float, tau: float) -> DenseVector:
    shrunk = prox_l1(sbar + sigma * (inst.D.T @ y), sigma)
    return inst.D @ shrunk - proj_l2ball(tbar - sigma * y, inst.kappa_hat) - inst.b + (tau / sigma) * (y - ybar)


@dataclass
class BpdnNewtonSystem:
    """H = sigma (D_I D_I^T + V) + (tau/sigma) I for the active set I of the soft-threshold."""

    active: np.ndarray
    case: BallCase
    v: DenseVector
    sigma: float
    tau: float
    kappa_hat: float

    @property
    def v_norm(self) -> float:
        return float(np.linalg.norm(self.v))

    def V_matvec(self, d: DenseVector) -> DenseVector:
        if self.case == BallCase.INTERIOR:
            return d
        norm = self.v_norm
        return (self.kappa_hat / norm) * (d - self.v * (self.v @ d) / norm ** 2)

    def matvec(self, D: DenseMatrix, d: DenseVector) -> DenseVector:
        DI = D[:, self.active]
        return self.sigma * (DI @ (DI.T @ d) + self.V_matvec(d)) + (self.tau / self.sigma) * d

    def dense(self, D: DenseMatrix) -> DenseMatrix:
        m = D.shape[0]
        DI = D[:, self.active]
        if self.case == BallCase.INTERIOR:
            V = np.eye(m)
        else:
            norm = self.v_norm
            V = (self.kappa_hat / norm) * (np.eye(m) - np.outer(self.v, self.v) / norm ** 2)
        return self.sigma * (DI @ DI.T + V) + (self.tau / self.sigma) * np.eye(m)

    def b_inverse(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the closed-form inverse of B = c I - (kappa/|v|^3) v v^T (exterior case)."""
        norm = self.v_norm
        a = self.kappa_hat / norm
        c = a + self.tau / self.sigma ** 2
        alpha_bar = 1.0 - a / c
        coef = (self.kappa_hat / norm ** 3) / (alpha_bar * c ** 2)
        return rhs / c + coef * np.outer(self.v, self.v @ rhs).reshape(rhs.shape)

    def b_matrix(self) -> DenseMatrix:
        norm = self.v_norm
        c = self.kappa_hat / norm + self.tau / self.sigma ** 2
        return c * np.eye(self.v.shape[0]) - (self.kappa_hat / norm ** 3) * np.outer(self.v, self.v)


def assemble_newton_system(inst: BpdnInstance, y: DenseVector, sbar, tbar, sigma: float, tau: float) -> BpdnNewtonSystem:
    u = sbar + sigma * (inst.D.T @ y)
    v = tbar - sigma * y
    active = np.flatnonzero(np.abs(u) > sigma)
    case = BallCase.INTERIOR if np.linalg.norm(v) <= inst.kappa_hat else BallCase.EXTERIOR
    return BpdnNewtonSystem(active=active, case=case, v=v, sigma=sigma, tau=tau, kappa_hat=inst.kappa_hat)


def solve_newton_bpdn(
    system: BpdnNewtonSystem, inst: BpdnInstance, g: DenseVector, tol: Optional[float] = None
) -> DenseVector:
    """
    Solve H d = -g with the Sherman-Morrison-Woodbury reductions.

    The m x m system is factorized when m <= |I|, otherwise the |I| x |I| system.
    Larger than the direct-solve limit on both sides falls back to PCG, stopped at
    ``||H d + g|| <= tol`` (default NEWTON_RTOL * max(1, ||g||)).
    """
    m = inst.m
    k = system.active.shape[0]
    rhs = -g / system.sigma
    DI = inst.D[:, system.active]

    if min(m, k) > DIRECT_SOLVE_MAX_DIM:
        if tol is None:
            tol = NEWTON_RTOL * max(1.0, float(np.linalg.norm(g)))
        return spd_solve(-g, lambda d: system.matvec(inst.D, d), tol=tol, maxit=10 * m)

    if system.case == BallCase.INTERIOR:
        gamma_bar = (system.sigma ** 2 + system.tau) / system.sigma ** 2
        if k == 0:
            return rhs / gamma_bar
        if m <= k:
            return CholeskySolver(DI @ DI.T + gamma_bar * np.eye(m)).solve(rhs)
        inner = CholeskySolver(gamma_bar * np.eye(k) + DI.T @ DI)
        return (rhs - DI @ inner.solve(DI.T @ rhs)) / gamma_bar

    if m <= k:
        return CholeskySolver(system.b_matrix() + DI @ DI.T).solve(rhs)
    Binv_rhs = system.b_inverse(rhs)
    if k == 0:
        return Binv_rhs
    Binv_DI = system.b_inverse(DI)
    capacitance = np.eye(k) + DI.T @ Binv_DI
    inner = CholeskySolver(0.5 * (capacitance + capacitance.T))
    return Binv_rhs - Binv_DI @ inner.solve(DI.T @ Binv_rhs)


class BpdnSubproblem(SubproblemOracle):
    def __init__(self, inst: BpdnInstance, x_bar: DenseVector, ybar: DenseVector, sigma: float, tau: float):
        self.inst = inst
        center = BpdnPrimalPoint.split(x_bar, inst.n)
        self.sbar, self.tbar = center.s, center.t
        self.ybar = ybar
        self.sigma = sigma
        self.tau = tau

    def value(self, y: DenseVector) -> float:
        return phi_value(self.inst, y, self.sbar, self.tbar, self.ybar, self.sigma, self.tau)

    def gradient(self, y: DenseVector) -> DenseVector:
        return grad_phi(self.inst, y, self.sbar, self.tbar, self.ybar, self.sigma, self.tau)

    def system(self, y: DenseVector) -> BpdnNewtonSystem:
        return assemble_newton_system(self.inst, y, self.sbar, self.tbar, self.sigma, self.tau)

    def jacobian_matvec(self, y: DenseVector, d: DenseVector) -> DenseVector:
        return self.system(y).matvec(self.inst.D, d)

    def newton_solve(self, y: DenseVector, g: DenseVector, tol: float) -> DenseVector:
        return solve_newton_bpdn(self.system(y), self.inst, g, tol)


class BpdnProblem(ProblemOracle):
    """BPDN in lifted form: min ||s||_1 + indicator(||t|| <= kappa) s.t. D s - t = b."""

    def __init__(self, inst: BpdnInstance):
        logger.info(f"Initializing BPDN problem with m={inst.m}, n={inst.n}, kappa_hat={inst.kappa_hat:.3e}")
        self.inst = inst

    @property
    def b(self) -> DenseVector:
        return self.inst.b

    def apply_A(self, x: DenseVector) -> DenseVector:
        point = BpdnPrimalPoint.split(x, self.inst.n)
        return self.inst.D @ point.s - point.t

    def apply_At(self, y: DenseVector) -> DenseVector:
        return np.concatenate([self.inst.D.T @ y, -y])

    def prox_f(self, point: DenseVector, sigma: float) -> DenseVector:
        split = BpdnPrimalPoint.split(point, self.inst.n)
        return np.concatenate([prox_l1(split.s, sigma), proj_l2ball(split.t, self.inst.kappa_hat)])

    def subproblem(self, x_bar: DenseVector, y_bar: DenseVector, sigma: float, tau: float) -> BpdnSubproblem:
        return BpdnSubproblem(self.inst, x_bar, y_bar, sigma, tau)

    def split(self, x: DenseVector) -> BpdnPrimalPoint:
        return BpdnPrimalPoint.split(x, self.inst.n)

    def primal_point(self, s: DenseVector, t: Optional[DenseVector] = None) -> DenseVector:
        t = self.inst.D @ s - self.inst.b if t is None else t
        return np.concatenate([s, t])
