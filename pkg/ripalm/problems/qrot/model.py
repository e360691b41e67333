import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from ...common.errors import InputError, ZeroMass
from ...common.numerics import DenseMatrix, DenseVector, as_matrix, as_vector, spd_solve
from ...core.oracle import ProblemOracle, SubproblemOracle

logger = logging.getLogger(__name__)

MARGINAL_ATOL = 1e-12


@dataclass(frozen=True)
class QrotInstance:
    """min <C, X> + lam/2 ||X||^2  s.t.  X 1 = alpha, X^T 1 = beta, X >= 0."""

    C: DenseMatrix
    alpha: DenseVector
    beta: DenseVector
    lam: float = 1.0

    def __post_init__(self):
        C = as_matrix(self.C, name="C")
        alpha = as_vector(self.alpha, name="alpha")
        beta = as_vector(self.beta, name="beta")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "lam", float(self.lam))
        if C.shape != (alpha.shape[0], beta.shape[0]):
            raise InputError(f"cost shape {C.shape} does not match marginals ({alpha.shape[0]}, {beta.shape[0]})")
        if self.lam < 0:
            raise InputError(f"regularization must be nonnegative, got {self.lam}")
        if np.any(C < 0):
            raise InputError("cost matrix has negative entries")
        for name, marginal in (("alpha", alpha), ("beta", beta)):
            if marginal.sum() <= 0:
                raise ZeroMass(f"{name} has no mass")
            if abs(marginal.sum() - 1.0) > MARGINAL_ATOL:
                raise InputError(f"{name} sums to {marginal.sum():.15g}, expected 1")
            if np.any(marginal <= 0):
                raise InputError(f"{name} has nonpositive entries")

    @property
    def m(self) -> int:
        return self.alpha.shape[0]

    @property
    def n(self) -> int:
        return self.beta.shape[0]


@dataclass
class QrotDualPoint:
    u: DenseVector
    v: DenseVector

    @classmethod
    def split(cls, y: DenseVector, m: int) -> "QrotDualPoint":
        return cls(u=y[:m], v=y[m:])

    def stack(self) -> DenseVector:
        return np.concatenate([self.u, self.v])


@dataclass
class QrotJacobian:
    """scale * B Diag(vec(omega)) B^T + ridge * I with B the marginal operator's adjoint."""

    omega: sp.csr_matrix
    scale: float
    ridge: float

    @property
    def shape(self) -> Tuple[int, int]:
        return self.omega.shape

    def row_counts(self) -> DenseVector:
        return np.asarray(self.omega.sum(axis=1)).ravel()

    def col_counts(self) -> DenseVector:
        return np.asarray(self.omega.sum(axis=0)).ravel()

    def diagonal(self) -> DenseVector:
        return self.scale * np.concatenate([self.row_counts(), self.col_counts()]) + self.ridge

    def matvec(self, d: DenseVector) -> DenseVector:
        m, _ = self.shape
        du, dv = d[:m], d[m:]
        top = self.row_counts() * du + self.omega @ dv
        bottom = self.omega.T @ du + self.col_counts() * dv
        return self.scale * np.concatenate([top, bottom]) + self.ridge * d

    def dense(self) -> DenseMatrix:
        m, n = self.shape
        om = self.omega.toarray()
        H = np.zeros((m + n, m + n))
        H[:m, :m] = np.diag(om.sum(axis=1))
        H[:m, m:] = om
        H[m:, :m] = om.T
        H[m:, m:] = np.diag(om.sum(axis=0))
        return self.scale * H + self.ridge * np.eye(m + n)


def prox_fq(Z: DenseMatrix, sigma: float, inst: QrotInstance) -> DenseMatrix:
    """max(Z - sigma C, 0) / (1 + lam sigma)."""
    return np.maximum(Z - sigma * inst.C, 0.0) / (1.0 + inst.lam * sigma)


def marginals(X: DenseMatrix) -> Tuple[DenseVector, DenseVector]:
    return X.sum(axis=1), X.sum(axis=0)


def broadcast_potentials(u: DenseVector, v: DenseVector) -> DenseMatrix:
    """u 1^T + 1 v^T."""
    return u[:, None] + v[None, :]


def _transport_point(inst, point, Xbar, sigma):
    return Xbar + sigma * broadcast_potentials(point.u, point.v)


def psi_value(inst: QrotInstance, point: QrotDualPoint, Xbar: DenseMatrix, ubar, vbar, sigma: float, tau: float) -> float:
    """Proximal augmented Lagrangian objective in (u, v)."""
    W = _transport_point(inst, point, Xbar, sigma) - sigma * inst.C
    active = np.maximum(W, 0.0)
    smooth = float(np.vdot(active, active)) / (2.0 * sigma * (1.0 + inst.lam * sigma))
    prox_term = tau / (2.0 * sigma) * (
        float(np.dot(point.u - ubar, point.u - ubar)) + float(np.dot(point.v - vbar, point.v - vbar))
    )
    linear = float(np.dot(inst.alpha, point.u)) + float(np.dot(inst.beta, point.v))
    return -linear + smooth - float(np.vdot(Xbar, Xbar)) / (2.0 * sigma) + prox_term


def grad_psi(
    inst: QrotInstance,
    point: QrotDualPoint,
    Xbar: DenseMatrix,
    ubar: DenseVector,
    vbar: DenseVector,
    sigma: float,
    tau: float,
) -> Tuple[DenseVector, DenseVector]:
    P = prox_fq(_transport_point(inst, point, Xbar, sigma), sigma, inst)
    rows, cols = marginals(P)
    gu = rows - inst.alpha + (tau / sigma) * (point.u - ubar)
    gv = cols - inst.beta + (tau / sigma) * (point.v - vbar)
    return gu, gv


def build_jacobian(inst: QrotInstance, point: QrotDualPoint, Xbar: DenseMatrix, sigma: float, tau: float) -> QrotJacobian:
    W = _transport_point(inst, point, Xbar, sigma) - sigma * inst.C
    omega = sp.csr_matrix((W > 0).astype(np.float64))
    return QrotJacobian(omega=omega, scale=sigma / (1.0 + inst.lam * sigma), ridge=tau / sigma)


def newton_direction_qrot(jac: QrotJacobian, g: DenseVector, tol: float) -> DenseVector:
    """d with ||H d + g|| <= tol; factorized up to 2000 unknowns, PCG beyond."""
    if jac.omega.nnz == 0:
        return -g / jac.ridge
    return spd_solve(-g, jac.matvec, dense=jac.dense, diag=jac.diagonal(), tol=tol)


class QrotSubproblem(SubproblemOracle):
    """Newton subproblem of one outer step, centred at (ubar, vbar) and Xbar."""

    def __init__(self, inst: QrotInstance, Xbar: DenseMatrix, ybar: DenseVector, sigma: float, tau: float):
        self.inst = inst
        self.Xbar = Xbar
        self.center = QrotDualPoint.split(ybar, inst.m)
        self.sigma = sigma
        self.tau = tau

    def _point(self, y: DenseVector) -> QrotDualPoint:
        return QrotDualPoint.split(y, self.inst.m)

    def value(self, y: DenseVector) -> float:
        return psi_value(self.inst, self._point(y), self.Xbar, self.center.u, self.center.v, self.sigma, self.tau)

    def gradient(self, y: DenseVector) -> DenseVector:
        gu, gv = grad_psi(self.inst, self._point(y), self.Xbar, self.center.u, self.center.v, self.sigma, self.tau)
        return np.concatenate([gu, gv])

    def jacobian(self, y: DenseVector) -> QrotJacobian:
        return build_jacobian(self.inst, self._point(y), self.Xbar, self.sigma, self.tau)

    def jacobian_matvec(self, y: DenseVector, d: DenseVector) -> DenseVector:
        return self.jacobian(y).matvec(d)

    def newton_solve(self, y: DenseVector, g: DenseVector, tol: float) -> DenseVector:
        return newton_direction_qrot(self.jacobian(y), g, tol)


class QrotProblem(ProblemOracle):
    """QROT as seen from its dual: A X = (X 1, X^T 1), b = (alpha, beta)."""

    def __init__(self, inst: QrotInstance):
        logger.info(f"Initializing QROT problem with m={inst.m}, n={inst.n}, lam={inst.lam}")
        self.inst = inst
        self._b = np.concatenate([inst.alpha, inst.beta])

    @property
    def b(self) -> DenseVector:
        return self._b

    def apply_A(self, x: DenseMatrix) -> DenseVector:
        return np.concatenate(marginals(x))

    def apply_At(self, y: DenseVector) -> DenseMatrix:
        point = QrotDualPoint.split(y, self.inst.m)
        return broadcast_potentials(point.u, point.v)

    def prox_f(self, point: DenseMatrix, sigma: float) -> DenseMatrix:
        return prox_fq(point, sigma, self.inst)

    def subproblem(self, x_bar: DenseMatrix, y_bar: DenseVector, sigma: float, tau: float) -> QrotSubproblem:
        return QrotSubproblem(self.inst, x_bar, y_bar, sigma, tau)

    def split(self, y: DenseVector) -> QrotDualPoint:
        return QrotDualPoint.split(y, self.inst.m)
