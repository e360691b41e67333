"""Dense kernels and the two SPD solve strategies used by every Newton solve.

Vectors are 1-d float64 numpy arrays. Matrices are 2-d float64 arrays; on disk they
are stored in row-major order (see ``ripalm.common.store``).
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import Breakdown, InputError, NotSpd

logger = logging.getLogger(__name__)

DenseVector = NDArray[np.float64]
DenseMatrix = NDArray[np.float64]
Operator = Callable[[DenseVector], DenseVector]

# Systems up to this dimension are factorized, larger ones go to PCG.
DIRECT_SOLVE_MAX_DIM = 2000
SYMMETRY_RTOL = 1e-12


def as_vector(data, name: str = "vector") -> DenseVector:
    """Copy ``data`` into a finite float64 vector."""
    vec = np.array(data, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(vec)):
        raise InputError(f"{name} has non-finite entries")
    return vec


def as_matrix(data, name: str = "matrix") -> DenseMatrix:
    """Copy ``data`` into a finite, C-ordered float64 matrix."""
    mat = np.array(data, dtype=np.float64, order="C", ndmin=2)
    if mat.ndim != 2:
        raise InputError(f"{name} must be two-dimensional, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise InputError(f"{name} has non-finite entries")
    return mat


class CholeskySolver:
    """Cached Cholesky factorization of an SPD matrix."""

    def __init__(self, A: DenseMatrix):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise NotSpd(f"matrix of shape {A.shape} is not square")
        scale = max(np.abs(A).max(initial=0.0), 1.0)
        if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
            raise NotSpd("matrix is not symmetric")
        try:
            self._factor = cho_factor(A, lower=True, check_finite=False)
        except LinAlgError as e:
            raise NotSpd(f"Cholesky factorization failed: {e}") from e
        if np.any(np.diag(self._factor[0]) <= 0):
            raise NotSpd("nonpositive pivot in Cholesky factor")
        self.dim = A.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self._factor, rhs, check_finite=False)


def cholesky_solve(A: DenseMatrix, rhs: DenseVector) -> DenseVector:
    """Solve ``A d = rhs`` for symmetric positive definite ``A``.

    Raises:
        NotSpd: if ``A`` is not symmetric or a pivot is nonpositive.
    """
    return CholeskySolver(A).solve(np.asarray(rhs, dtype=np.float64))


@dataclass
class PcgResult:
    x: DenseVector
    iterations: int
    residual: float
    converged: bool


def pcg_solve(
    matvec: Operator,
    rhs: DenseVector,
    tol: float,
    maxit: int,
    precond: Optional[Operator] = None,
    x0: Optional[DenseVector] = None,
) -> PcgResult:
    """Preconditioned conjugate gradient for an SPD operator.

    Stops when ``||matvec(x) - rhs|| <= tol`` (absolute). At ``maxit`` the iterate
    with the smallest residual seen is returned with ``converged=False``.

    Raises:
        Breakdown: if a search direction has nonpositive curvature.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64)
    r = rhs - matvec(x) if x0 is not None else rhs.copy()
    res = float(np.linalg.norm(r))
    best_x, best_res = x.copy(), res
    if res <= tol:
        return PcgResult(x, 0, res, True)

    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = float(np.dot(r, z))

    for it in range(1, maxit + 1):
        Ap = matvec(p)
        curvature = float(np.dot(p, Ap))
        if curvature <= 0:
            raise Breakdown(f"nonpositive curvature {curvature:.3e} at PCG iteration {it}")
        step = rz / curvature
        x = x + step * p
        r = r - step * Ap
        res = float(np.linalg.norm(r))
        if res < best_res:
            best_x, best_res = x.copy(), res
        if res <= tol:
            return PcgResult(x, it, res, True)
        z = precond(r) if precond is not None else r
        rz_next = float(np.dot(r, z))
        p = z + (rz_next / rz) * p
        rz = rz_next

    logger.debug(f"PCG hit maxit={maxit} with residual {best_res:.3e} (tol {tol:.3e})")
    return PcgResult(best_x, maxit, best_res, False)


def diagonal_preconditioner(diag: DenseVector) -> Operator:
    inv = 1.0 / np.asarray(diag, dtype=np.float64)
    return lambda r: inv * r


def spd_solve(
    rhs: DenseVector,
    matvec: Operator,
    dense: Optional[Callable[[], DenseMatrix]] = None,
    diag: Optional[DenseVector] = None,
    tol: float = 1e-10,
    maxit: Optional[int] = None,
) -> DenseVector:
    """Solve an SPD system by factorization when small, PCG otherwise.

    ``dense`` builds the explicit matrix and is only called on the direct path.
    ``diag`` is the operator diagonal, used as the PCG preconditioner.
    """
    dim = rhs.shape[0]
    if dense is not None and dim <= DIRECT_SOLVE_MAX_DIM:
        d = cholesky_solve(dense(), rhs)
        res = float(np.linalg.norm(matvec(d) - rhs))
        if res <= tol:
            return d
        logger.debug(f"direct solve residual {res:.3e} above {tol:.3e}; refining with PCG")
        x0 = d
    else:
        x0 = None
    precond = diagonal_preconditioner(diag) if diag is not None else None
    result = pcg_solve(matvec, rhs, tol, maxit or 10 * dim, precond=precond, x0=x0)
    if not result.converged:
        logger.warning(f"PCG stopped at residual {result.residual:.3e} above tol {tol:.3e} after {result.iterations} iterations")
    return result.x


def check_spd(matvec: Operator, dim: int, rng: np.random.Generator, trials: int = 10) -> bool:
    """Probabilistic SPD test: <d, matvec(d)> > 0 on random directions."""
    for _ in range(trials):
        d = rng.standard_normal(dim)
        if float(np.dot(d, matvec(d))) <= 0:
            return False
    return True
