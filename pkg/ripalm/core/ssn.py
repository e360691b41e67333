import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..common.errors import InnerBudgetExhausted, LinesearchFailed
from ..common.numerics import DenseVector
from .oracle import SubproblemOracle

logger = logging.getLogger(__name__)

# Floor on the Newton-system tolerance for vanishing gradients
MIN_DIRECTION_TOL = 1e-14
MAX_BACKTRACKS = 60


class SsnConfig(BaseModel):
    mu_bar: float = Field(default=1e-3, gt=0.0, lt=1.0)
    mu: float = Field(default=0.2, gt=0.0, le=1.0)
    eta: float = Field(default=1e-4, gt=0.0, lt=0.5)
    delta_ls: float = Field(default=0.5, gt=0.0, lt=1.0)
    max_inner: int = Field(default=200, ge=0)


@dataclass
class SsnResult:
    y: DenseVector
    iterations: int
    grad_norm: float


def direction_tolerance(grad_norm: float, cfg: SsnConfig) -> float:
    return max(min(cfg.mu_bar, grad_norm ** (1.0 + cfg.mu)), MIN_DIRECTION_TOL)


def armijo_linesearch(
    oracle: SubproblemOracle,
    y: DenseVector,
    d: DenseVector,
    cfg: SsnConfig,
    g: Optional[DenseVector] = None,
    value_y: Optional[float] = None,
) -> float:
    """
    Backtracking step for the subproblem objective.

    Args:
        oracle: subproblem objective
        y: current point
        d: descent direction
        cfg: Armijo parameters (eta, delta_ls)
        g, value_y: gradient and value at ``y`` when already known

    Returns:
        alpha = delta_ls**i for the smallest i >= 0 meeting the sufficient decrease test
    """
    g = oracle.gradient(y) if g is None else g
    slope = float(np.dot(g, d))
    if not slope < 0:
        raise LinesearchFailed(f"direction is not a descent direction (slope {slope:.3e})")
    value_y = oracle.value(y) if value_y is None else value_y

    alpha = 1.0
    for _ in range(MAX_BACKTRACKS + 1):
        if oracle.value(y + alpha * d) - value_y <= cfg.eta * alpha * slope:
            return alpha
        alpha *= cfg.delta_ls
    raise LinesearchFailed(f"no sufficient decrease after {MAX_BACKTRACKS} backtracks")


def ssn_solve(
    oracle: SubproblemOracle,
    y0: DenseVector,
    accept: Callable[[DenseVector], bool],
    cfg: Optional[SsnConfig] = None,
) -> SsnResult:
    """
    Semismooth Newton iterations until ``accept`` holds.

    The callback is evaluated at the starting point and after every step.

    Raises:
        InnerBudgetExhausted: if ``cfg.max_inner`` steps pass without acceptance
        LinesearchFailed: if Armijo backtracking fails
    """
    cfg = cfg or SsnConfig()
    y = np.array(y0, dtype=np.float64)
    grad_norm = float("nan")

    for t in range(cfg.max_inner + 1):
        if accept(y):
            return SsnResult(y, t, grad_norm)
        if t == cfg.max_inner:
            break
        g = oracle.gradient(y)
        grad_norm = float(np.linalg.norm(g))
        if grad_norm == 0.0:
            raise InnerBudgetExhausted(f"zero gradient at step {t} but the point is not acceptable")
        tol = direction_tolerance(grad_norm, cfg)
        d = oracle.newton_solve(y, g, tol)
        alpha = armijo_linesearch(oracle, y, d, cfg, g=g)
        y = y + alpha * d
        logger.debug(f"SSN step {t + 1}: |g|={grad_norm:.3e}, tol={tol:.1e}, alpha={alpha:.3g}")

    raise InnerBudgetExhausted(f"no acceptable point after {cfg.max_inner} Newton steps")
