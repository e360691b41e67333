"""Relative-type inexact proximal augmented Lagrangian outer loop.

Each outer step approximately minimizes the proximal augmented Lagrangian in the dual
variable ``y`` with the semismooth Newton subsolver and stops the inner loop as soon as
the acceptance rule holds. The default (relative) rule compares the subproblem error
``delta`` against the size of the step just taken, through an error variable ``w``.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..common.errors import (
    CriterionViolation,
    InnerBudgetExhausted,
    LinesearchFailed,
    MaxIterations,
    ParameterWarning,
    SubsolverStalled,
)
from ..common.models import CriterionKind, IterationRecord, MethodName, SolveReport, SolveStatus
from ..common.numerics import DenseVector
from ..common.utils import Stopwatch
from .oracle import ProblemOracle
from .ssn import SsnConfig, ssn_solve

logger = logging.getLogger(__name__)


class RipalmConfig(BaseModel):
    rho: float = Field(default=0.99, ge=0.0, lt=1.0)
    sigma0: float = Field(default=1.0, gt=0.0)
    sigma_base: float = Field(default=1.5, gt=0.0)
    sigma_min: float = Field(default=1e-4, gt=0.0)
    sigma_max: float = Field(default=1e4, gt=0.0)
    tau: float = Field(default=5.0, gt=0.0)
    tau_schedule: Optional[Callable[[int], float]] = Field(default=None, exclude=True)
    max_outer: int = Field(default=200, ge=0)
    tol: float = Field(default=1e-6, gt=0.0)
    criterion: CriterionKind = CriterionKind.RELATIVE
    # absolute rule: eps_k = eps0/(k+1)^p, delta_k = delta0/(k+1)^q
    eps0: float = Field(default=1.0, gt=0.0)
    delta0: float = Field(default=1.0, gt=0.0)
    p: float = Field(default=1.1, gt=1.0)
    q: float = Field(default=1.1, gt=1.0)

    @model_validator(mode="after")
    def check_parameters(self) -> "RipalmConfig":
        if self.sigma_min > self.sigma_max:
            raise ValueError(f"sigma_min {self.sigma_min} exceeds sigma_max {self.sigma_max}")
        tau_min = self.tau_min()
        if not tau_min > 0:
            raise ValueError("tau schedule must stay positive")
        if math.sqrt(tau_min) <= 2.0 * math.sqrt(self.rho):
            message = (
                f"sqrt(min tau)={math.sqrt(tau_min):.4f} <= 2*sqrt(rho)={2 * math.sqrt(self.rho):.4f}; "
                "linear convergence is not guaranteed"
            )
            logger.warning(message)
            warnings.warn(message, ParameterWarning, stacklevel=2)
        if self.criterion == CriterionKind.CORRECTED and self.rho >= 1.0 / 3.0:
            message = f"corrected acceptance rule with rho={self.rho} >= 1/3 has no rate guarantee"
            logger.warning(message)
            warnings.warn(message, ParameterWarning, stacklevel=2)
        return self

    def sigma_at(self, k: int) -> float:
        exponent = min(k * math.log(self.sigma_base), 700.0)
        return min(self.sigma_max, max(self.sigma_min, self.sigma0 * math.exp(exponent)))

    def tau_at(self, k: int) -> float:
        return float(self.tau_schedule(k)) if self.tau_schedule is not None else self.tau

    def tau_min(self) -> float:
        if self.tau_schedule is None:
            return self.tau
        return min(self.tau_at(k) for k in range(max(self.max_outer, 1)))


def default_schedules() -> RipalmConfig:
    """sigma_k = min(1e4, max(1e-4, 1.5^k)), tau_k = 5, rho = 0.99."""
    return RipalmConfig()


@dataclass
class RipalmState:
    y: DenseVector
    x: np.ndarray
    w: DenseVector
    k: int = 0
    delta: Optional[DenseVector] = None
    theta: Optional[DenseVector] = None
    xi: Optional[np.ndarray] = None
    sigma: float = float("nan")
    tau: float = float("nan")
    inner_iterations: int = 0
    criterion_lhs: float = 0.0
    criterion_rhs: float = 0.0

    @classmethod
    def initial(
        cls,
        oracle: ProblemOracle,
        y0: Optional[DenseVector] = None,
        x0: Optional[np.ndarray] = None,
        w0: Optional[DenseVector] = None,
    ) -> "RipalmState":
        y = np.zeros(oracle.dual_dim) if y0 is None else np.array(y0, dtype=np.float64)
        x = oracle.zero_primal() if x0 is None else np.array(x0, dtype=np.float64)
        w = np.zeros(oracle.dual_dim) if w0 is None else np.array(w0, dtype=np.float64)
        return cls(y=y, x=x, w=w)


@dataclass
class _Trial:
    delta: DenseVector
    x_next: np.ndarray
    lhs: float
    rhs: float
    accepted: bool = field(init=False)

    def __post_init__(self):
        self.accepted = self.lhs <= self.rhs


def aug_lag_gradient(oracle: ProblemOracle, y: DenseVector, x: np.ndarray, sigma: float) -> DenseVector:
    """A prox_{sigma f}(x + sigma A^T y) - b."""
    return oracle.apply_A(oracle.prox_f(x + sigma * oracle.apply_At(y), sigma)) - oracle.b


def criterion_lhs(w: DenseVector, y_next: DenseVector, delta: DenseVector, sigma: float) -> float:
    scaled = sigma * delta
    return 2.0 * abs(float(np.vdot(w - y_next, scaled))) + float(np.vdot(scaled, scaled))


def criterion_rhs(
    oracle: ProblemOracle,
    x_prev: np.ndarray,
    y_next: DenseVector,
    y_prev: DenseVector,
    sigma: float,
    tau: float,
    rho: float,
) -> float:
    x_next = oracle.prox_f(x_prev + sigma * oracle.apply_At(y_next), sigma)
    return _relative_rhs(x_next, x_prev, y_next, y_prev, tau, rho)


def _relative_rhs(x_next, x_prev, y_next, y_prev, tau: float, rho: float) -> float:
    dx = x_next - x_prev
    dy = y_next - y_prev
    return rho * (float(np.vdot(dx, dx)) + tau * float(np.vdot(dy, dy)))


def _evaluate(
    oracle: ProblemOracle,
    state: RipalmState,
    y: DenseVector,
    sigma: float,
    tau: float,
    cfg: RipalmConfig,
) -> _Trial:
    x_next = oracle.prox_f(state.x + sigma * oracle.apply_At(y), sigma)
    dy = y - state.y
    delta = oracle.apply_A(x_next) - oracle.b + (tau / sigma) * dy

    if cfg.criterion == CriterionKind.RELATIVE:
        lhs = criterion_lhs(state.w, y, delta, sigma)
        rhs = _relative_rhs(x_next, state.x, y, state.y, tau, cfg.rho)
    elif cfg.criterion == CriterionKind.ABSOLUTE:
        scale = min(math.sqrt(tau), 1.0) / sigma
        eps_k = cfg.eps0 / (state.k + 1) ** cfg.p
        delta_k = cfg.delta0 / (state.k + 1) ** cfg.q
        step = math.sqrt(_relative_rhs(x_next, state.x, y, state.y, tau, 1.0))
        lhs = float(np.linalg.norm(delta))
        rhs = scale * min(eps_k, delta_k * step)
    else:
        scaled = sigma * delta
        lhs = float(np.vdot(scaled, scaled))
        rhs = cfg.rho ** 2 * min(tau, 1.0) * _relative_rhs(x_next, state.x, y, state.y, tau, 1.0)
    return _Trial(delta=delta, x_next=x_next, lhs=lhs, rhs=rhs)


def ripalm_step(
    oracle: ProblemOracle,
    state: RipalmState,
    cfg: RipalmConfig,
    ssn_cfg: Optional[SsnConfig] = None,
) -> RipalmState:
    """
    One outer iteration: inexact subproblem solve, then the primal and error updates.

    Args:
        oracle: problem binding
        state: current outer iterate
        cfg: schedules and acceptance rule
        ssn_cfg: Newton subsolver settings

    Returns:
        The next outer iterate

    Raises:
        SubsolverStalled: if the Newton loop exhausts its budget
    """
    k = state.k
    sigma, tau = cfg.sigma_at(k), cfg.tau_at(k)
    sub = oracle.subproblem(state.x, state.y, sigma, tau)

    def accept(y: DenseVector) -> bool:
        return _evaluate(oracle, state, y, sigma, tau, cfg).accepted

    try:
        result = ssn_solve(sub, state.y, accept, ssn_cfg)
    except InnerBudgetExhausted as e:
        raise SubsolverStalled(f"outer iteration {k}: {e}") from e

    trial = _evaluate(oracle, state, result.y, sigma, tau, cfg)
    if not trial.accepted:
        raise CriterionViolation(f"outer iteration {k}: lhs {trial.lhs:.6e} > rhs {trial.rhs:.6e}")

    y_next = result.y
    if cfg.criterion == CriterionKind.CORRECTED:
        y_next = state.y - (sigma / tau) * (oracle.apply_A(trial.x_next) - oracle.b)

    return RipalmState(
        y=y_next,
        x=trial.x_next,
        w=state.w - sigma * trial.delta,
        k=k + 1,
        delta=trial.delta,
        theta=trial.delta - (tau / sigma) * (y_next - state.y),
        xi=(state.x - trial.x_next) / sigma,
        sigma=sigma,
        tau=tau,
        inner_iterations=result.iterations,
        criterion_lhs=trial.lhs,
        criterion_rhs=trial.rhs,
    )


def _record(state: RipalmState, residual: float) -> IterationRecord:
    return IterationRecord(
        k=state.k,
        sigma=state.sigma,
        tau=state.tau,
        inner_iterations=state.inner_iterations,
        criterion_lhs=state.criterion_lhs,
        criterion_rhs=state.criterion_rhs,
        residual=residual,
        y_norm=float(np.linalg.norm(state.y)),
        x_norm=float(np.linalg.norm(state.x)),
        w_norm=float(np.linalg.norm(state.w)),
        delta_norm=float(np.linalg.norm(state.delta)),
        theta_norm=float(np.linalg.norm(state.theta)),
        xi_norm=float(np.linalg.norm(state.xi)),
    )


def ripalm_solve(
    oracle: ProblemOracle,
    cfg: RipalmConfig,
    residual_fn: Callable[[RipalmState], float],
    init: Optional[Tuple[Optional[DenseVector], Optional[np.ndarray], Optional[DenseVector]]] = None,
    ssn_cfg: Optional[SsnConfig] = None,
    raise_on_max_iterations: bool = False,
) -> Tuple[RipalmState, SolveReport]:
    """
    Run outer iterations until ``residual_fn(state) < cfg.tol`` or ``cfg.max_outer``.

    Returns the final state when converged, otherwise the state with the smallest
    residual seen, together with the report.
    """
    watch = Stopwatch()
    state = RipalmState.initial(oracle, *(init or ()))
    residual = residual_fn(state)
    best_state, best_residual = state, residual
    records = []
    status = SolveStatus.MAX_ITERATIONS

    if residual < cfg.tol:
        status = SolveStatus.CONVERGED
    while status != SolveStatus.CONVERGED and state.k < cfg.max_outer:
        try:
            state = ripalm_step(oracle, state, cfg, ssn_cfg)
        except (SubsolverStalled, LinesearchFailed) as e:
            logger.warning(f"ripALM stalled: {e}")
            status = SolveStatus.STALLED
            break
        residual = residual_fn(state)
        records.append(_record(state, residual))
        logger.info(
            f"ripALM k={state.k} sigma={state.sigma:.3g} inner={state.inner_iterations} res={residual:.3e}"
        )
        if residual < best_residual:
            best_state, best_residual = state, residual
        if residual < cfg.tol:
            status = SolveStatus.CONVERGED

    final = state if status == SolveStatus.CONVERGED else best_state
    report = SolveReport(
        method=_method_for(cfg.criterion),
        status=status,
        records=records,
        outer_iterations=len(records),
        inner_iterations=sum(r.inner_iterations for r in records),
        residual=residual if status == SolveStatus.CONVERGED else best_residual,
        best_residual=best_residual,
        wall_time=watch.seconds,
        hyperparameters=cfg.model_dump(),
    )
    logger.info(
        f"ripALM finished with status {status.value} after {report.outer_iterations} outer / "
        f"{report.inner_iterations} inner iterations in {report.wall_time:.4f} seconds"
    )
    if status == SolveStatus.MAX_ITERATIONS and raise_on_max_iterations:
        raise MaxIterations(f"no convergence in {cfg.max_outer} outer iterations", state=final, report=report)
    return final, report


def _method_for(criterion: CriterionKind) -> MethodName:
    return {
        CriterionKind.RELATIVE: MethodName.RIPALM,
        CriterionKind.ABSOLUTE: MethodName.RIPALM_ABSOLUTE,
        CriterionKind.CORRECTED: MethodName.RIPALM_CORRECTED,
    }[criterion]
