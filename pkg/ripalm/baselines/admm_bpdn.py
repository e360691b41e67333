"""ADMM on the dual of BPDN with splittings u = D^T y and v = -y."""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from ..common.models import IterationRecord, MethodName, ProblemKind, SolveReport, SolveStatus
from ..common.numerics import CholeskySolver, DenseVector
from ..common.utils import Stopwatch
from ..problems.bpdn.model import BpdnInstance, BpdnPrimalPoint, proj_l2ball
from ..problems.bpdn.residuals import kkt_residuals_bpdn
from .penalty import AdmmConfig, adapt_penalty

logger = logging.getLogger(__name__)

DEFAULT_SIGMA = 1.0


@dataclass
class BpdnAdmmState:
    u: DenseVector
    v: DenseVector
    y: DenseVector
    s: DenseVector
    t: DenseVector
    sigma: float

    @classmethod
    def initial(cls, inst: BpdnInstance, sigma: float) -> "BpdnAdmmState":
        m, n = inst.m, inst.n
        return cls(u=np.zeros(n), v=np.zeros(m), y=np.zeros(m), s=np.zeros(n), t=np.zeros(m), sigma=sigma)


def normal_factorization(inst: BpdnInstance) -> CholeskySolver:
    """Cholesky factor of D D^T + I; it does not depend on sigma."""
    return CholeskySolver(inst.D @ inst.D.T + np.eye(inst.m))


def dual_rhs(inst: BpdnInstance, state: BpdnAdmmState, u: DenseVector, v: DenseVector) -> DenseVector:
    sigma = state.sigma
    return (inst.b - inst.D @ (state.s - sigma * u) + (state.t - sigma * v)) / sigma


def dadmm_bpdn_step(
    inst: BpdnInstance,
    state: BpdnAdmmState,
    cfg: AdmmConfig,
    factor: CholeskySolver,
) -> BpdnAdmmState:
    sigma = state.sigma
    u = np.clip(inst.D.T @ state.y + state.s / sigma, -1.0, 1.0)
    shifted = state.t - sigma * state.y
    v = (shifted - proj_l2ball(shifted, inst.kappa_hat)) / sigma
    y = factor.solve(dual_rhs(inst, state, u, v))
    s = state.s + cfg.tau_admm * sigma * (inst.D.T @ y - u)
    t = state.t + cfg.tau_admm * sigma * (-y - v)
    return BpdnAdmmState(u=u, v=v, y=y, s=s, t=t, sigma=sigma)


def dadmm_bpdn_solve(
    inst: BpdnInstance,
    cfg: Optional[AdmmConfig] = None,
    state: Optional[BpdnAdmmState] = None,
    factor: Optional[CholeskySolver] = None,
) -> Tuple[BpdnAdmmState, SolveReport]:
    cfg = cfg or AdmmConfig()
    watch = Stopwatch()
    factor = factor or normal_factorization(inst)
    state = state or BpdnAdmmState.initial(inst, cfg.sigma0 or DEFAULT_SIGMA)
    logger.info(f"Starting BPDN dADMM with sigma={state.sigma:.3e}, max_iter={cfg.max_iter}")

    records = []
    status = SolveStatus.MAX_ITERATIONS
    residual = kkt_residuals_bpdn(inst, BpdnPrimalPoint(state.s, state.t), state.y).res
    for it in range(1, cfg.max_iter + 1):
        previous = state
        state = dadmm_bpdn_step(inst, state, cfg, factor)
        residual = kkt_residuals_bpdn(inst, BpdnPrimalPoint(state.s, state.t), state.y).res
        records.append(IterationRecord(k=it, sigma=state.sigma, tau=cfg.tau_admm, residual=residual))
        if residual < cfg.tol:
            status = SolveStatus.CONVERGED
            break
        if cfg.adapt and it % cfg.adapt_every == 0:
            primal = float(np.sqrt(np.sum((inst.D.T @ state.y - state.u) ** 2) + np.sum((state.y + state.v) ** 2)))
            dy = state.y - previous.y
            dual = state.sigma * float(np.sqrt(np.sum((inst.D.T @ dy) ** 2) + np.sum(dy ** 2)))
            state = replace(state, sigma=adapt_penalty(primal, dual, state.sigma, cfg))

    report = SolveReport(
        method=MethodName.DADMM,
        problem=ProblemKind.BPDN,
        status=status,
        records=records,
        outer_iterations=len(records),
        residual=residual,
        best_residual=min([residual] + [r.residual for r in records]),
        wall_time=watch.seconds,
        hyperparameters=cfg.model_dump(),
    )
    logger.info(f"BPDN dADMM {status.value} after {len(records)} iterations, res={residual:.3e}")
    return state, report
