"""ADMM on the dual of QROT with the splitting W = u 1^T + 1 v^T."""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from ..common.models import IterationRecord, MethodName, ProblemKind, SolveReport, SolveStatus
from ..common.numerics import DenseMatrix, DenseVector
from ..common.utils import Stopwatch
from ..problems.qrot.model import QrotDualPoint, QrotInstance
from ..problems.qrot.residuals import kkt_residuals_qrot
from .penalty import AdmmConfig, adapt_penalty

logger = logging.getLogger(__name__)


@dataclass
class QrotAdmmState:
    u: DenseVector
    v: DenseVector
    W: DenseMatrix
    X: DenseMatrix
    sigma: float

    @classmethod
    def initial(cls, inst: QrotInstance, sigma: float) -> "QrotAdmmState":
        return cls(
            u=np.zeros(inst.m),
            v=np.zeros(inst.n),
            W=np.zeros((inst.m, inst.n)),
            X=np.zeros((inst.m, inst.n)),
            sigma=sigma,
        )


def default_sigma(inst: QrotInstance) -> float:
    return 0.01 / max(float(np.linalg.norm(inst.C)), np.finfo(float).tiny)


def potentials_update(inst: QrotInstance, S: DenseMatrix, sigma: float) -> Tuple[DenseVector, DenseVector]:
    """Minimizer in (u, v) of the augmented Lagrangian; the free shift is fixed to 0."""
    m, n = inst.m, inst.n
    u = (inst.alpha / sigma + S.sum(axis=1)) / n
    v = (inst.beta / sigma + S.sum(axis=0)) / m - u.sum() / m
    return u, v


def dadmm_qrot_step(inst: QrotInstance, state: QrotAdmmState, cfg: AdmmConfig) -> QrotAdmmState:
    sigma = state.sigma
    S = state.W - state.X / sigma
    u, v = potentials_update(inst, S, sigma)
    UV = u[:, None] + v[None, :]
    Q = UV + state.X / sigma
    W = Q - np.maximum(Q - inst.C, 0.0) / (1.0 + inst.lam * sigma)
    X = state.X + cfg.tau_admm * sigma * (UV - W)
    return QrotAdmmState(u=u, v=v, W=W, X=X, sigma=sigma)


def dadmm_qrot_solve(
    inst: QrotInstance,
    cfg: Optional[AdmmConfig] = None,
    state: Optional[QrotAdmmState] = None,
) -> Tuple[QrotAdmmState, SolveReport]:
    """Run dADMM until the KKT residual drops below ``cfg.tol`` or ``cfg.max_iter``."""
    cfg = cfg or AdmmConfig()
    watch = Stopwatch()
    state = state or QrotAdmmState.initial(inst, cfg.sigma0 or default_sigma(inst))
    logger.info(f"Starting QROT dADMM with sigma0={state.sigma:.3e}, max_iter={cfg.max_iter}")

    records = []
    status = SolveStatus.MAX_ITERATIONS
    residual = kkt_residuals_qrot(inst, QrotDualPoint(state.u, state.v), state.X).res
    for it in range(1, cfg.max_iter + 1):
        previous = state
        state = dadmm_qrot_step(inst, state, cfg)
        residual = kkt_residuals_qrot(inst, QrotDualPoint(state.u, state.v), state.X).res
        records.append(IterationRecord(k=it, sigma=state.sigma, tau=cfg.tau_admm, residual=residual))
        if residual < cfg.tol:
            status = SolveStatus.CONVERGED
            break
        if cfg.adapt and it % cfg.adapt_every == 0:
            primal = float(np.linalg.norm(state.u[:, None] + state.v[None, :] - state.W))
            dW = state.W - previous.W
            dual = state.sigma * float(np.sqrt(np.sum(dW.sum(axis=1) ** 2) + np.sum(dW.sum(axis=0) ** 2)))
            state = replace(state, sigma=adapt_penalty(primal, dual, state.sigma, cfg))

    report = SolveReport(
        method=MethodName.DADMM,
        problem=ProblemKind.QROT,
        status=status,
        records=records,
        outer_iterations=len(records),
        residual=residual,
        best_residual=min([residual] + [r.residual for r in records]),
        wall_time=watch.seconds,
        hyperparameters=cfg.model_dump(),
    )
    logger.info(f"QROT dADMM {status.value} after {len(records)} iterations, res={residual:.3e}")
    return state, report
