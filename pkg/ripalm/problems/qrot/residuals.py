"""KKT residuals and duality gap for QROT, computed from scratch for certification."""
import numpy as np

from ...common.models import KktResiduals
from ...common.numerics import DenseMatrix
from .model import QrotDualPoint, QrotInstance


def primal_objective(inst: QrotInstance, X: DenseMatrix) -> float:
    """<C, X> + lam/2 ||X||_F^2 (the nonnegativity indicator is measured separately)."""
    return float(np.sum(inst.C * X)) + 0.5 * inst.lam * float(np.sum(X * X))


def dual_objective(inst: QrotInstance, point: QrotDualPoint) -> float:
    """-f*(u 1^T + 1 v^T) + <alpha, u> + <beta, v>.

    For lam = 0 the conjugate is an indicator; its violation is reported by the dual
    residual, so only the linear part enters here.
    """
    linear = float(inst.alpha @ point.u) + float(inst.beta @ point.v)
    if inst.lam == 0:
        return linear
    excess = np.maximum(point.u[:, None] + point.v[None, :] - inst.C, 0.0)
    return linear - float(np.sum(excess * excess)) / (2.0 * inst.lam)


def ot_cost(inst: QrotInstance, X: DenseMatrix) -> float:
    return float(np.sum(inst.C * X))


def kkt_residuals_qrot(inst: QrotInstance, point: QrotDualPoint, X: DenseMatrix) -> KktResiduals:
    X = np.asarray(X, dtype=np.float64)
    u, v = point.u, point.v
    Z = inst.C + inst.lam * X - u[:, None] - v[None, :]
    norm_C = float(np.linalg.norm(inst.C))

    row_gap = np.linalg.norm(X.sum(axis=1) - inst.alpha) / (1.0 + np.linalg.norm(inst.alpha))
    col_gap = np.linalg.norm(X.sum(axis=0) - inst.beta) / (1.0 + np.linalg.norm(inst.beta))
    negativity = np.linalg.norm(np.minimum(X, 0.0)) / (1.0 + np.linalg.norm(X))
    primal = float(max(row_gap, col_gap, negativity))
    dual = float(np.linalg.norm(np.minimum(Z, 0.0))) / (1.0 + norm_C)
    complementarity = abs(float(np.sum(X * Z))) / (1.0 + norm_C)

    pobj = primal_objective(inst, X)
    dobj = dual_objective(inst, point)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

    return KktResiduals(
        primal=primal,
        dual=dual,
        complementarity=complementarity,
        gap=gap,
        res=max(primal, dual, complementarity, gap),
    )
