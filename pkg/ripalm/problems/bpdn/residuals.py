"""KKT residuals for BPDN and the reference-based feasibility/objective measures."""
from typing import Tuple

import numpy as np

from ...common.models import KktResiduals
from ...common.numerics import DenseVector
from .model import BpdnInstance, BpdnPrimalPoint


def _soft_threshold(u: DenseVector, level: float) -> DenseVector:
    return np.sign(u) * np.maximum(np.abs(u) - level, 0.0)


def _ball_projection(v: DenseVector, radius: float) -> DenseVector:
    norm = np.linalg.norm(v)
    return v if norm <= radius else v * (radius / norm)


def kkt_residuals_bpdn(inst: BpdnInstance, point: BpdnPrimalPoint, y: DenseVector) -> KktResiduals:
    s, t = point.s, point.t
    primal = float(np.linalg.norm(inst.D @ s - inst.b - t)) / (1.0 + float(np.linalg.norm(inst.b)))

    s_gap = s - _soft_threshold(s + inst.D.T @ y, 1.0)
    t_gap = t - _ball_projection(t - y, inst.kappa_hat)
    dual = float(np.sqrt(s_gap @ s_gap + t_gap @ t_gap)) / (1.0 + float(np.linalg.norm(inst.D)))

    pobj = float(np.abs(s).sum())
    dobj = -inst.kappa_hat * float(np.linalg.norm(y)) + float(inst.b @ y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

    return KktResiduals(primal=primal, dual=dual, gap=gap, res=max(primal, dual, gap))


def feas_nobj(inst: BpdnInstance, s: DenseVector, s_ref: DenseVector) -> Tuple[float, float]:
    """Relative feasibility violation and objective gap to a reference solution."""
    violation = max(float(np.linalg.norm(inst.D @ s - inst.b)) - inst.kappa_hat, 0.0)
    feas = violation / (1.0 + float(np.linalg.norm(inst.b)))
    ref = float(np.abs(s_ref).sum())
    nobj = abs(float(np.abs(s).sum()) - ref) / (1.0 + ref)
    return feas, nobj
