"""Certificates recomputed from written solution arrays, apart from the solver's residual code.

The primal is rebuilt from the duals through the problem's prox map and every norm is
evaluated here, so a corrupted or hand-edited solution file cannot pass on the solver's word.
"""
import math
from typing import Dict, Union

import numpy as np

from ..common.errors import InputError
from ..common.models import Certificate, KktResiduals
from ..common.numerics import DenseMatrix, DenseVector
from ..problems.bpdn.model import BpdnInstance, proj_l2ball, prox_l1
from ..problems.qrot.model import QrotInstance, prox_fq


def _norm(a) -> float:
    flat = np.ravel(a)
    return math.sqrt(float(np.einsum("i,i->", flat, flat)))


def _relative(numerator: float, scale: float) -> float:
    return numerator / (1.0 + scale)


def certificate_qrot(inst: QrotInstance, u: DenseVector, v: DenseVector, X: DenseMatrix) -> Certificate:
    m, n = inst.m, inst.n
    if u.shape != (m,) or v.shape != (n,) or X.shape != (m, n):
        raise InputError(f"solution shapes {u.shape}, {v.shape}, {X.shape} do not fit a {m}x{n} instance")
    potentials = np.add.outer(u, v)
    slack = inst.C + inst.lam * X - potentials

    rows = X @ np.ones(n)
    cols = np.ones(m) @ X
    primal = max(
        _relative(_norm(rows - inst.alpha), _norm(inst.alpha)),
        _relative(_norm(cols - inst.beta), _norm(inst.beta)),
        _relative(_norm(np.minimum(X, 0.0)), _norm(X)),
    )
    norm_C = _norm(inst.C)
    dual = _relative(_norm(np.minimum(slack, 0.0)), norm_C)
    complementarity = _relative(abs(float(np.einsum("ij,ij->", X, slack))), norm_C)

    pobj = float(np.einsum("ij,ij->", inst.C, X)) + 0.5 * inst.lam * _norm(X) ** 2
    dobj = float(np.dot(inst.alpha, u)) + float(np.dot(inst.beta, v))
    if inst.lam > 0:
        # plan that minimises the Lagrangian at (u, v)
        X_dual = prox_fq(potentials, 1.0, inst) * ((1.0 + inst.lam) / inst.lam)
        dobj -= 0.5 * inst.lam * _norm(X_dual) ** 2
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

    reconstruction = _relative(_norm(X - prox_fq(X + potentials, 1.0, inst)), _norm(X))
    residuals = KktResiduals(
        primal=primal,
        dual=dual,
        complementarity=complementarity,
        gap=gap,
        res=max(primal, dual, complementarity, gap),
    )
    return Certificate(residuals=residuals, reconstruction=reconstruction)


def certificate_bpdn(inst: BpdnInstance, s: DenseVector, t: DenseVector, y: DenseVector) -> Certificate:
    if s.shape != (inst.n,) or t.shape != (inst.m,) or y.shape != (inst.m,):
        raise InputError(f"solution shapes {s.shape}, {t.shape}, {y.shape} do not fit a {inst.m}x{inst.n} instance")
    primal = _relative(_norm(inst.D @ s - inst.b - t), _norm(inst.b))

    s_rebuilt = prox_l1(s + y @ inst.D, 1.0)
    t_rebuilt = proj_l2ball(t - y, inst.kappa_hat)
    distance = math.hypot(_norm(s - s_rebuilt), _norm(t - t_rebuilt))
    dual = _relative(distance, _norm(inst.D))

    pobj = float(np.sum(np.abs(s)))
    dobj = float(np.dot(inst.b, y)) - inst.kappa_hat * _norm(y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

    reconstruction = _relative(distance, math.hypot(_norm(s), _norm(t)))
    residuals = KktResiduals(primal=primal, dual=dual, gap=gap, res=max(primal, dual, gap))
    return Certificate(residuals=residuals, reconstruction=reconstruction)


def certificate_for(
    inst: Union[QrotInstance, BpdnInstance],
    vectors: Dict[str, DenseVector],
    matrices: Dict[str, DenseMatrix],
) -> Certificate:
    try:
        if isinstance(inst, QrotInstance):
            return certificate_qrot(inst, vectors["u"], vectors["v"], matrices["X"])
        return certificate_bpdn(inst, vectors["s"], vectors["t"], vectors["y"])
    except KeyError as e:
        raise InputError(f"solution is missing array {e}") from e
