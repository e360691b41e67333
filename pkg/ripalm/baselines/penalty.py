import logging
from typing import Optional

from pydantic import BaseModel, Field, field_validator

logger = logging.getLogger(__name__)

GOLDEN_RATIO = (1.0 + 5.0 ** 0.5) / 2.0


class AdmmConfig(BaseModel):
    sigma0: Optional[float] = Field(default=None, gt=0.0)
    tau_admm: float = Field(default=1.618, gt=0.0)
    adapt: bool = True
    ratio: float = Field(default=10.0, gt=1.0)
    factor: float = Field(default=2.0, gt=1.0)
    adapt_every: int = Field(default=20, ge=1)
    sigma_min: float = 1e-8
    sigma_max: float = 1e8
    max_iter: int = Field(default=10000, ge=0)
    tol: float = Field(default=1e-6, gt=0.0)

    @field_validator("tau_admm")
    @classmethod
    def below_golden_ratio(cls, value: float) -> float:
        if value >= GOLDEN_RATIO:
            raise ValueError(f"ADMM step {value} must be below {GOLDEN_RATIO:.6f}")
        return value


def adapt_penalty(primal_res: float, dual_res: float, sigma: float, cfg: AdmmConfig) -> float:
    """Residual balancing: grow sigma when the primal residual dominates, shrink it otherwise.

    Multipliers are kept unscaled, so no rescaling is needed after a change.
    """
    if dual_res > 0:
        ratio = primal_res / dual_res
    else:
        ratio = float("inf") if primal_res > 0 else 1.0
    if ratio > cfg.ratio:
        sigma *= cfg.factor
    elif ratio < 1.0 / cfg.ratio:
        sigma /= cfg.factor
    return min(cfg.sigma_max, max(cfg.sigma_min, sigma))
