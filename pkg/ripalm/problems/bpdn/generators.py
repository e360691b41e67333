import logging
from typing import Tuple

import numpy as np

from ...common.errors import InputError
from ...common.numerics import DenseMatrix, DenseVector
from .model import BpdnInstance

logger = logging.getLogger(__name__)


def gen_synthetic_bpdn(m: int, n: int, s_count: int, delta: float, seed: int) -> Tuple[BpdnInstance, DenseVector]:
    """
    Gaussian dictionary with an s-sparse Gaussian signal and noisy measurements.

    Returns:
        The instance with kappa_hat = delta ||zeta|| and the true signal
    """
    if m < 1 or n < 1:
        raise InputError(f"sizes must be positive, got m={m}, n={n}")
    if not 0 <= s_count <= n:
        raise InputError(f"sparsity {s_count} outside [0, {n}]")
    if delta < 0:
        raise InputError(f"noise level must be nonnegative, got {delta}")
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((m, n))
    signal = np.zeros(n)
    support = rng.choice(n, size=s_count, replace=False)
    signal[support] = rng.standard_normal(s_count)
    zeta = rng.standard_normal(m)
    b = D @ signal + delta * zeta
    inst = BpdnInstance(D=D, b=b, kappa_hat=delta * float(np.linalg.norm(zeta)))
    logger.info(f"Generated synthetic BPDN instance m={m}, n={n}, s={s_count}, delta={delta}, seed={seed}")
    return inst, signal


def bpdn_from_dataset(D: DenseMatrix, b: DenseVector, delta: float) -> BpdnInstance:
    """Instance from ingested data with noise bound kappa_hat = delta ||b||."""
    if delta < 0:
        raise InputError(f"noise level must be nonnegative, got {delta}")
    b = np.asarray(b, dtype=np.float64)
    return BpdnInstance(D=D, b=b, kappa_hat=delta * float(np.linalg.norm(b)))
