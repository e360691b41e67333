import logging

import numpy as np
from scipy.spatial.distance import cdist

from ...common.errors import InputError, ZeroMass
from ...common.numerics import DenseMatrix, as_matrix
from .model import QrotInstance

logger = logging.getLogger(__name__)

MIXTURE_MEANS = np.array([-20.0, 10.0, 0.0, 10.0, 20.0])
MIXTURE_VARIANCE = 5.0
SUPPORT_DIM = 3


def _normalized_image(image, name: str, floor: float) -> np.ndarray:
    grid = as_matrix(image, name=name)
    if np.any(grid < 0):
        raise InputError(f"{name} has negative pixel values")
    grid = grid + floor
    total = grid.sum()
    if total <= 0:
        raise ZeroMass(f"{name} sums to zero")
    return (grid / total).ravel()


def pixel_coordinates(shape) -> np.ndarray:
    """Row-major (row, col) coordinates with unit spacing."""
    return np.indices(shape).reshape(2, -1).T.astype(np.float64)


def gen_image_instance(imageA: DenseMatrix, imageB: DenseMatrix, lam: float = 1.0, floor: float = 0.0) -> QrotInstance:
    """
    Transport instance between two grayscale images of equal resolution.

    Args:
        imageA, imageB: nonnegative pixel grids
        lam: quadratic regularization
        floor: constant added to every pixel before normalizing (zero pixels are
            otherwise rejected since marginals must be positive)

    Returns:
        Instance with normalized intensities as marginals and squared pixel distances as cost
    """
    gridA, gridB = np.asarray(imageA), np.asarray(imageB)
    if gridA.shape != gridB.shape:
        raise InputError(f"image resolutions differ: {gridA.shape} vs {gridB.shape}")
    alpha = _normalized_image(gridA, "imageA", floor)
    beta = _normalized_image(gridB, "imageB", floor)
    coords = pixel_coordinates(np.atleast_2d(gridA).shape)
    C = cdist(coords, coords, "sqeuclidean")
    logger.info(f"Generated image instance with {alpha.shape[0]} pixels")
    return QrotInstance(C=C, alpha=alpha, beta=beta, lam=lam)


def _random_weights(rng: np.random.Generator, count: int) -> np.ndarray:
    # 1 - U[0,1) lies in (0, 1]
    weights = 1.0 - rng.uniform(0.0, 1.0, count)
    return weights / weights.sum()


def _mixture_points(rng: np.random.Generator, count: int) -> np.ndarray:
    component_weights = _random_weights(rng, MIXTURE_MEANS.shape[0])
    components = rng.choice(MIXTURE_MEANS.shape[0], size=(count, SUPPORT_DIM), p=component_weights)
    noise = np.sqrt(MIXTURE_VARIANCE) * rng.standard_normal((count, SUPPORT_DIM))
    return MIXTURE_MEANS[components] + noise


def gen_gaussian_mixture_instance(m: int, n: int, seed: int, lam: float = 1.0) -> QrotInstance:
    """Random instance with Gaussian-mixture support points and cost scaled to max 1."""
    if m < 1 or n < 1:
        raise InputError(f"sizes must be positive, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    alpha = _random_weights(rng, m)
    beta = _random_weights(rng, n)
    p = _mixture_points(rng, m)
    q = _mixture_points(rng, n)
    C = cdist(p, q, "sqeuclidean")
    peak = C.max()
    if peak > 0:
        C = C / peak
    logger.info(f"Generated gaussian-mixture instance m={m}, n={n}, seed={seed}")
    return QrotInstance(C=C, alpha=alpha, beta=beta, lam=lam)
