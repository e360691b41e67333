"""Interfaces between the outer loop, the Newton subsolver and a problem binding.

A problem is handled through its dual ``min_y f*(A^T y) - <b, y>``. The outer loop
only needs ``A``, ``A^T``, ``prox_{sigma f}`` and ``b``; the Newton subsolver needs a
value/gradient/Newton-direction triple for each proximal subproblem.
"""
from abc import ABC, abstractmethod

import numpy as np

from ..common.numerics import DenseVector


class SubproblemOracle(ABC):
    """Smooth strongly convex subproblem objective in the dual variable."""

    @abstractmethod
    def value(self, y: DenseVector) -> float:
        ...

    @abstractmethod
    def gradient(self, y: DenseVector) -> DenseVector:
        ...

    @abstractmethod
    def newton_solve(self, y: DenseVector, g: DenseVector, tol: float) -> DenseVector:
        """Direction d with ||H d + g|| <= tol for an element H of the generalized Jacobian."""

    def jacobian_matvec(self, y: DenseVector, d: DenseVector) -> DenseVector:
        """H d for the Jacobian element ``newton_solve`` uses at ``y``."""
        raise NotImplementedError


class ProblemOracle(ABC):
    """Data of ``min f(x) s.t. A x = b`` as seen from its dual."""

    @property
    @abstractmethod
    def b(self) -> DenseVector:
        ...

    @abstractmethod
    def apply_A(self, x: np.ndarray) -> DenseVector:
        ...

    @abstractmethod
    def apply_At(self, y: DenseVector) -> np.ndarray:
        ...

    @abstractmethod
    def prox_f(self, point: np.ndarray, sigma: float) -> np.ndarray:
        ...

    @abstractmethod
    def subproblem(self, x_bar: np.ndarray, y_bar: DenseVector, sigma: float, tau: float) -> SubproblemOracle:
        """Proximal augmented Lagrangian subproblem centred at (y_bar, x_bar)."""

    @property
    def dual_dim(self) -> int:
        return self.b.shape[0]

    def zero_primal(self) -> np.ndarray:
        return np.zeros_like(self.apply_At(np.zeros(self.dual_dim)))
