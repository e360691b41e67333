from typing import Any, Optional


class RipalmError(Exception):
    """Base class for all errors raised by the toolkit."""


class InputError(RipalmError):
    """Invalid instance data, configuration or generator spec."""


class ZeroMass(InputError):
    """A marginal or image carries no mass."""


class IoError(InputError):
    """A file could not be read or written."""


class NumericalError(RipalmError):
    """A numerical kernel detected a condition it cannot recover from."""


class NotSpd(NumericalError):
    """Cholesky factorization hit a nonpositive pivot."""


class Breakdown(NumericalError):
    """Conjugate gradient found a direction with <p, Ap> <= 0."""


class Underflow(NumericalError):
    """The Gibbs kernel of the Sinkhorn sweep rounded to zero."""


class LinesearchFailed(NumericalError):
    """Armijo backtracking exceeded its step budget."""


class InnerBudgetExhausted(RipalmError):
    """The semismooth Newton loop ran out of iterations."""


class SubsolverStalled(RipalmError):
    """An outer step could not produce an acceptable dual point."""


class CriterionViolation(RipalmError):
    """An accepted outer iterate fails the acceptance inequality it was accepted by."""


class MaxIterations(RipalmError):
    """A solve hit its outer iteration cap before reaching the tolerance."""

    def __init__(self, message: str, state: Optional[Any] = None, report: Optional[Any] = None):
        super().__init__(message)
        self.state = state
        self.report = report


class ParameterWarning(UserWarning):
    """Parameters outside the range where convergence guarantees hold."""
