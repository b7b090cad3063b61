"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: domain/construction errors exit with 2,
convergence/accuracy/divergence/explosion/precision errors with 3, I/O with 4.
"""

from __future__ import annotations


class RoughMarkovError(Exception):
    """Base class for all library errors."""


class DomainError(RoughMarkovError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ConstructionError(DomainError):
    """A quadrature rule could not be built from the given parameters."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ConvergenceError(RoughMarkovError, RuntimeError):
    """An iterative procedure failed to make progress or terminate."""


class AccuracyError(ConvergenceError):
    """Requested tolerance not reached within the refinement budget.

    Carries the best available estimate so callers can still use it.
    """

    def __init__(self, message: str, best=None, attained: float | None = None):
        super().__init__(message)
        self.best = best
        self.attained = attained


class DivergenceError(RoughMarkovError, ArithmeticError):
    """A Riccati solution left the numerically representable range."""


class ExplosionError(RoughMarkovError):
    """The growth ODE explodes before the requested time."""

    def __init__(self, message: str, explosion_time: float):
        super().__init__(message)
        self.explosion_time = explosion_time


class PrecisionError(RoughMarkovError):
    """Extended-precision computation failed to deliver valid output."""
