"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FracBamError(Exception):
    """Base class for all package errors."""


class DomainError(FracBamError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class AccuracyError(FracBamError):
    """The requested point cannot be evaluated to the advertised accuracy."""


class QuadratureError(FracBamError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class DivergenceError(FracBamError):
    """A kernel mass or tail could not be shown to be finite."""


class MetadataError(FracBamError):
    """An activation lacks metadata (bound or Lipschitz constant) an operation needs."""


class NonContractionError(FracBamError):
    """A fixed-point iteration stopped contracting."""


class MaxIterationError(FracBamError):
    """A fixed-point iteration exhausted its iteration budget."""


class BlowUpError(FracBamError):
    """A simulated state left the admissible magnitude range."""


class ConfigError(FracBamError, ValueError):
    """A solver or experiment configuration is invalid."""


class EquilibriumMissingError(FracBamError):
    """An operation requiring an equilibrium was called without one."""


class EnvelopeViolationError(FracBamError):
    """A simulated trajectory violated a claimed decay envelope.

    Attributes
    ----------
    index : int
        Grid index of the first offending point.
    time : float
        Time of the first offending point.
    """

    def __init__(self, message: str, index: int, time: float) -> None:
        super().__init__(message)
        self.index = index
        self.time = time
