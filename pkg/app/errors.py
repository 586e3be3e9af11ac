"""
Error types for Triwell.

Every error carries the process exit code the CLI reports for it.
"""
from typing import Optional


class TriwellError(Exception):
    """Base class for all simulator errors."""

    exit_code: int = 1


class ConfigError(TriwellError):
    """Run file could not be parsed or failed a range check."""

    exit_code = 2


class ConvergenceError(TriwellError):
    """An iteration did not reach its tolerance."""

    exit_code = 3

    def __init__(self, message: str, residual: float, t: Optional[float] = None):
        if t is not None:
            message = f"{message} (tJ = {t:.6g})"
        super().__init__(f"{message}; residual = {residual:.3e}")
        self.residual = residual
        self.t = t


class DomainError(TriwellError):
    """A value left the domain of a physical formula (band edge, beta*omega <= 0)."""

    exit_code = 4

    def __init__(self, message: str, t: Optional[float] = None):
        if t is not None:
            message = f"{message} (tJ = {t:.6g})"
        super().__init__(message)
        self.t = t


class InitializationError(DomainError):
    """No in-band equilibrium exists for the requested parameters."""


class ContractViolationError(TriwellError):
    """A caller broke a precondition (non-Hermitian input, dt <= 0, ...)."""


class DegeneracyError(TriwellError):
    """Singular or degenerate input where a unique answer is required."""


class AccuracyError(TriwellError):
    """Quadrature budget too small for the requested regulator."""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message}; estimated relative error = {estimate:.3e}")
        self.estimate = estimate


class MissingOutputError(TriwellError):
    """A plot script was requested for a CSV that is not there."""
