"""Exception hierarchy shared by every logimap module."""

from __future__ import annotations


class LogimapError(Exception):
    """Base class for all logimap errors."""


class DomainError(LogimapError, ValueError):
    """An argument lies outside the domain on which an operation is defined."""


class ResourceCapError(LogimapError):
    """A request exceeds a configured resource cap (iteration count, memory)."""


class InsufficientPrecisionError(LogimapError):
    """The requested working precision cannot resolve the quantity asked for."""

    def __init__(self, message: str, required_bits: int):
        super().__init__(message)
        self.required_bits = required_bits


class BlowUpError(DomainError):
    """Evaluation at or past a finite-time singularity."""

    def __init__(self, message: str, t_star: float):
        super().__init__(message)
        self.t_star = t_star


class StepSizeCollapseError(LogimapError):
    """The adaptive integrator could not advance; carries the last good state."""

    def __init__(self, message: str, t: float, value: float):
        super().__init__(message)
        self.t = t
        self.value = value


class BoundViolation(LogimapError, AssertionError):
    """A verified inequality failed beyond its rounding slack."""
