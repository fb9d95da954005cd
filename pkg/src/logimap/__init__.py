"""Logistic map asymptotics.

Iteration of x -> r x (1 - x) (and its Verhulst form) with verified bounds
for the marginal case r = 1, the contractive regime 0 < r < 1, the
super-attractive case r = 2, and the continuum flows that mirror them.
"""

from __future__ import annotations

from .errors import (
    BlowUpError,
    BoundViolation,
    DomainError,
    InsufficientPrecisionError,
    LogimapError,
    ResourceCapError,
    StepSizeCollapseError,
)
from .extended import ExtendedReal
from .mapcore import (
    ConvergenceReport,
    Form,
    MapParams,
    Trajectory,
    empirical_convergence,
    fixed_points,
    iterate,
    step,
)
from .precision import DEFAULT_POLICY, Mode, PrecisionPolicy, Summation, policy_from_env

__all__ = [
    "BlowUpError",
    "BoundViolation",
    "ConvergenceReport",
    "DEFAULT_POLICY",
    "DomainError",
    "ExtendedReal",
    "Form",
    "InsufficientPrecisionError",
    "LogimapError",
    "MapParams",
    "Mode",
    "PrecisionPolicy",
    "ResourceCapError",
    "StepSizeCollapseError",
    "Summation",
    "Trajectory",
    "empirical_convergence",
    "fixed_points",
    "iterate",
    "policy_from_env",
    "step",
]
