"""The logistic map, its parameter domains and raw trajectory generation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from . import _kernels
from .errors import DomainError, ResourceCapError
from .precision import DEFAULT_POLICY, PrecisionPolicy

__all__ = [
    "Form",
    "MapParams",
    "Trajectory",
    "ConvergenceReport",
    "MAX_ITERATIONS",
    "step",
    "iterate",
    "fixed_points",
    "empirical_convergence",
]

#: Default hard cap on the number of iterations a single call may request.
MAX_ITERATIONS = 10**8


class Form(enum.Enum):
    X = "x"  # x -> r x (1 - x)
    VERHULST = "verhulst"  # lambda -> r lambda (1 - beta lambda)


@dataclass(frozen=True)
class MapParams:
    r: float
    beta: float = 1.0
    form: Form = Form.X

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise DomainError(f"r must be a positive real, got {self.r!r}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"beta must be a positive real, got {self.beta!r}")
        if self.form is Form.X and self.beta != 1.0:
            raise DomainError("the x-form has beta = 1; use Form.VERHULST for other beta")

    @classmethod
    def x_form(cls, r: float) -> "MapParams":
        return cls(r, 1.0, Form.X)

    @classmethod
    def verhulst(cls, r: float, beta: float) -> "MapParams":
        return cls(r, beta, Form.VERHULST)

    @property
    def upper_state(self) -> float:
        """Right end 1/beta of the invariant interval [0, 1/beta]."""
        return 1.0 / self.beta


def step(params: MapParams, x, precision: PrecisionPolicy | None = None):
    """One application of the map.

    Evaluated as ``t = 1 - beta*x`` then ``(r*x)*t``. ``x`` may be a float or
    a ``gmpy2.mpfr``; with a BigFloat ``precision`` the arithmetic runs at that
    precision.
    """
    if precision is not None and precision.is_bigfloat:
        with precision.context():
            x = gmpy2.mpfr(x)
            r, beta = gmpy2.mpfr(params.r), gmpy2.mpfr(params.beta)
            t = 1 - beta * x
            return r * x * t
    t = 1.0 - params.beta * x
    return params.r * x * t


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A finite orbit ``values[0] = x0, values[k+1] = step(values[k])``.

    ``values`` is a read-only float64 array in double modes and an object
    array of ``gmpy2.mpfr`` in BigFloat mode.
    """

    params: MapParams
    x0: float
    values: np.ndarray
    precision: PrecisionPolicy

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def as_float(self) -> np.ndarray:
        if self.precision.is_bigfloat:
            return np.array([float(v) for v in self.values])
        return self.values


def iterate(
    params: MapParams,
    x0: float,
    n: int,
    precision: PrecisionPolicy = DEFAULT_POLICY,
    max_iterations: int = MAX_ITERATIONS,
) -> Trajectory:
    """Iterate the map ``n`` times from ``x0``."""
    if int(n) != n or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n!r}")
    n = int(n)
    if n > max_iterations:
        raise ResourceCapError(f"n = {n} exceeds the iteration cap {max_iterations}")
    if not math.isfinite(float(x0)):
        raise DomainError(f"x0 must be finite, got {x0!r}")

    if precision.is_bigfloat:
        values = np.empty(n + 1, dtype=object)
        with precision.context():
            r, beta = gmpy2.mpfr(params.r), gmpy2.mpfr(params.beta)
            x = gmpy2.mpfr(x0)
            values[0] = x
            for k in range(n):
                t = 1 - beta * x
                x = r * x * t
                values[k + 1] = x
    else:
        values = _kernels.iterate_double(float(params.r), float(params.beta), float(x0), n)
    values.flags.writeable = False
    return Trajectory(params, float(x0), values, precision)


def fixed_points(params: MapParams) -> tuple[float, ...]:
    """Sorted fixed points: 0 and (r-1)/(r*beta), merged when r = 1."""
    nonzero = (params.r - 1.0) / (params.r * params.beta)
    if nonzero == 0.0:
        return (0.0,)
    return tuple(sorted((0.0, nonzero)))


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    limit_point: float
    steps: int
    final_value: float


def empirical_convergence(
    params: MapParams, x0: float, tol: float, n_max: int, domain: str = "unit"
) -> ConvergenceReport:
    """Iterate until within ``tol`` of (r-1)/(r*beta) or ``n_max`` steps pass.

    ``domain="unit"`` accepts x0 in (0, 1/beta); ``domain="symmetric"`` accepts
    (-1/beta, 1/beta). Negative starts escape to minus infinity for 1 < r < 3
    and are reported as not converged.
    """
    if not 1.0 < params.r < 3.0:
        raise DomainError(f"empirical convergence needs 1 < r < 3, got r = {params.r}")
    if domain not in ("unit", "symmetric"):
        raise DomainError(f"unknown domain {domain!r}")
    lo = 0.0 if domain == "unit" else -params.upper_state
    if not lo < x0 < params.upper_state:
        raise DomainError(f"x0 must lie in ({lo}, {params.upper_state}), got {x0}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    target = fixed_points(params)[-1]
    x = float(x0)
    for k in range(int(n_max) + 1):
        if abs(x - target) < tol:
            return ConvergenceReport(True, target, k, x)
        if not math.isfinite(x):
            return ConvergenceReport(False, target, k, x)
        if k < n_max:
            x = step(params, x)
    return ConvergenceReport(False, target, int(n_max), x)
