"""The contractive regime 0 < r < 1 of x -> r x (1 - x).

Telescoping ln x_n gives the exact identity

    ln x_n / n = ln r + ln x0 / n + S_{n-1} / n,   S_{n-1} = sum_{k<n} ln(1 - x_k),

and the convexity of -ln(1 - x) bounds |S_{n-1}| by |ln(1 - x0)| / (1 - r)
uniformly in n, which pins the rate ln x_n / n -> ln r. A contraction
argument alone only gives x_n <= r^n x0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np

from . import _kernels
from .errors import BoundViolation, DomainError
from .extrapolation import fit_inverse_power
from .mapcore import Form, MapParams, Trajectory, iterate
from .precision import DEFAULT_POLICY, PrecisionPolicy

__all__ = [
    "UNDERFLOW_THRESHOLD",
    "DEFAULT_RATE_CHECKPOINTS",
    "RateAnalysis",
    "RateLimitEstimate",
    "EnvelopeReport",
    "ContractionReport",
    "exp_upper_bound",
    "log_exp_upper_bound",
    "log_orbit",
    "rate_analysis",
    "verify_exp_envelope",
    "s_log_sweep",
    "convexity_bound_check",
    "rate_limit_estimate",
    "lipschitz_factor",
    "contraction_grid_check",
    "subcritical_trajectory",
]

#: Below this value iterates are advanced in the log domain.
UNDERFLOW_THRESHOLD = 1e-300

DEFAULT_RATE_CHECKPOINTS = tuple(int(round(n)) for n in np.geomspace(100, 10_000, 9))

_EPS = np.finfo(np.float64).eps


def _require(r: float, lambda0: float) -> None:
    if not 0.0 < r < 1.0:
        raise DomainError(f"need 0 < r < 1, got r = {r}")
    if not 0.0 < lambda0 < 1.0:
        raise DomainError(f"need lambda0 in (0, 1), got {lambda0}")


def exp_upper_bound(r: float, lambda0: float, n: int) -> float:
    """r^n lambda0 = exp(-n |ln r|) lambda0 (underflows to 0 for large n)."""
    _require(r, lambda0)
    return r**n * lambda0


def log_exp_upper_bound(r: float, lambda0: float, n):
    """n ln r + ln lambda0, the log of :func:`exp_upper_bound`; vectorized in n."""
    _require(r, lambda0)
    return np.asarray(n, dtype=np.float64) * math.log(r) + math.log(lambda0)


def log_orbit(r: float, lambda0: float, n: int) -> np.ndarray:
    """ln x_k for k = 0..n, switching to the log-domain recursion below 1e-300."""
    _require(r, lambda0)
    out, _ = _kernels.log_iterates(float(r), float(lambda0), int(n), UNDERFLOW_THRESHOLD)
    return out


def _log_values(traj: Trajectory, n: int) -> np.ndarray:
    if traj.precision.is_bigfloat:
        with traj.precision.context():
            return np.array([float(gmpy2.log(v)) for v in traj.values[: n + 1]])
    vals = np.asarray(traj.values[: n + 1])
    small = np.flatnonzero(vals < UNDERFLOW_THRESHOLD)
    if small.size == 0:
        return np.log(vals)
    start = max(int(small[0]) - 1, 0)  # last iterate still above the threshold
    tail, _ = _kernels.log_iterates(
        float(traj.params.r), float(vals[start]), n - start, UNDERFLOW_THRESHOLD
    )
    return np.concatenate([np.log(vals[:start]), tail])


@dataclass(frozen=True)
class RateAnalysis:
    r: float
    lambda0: float
    n: int
    log_rate: float  # ln x_n / n
    s_log: float  # S_{n-1}
    s_log_bound: float  # |ln(1 - x0)| / (1 - r)
    identity_residual: float  # |log_rate - (ln r + ln x0/n + S_{n-1}/n)|
    identity_slack: float

    @property
    def identity_holds(self) -> bool:
        return self.identity_residual <= self.identity_slack

    @property
    def s_bound_holds(self) -> bool:
        return abs(self.s_log) <= self.s_log_bound


def rate_analysis(traj: Trajectory, n: int) -> RateAnalysis:
    """Evaluate both sides of the log-telescoping identity at step ``n``.

    Raises :class:`BoundViolation` if the identity misses by more than its
    rounding slack or |S_{n-1}| exceeds its bound.
    """
    r, lam0 = traj.params.r, traj.x0
    _require(r, lam0)
    if traj.params.form is not Form.X:
        raise DomainError("the subcritical analysis uses the x-form map")
    if int(n) != n or not 1 <= n <= traj.n:
        raise DomainError(f"need 1 <= n <= {traj.n}, got {n}")
    n = int(n)
    logs = _log_values(traj, n)
    if traj.precision.is_bigfloat:
        vals = np.array([float(v) for v in traj.values[:n]])
    else:
        vals = np.exp(logs[:n])
    if np.any(vals >= 1.0):
        raise DomainError("an iterate left (0, 1)")
    s_log = math.fsum(np.log1p(-vals))
    log_rate = logs[n] / n
    rhs = math.log(r) + math.log(lam0) / n + s_log / n
    slack = 8 * _EPS * (1.0 + abs(math.log(r)) + (abs(math.log(lam0)) + abs(s_log)) / n)
    bound = abs(math.log1p(-lam0)) / (1.0 - r)
    ra = RateAnalysis(r, lam0, n, log_rate, s_log, bound, abs(log_rate - rhs), slack)
    if not ra.identity_holds:
        raise BoundViolation(f"log-telescoping identity off by {ra.identity_residual:.3e}")
    if not ra.s_bound_holds:
        raise BoundViolation(f"|S_(n-1)| = {abs(s_log)} exceeds {bound}")
    return ra


@dataclass(frozen=True)
class EnvelopeReport:
    holds: bool
    violations: int
    min_log_gap: float  # min over k >= 1 of (k ln r + ln x0) - ln x_k


def verify_exp_envelope(r: float, lambda0: float, n: int) -> EnvelopeReport:
    """Check x_k <= r^k x0 for k = 0..n in log form."""
    logs = log_orbit(r, lambda0, n)
    k = np.arange(n + 1, dtype=np.float64)
    bound = log_exp_upper_bound(r, lambda0, k)
    slack = 8 * _EPS * (k * (1.0 + abs(math.log(r))) + abs(math.log(lambda0)))
    bad = logs > bound + slack
    gap = float(np.min(bound[1:] - logs[1:])) if n >= 1 else 0.0
    return EnvelopeReport(not bad.any(), int(np.count_nonzero(bad)), gap)


def s_log_sweep(r: float, lambda0: float, n: int) -> np.ndarray:
    """S_{m-1} = sum_{k<m} ln(1 - x_k) for m = 0..n (compensated)."""
    logs = log_orbit(r, lambda0, n)
    return _kernels.neumaier_cumsum(np.log1p(-np.exp(logs[:n])))


def convexity_bound_check(lambda0: float, grid: Sequence[float]) -> bool:
    """-ln(1 - x) <= (x / x0)(-ln(1 - x0)) for every x of the grid in [0, x0]."""
    if not 0.0 < lambda0 < 1.0:
        raise DomainError(f"need lambda0 in (0, 1), got {lambda0}")
    x = np.asarray(grid, dtype=np.float64)
    if np.any((x < 0) | (x > lambda0)):
        raise DomainError("grid must lie in [0, lambda0]")
    g = -np.log1p(-x)
    chord = (x / lambda0) * -math.log1p(-lambda0)
    return bool(np.all(g <= chord + 4 * np.spacing(chord)))


@dataclass(frozen=True)
class RateLimitEstimate:
    r: float
    lambda0: float
    checkpoints: tuple[int, ...]
    rates: tuple[float, ...]  # ln x_n / n
    extrapolated: float
    correction_coef: float  # C in rate ~ ln r + C/n
    correction_exponent: float  # slope of ln|rate - ln r| against ln n
    contraction_bound: float  # ln r: all the contraction argument gives (as an upper bound)


def rate_limit_estimate(
    r: float, lambda0: float, n_checkpoints: Sequence[int] = DEFAULT_RATE_CHECKPOINTS
) -> RateLimitEstimate:
    """Extrapolate lim ln x_n / n from a fit rate ~ L + C/n over the checkpoints."""
    _require(r, lambda0)
    cps = tuple(int(c) for c in n_checkpoints)
    if len(cps) < 2 or cps[0] < 1 or any(b <= a for a, b in zip(cps, cps[1:])):
        raise DomainError("need at least 2 positive, strictly increasing checkpoints")
    logs = log_orbit(r, lambda0, cps[-1])
    n = np.array(cps, dtype=np.float64)
    rates = logs[list(cps)] / n
    fit = fit_inverse_power(n, rates)
    corr = np.abs(rates - math.log(r))
    if np.all(corr > 0):
        exponent = float(np.polyfit(np.log(n), np.log(corr), 1)[0])
    else:
        exponent = math.nan
    return RateLimitEstimate(
        r, lambda0, cps, tuple(float(v) for v in rates), fit.limit, fit.coef, exponent,
        math.log(r),
    )


def lipschitz_factor(r: float, x: float, y: float) -> float:
    """f(x) - f(y) = r (x - y)(1 - (x + y)); checks |f(x) - f(y)| <= r |x - y|."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise DomainError("x and y must lie in [0, 1]")
    params = MapParams.x_form(r)
    t = 1.0 - x
    fx = r * x * t
    t = 1.0 - y
    fy = r * y * t
    value = r * (x - y) * (1.0 - (x + y))
    bound = r * abs(x - y)
    if abs(fx - fy) > bound + 2 * _EPS * (abs(fx) + abs(fy) + bound):
        raise BoundViolation(f"|f({x}) - f({y})| exceeds r|x - y| for {params}")
    return value


@dataclass(frozen=True)
class ContractionReport:
    r: float
    size: int
    violations: int
    max_ratio: float  # max |f(x) - f(y)| / (r |x - y|) over x != y
    max_identity_error: float  # max |(f(x) - f(y)) - r (x-y)(1-(x+y))|


def contraction_grid_check(r: float, size: int = 200) -> ContractionReport:
    """|f(x) - f(y)| <= r |x - y| on a size x size grid of [0, 1]^2."""
    if not r > 0:
        raise DomainError("r must be positive")
    x = np.linspace(0.0, 1.0, size)
    fx = r * x * (1.0 - x)
    diff = np.abs(fx[:, None] - fx[None, :])
    dx = np.abs(x[:, None] - x[None, :])
    bound = r * dx
    slack = 2 * _EPS * (fx[:, None] + fx[None, :] + bound)
    violations = int(np.count_nonzero(diff > bound + slack))
    off = dx > 0
    ratio = float(np.max(diff[off] / bound[off]))
    exact = r * (x[:, None] - x[None, :]) * (1.0 - (x[:, None] + x[None, :]))
    ident = float(np.max(np.abs((fx[:, None] - fx[None, :]) - exact)))
    return ContractionReport(r, size, violations, ratio, ident)


def subcritical_trajectory(
    r: float, lambda0: float, n: int, precision: PrecisionPolicy = DEFAULT_POLICY
) -> Trajectory:
    _require(r, lambda0)
    return iterate(MapParams.x_form(r), lambda0, n, precision)
