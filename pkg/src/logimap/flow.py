"""Continuum flows: the Verhulst equation and d lambda/dt = -beta lambda^2 - beta3 lambda^3.

The cubic flow's ``beta`` is the magnitude of the one-loop coefficient: in the
beta-function expansion beta_2 lambda^2 + beta_3 lambda^3 + ..., the decaying
(asymptotically free) case has beta_2 = -beta < 0, and ``beta3`` here is the
negative of that expansion's beta_3 coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BlowUpError, BoundViolation, DomainError, StepSizeCollapseError
from .extrapolation import fit_log_linear

__all__ = [
    "VerhulstParams",
    "CubicFlowParams",
    "Equilibrium",
    "FlowSolution",
    "FTCReport",
    "Theorem3Estimate",
    "SeparableFlow",
    "DEFAULT_T_CHECKPOINTS",
    "verhulst_closed_form",
    "verhulst_rhs",
    "verhulst_inflection_time",
    "malthus_brake_limit",
    "equilibria",
    "quadratic_closed_form",
    "blow_up_time",
    "cubic_beta0_closed_form",
    "integrate",
    "ftc_bounds_check",
    "theorem3_estimate",
    "separable_quadratic",
    "separable_cubic",
    "separable_verhulst",
]

DEFAULT_T_CHECKPOINTS = tuple(float(t) for t in np.geomspace(1e2, 1e4, 11))
DEFAULT_CEILING = 1e12


# -- Verhulst -------------------------------------------------------------------


@dataclass(frozen=True)
class VerhulstParams:
    a: float
    b: float
    N0: float
    t0: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "N0"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @property
    def N_inf(self) -> float:
        return self.a / self.b


def verhulst_closed_form(p: VerhulstParams, t):
    """N0 N_inf / (N0 + (N_inf - N0) exp(-a (t - t0))), vectorized in t.

    Stated for t >= t0; it also solves the ODE backward in time while the
    denominator stays positive, which central differences at t0 rely on.
    """
    dt = np.asarray(t, dtype=np.float64) - p.t0
    x = -p.a * dt
    # N0 + (N_inf - N0) e^x rewritten to avoid cancellation when a dt is tiny
    denom = p.N_inf * np.exp(x) - p.N0 * np.expm1(x)
    out = p.N0 * p.N_inf / denom
    return float(out) if out.ndim == 0 else out


def verhulst_rhs(p: VerhulstParams, N):
    return p.a * N - p.b * N * N


def verhulst_inflection_time(p: VerhulstParams) -> float | None:
    """Time at which N = N_inf/2 (concavity flips), if the orbit passes it."""
    if not p.N0 < p.N_inf / 2:
        return None
    return p.t0 + math.log((p.N_inf - p.N0) / p.N0) / p.a


def malthus_brake_limit(b: float, N0: float, t0: float, t):
    """The a -> 0 limit of the Verhulst solution, N0 / (1 + N0 b (t - t0))."""
    if not b > 0:
        raise DomainError("b must be positive")
    dt = np.asarray(t, dtype=np.float64) - t0
    if np.any(dt < 0):
        raise DomainError("t must not precede t0")
    out = N0 / (1.0 + N0 * b * dt)
    return float(out) if out.ndim == 0 else out


# -- cubic flow ---------------------------------------------------------------


@dataclass(frozen=True)
class CubicFlowParams:
    beta: float
    beta3: float
    lambda0: float

    def __post_init__(self):
        if self.beta < 0:
            raise DomainError("beta must be nonnegative")
        if self.beta == 0 and self.beta3 == 0:
            raise DomainError("beta and beta3 cannot both vanish")

    @classmethod
    def from_fraction(cls, beta: float, beta3: float, f: float) -> "CubicFlowParams":
        """lambda0 = (-beta/beta3)(1 - f) for beta3 < 0 and f in (0, 1)."""
        if not (beta > 0 and beta3 < 0 and 0 < f < 1):
            raise DomainError("fraction form needs beta > 0, beta3 < 0, 0 < f < 1")
        return cls(beta, beta3, (-beta / beta3) * (1.0 - f))

    @property
    def fraction(self) -> float | None:
        """f with lambda0 = (-beta/beta3)(1 - f), when beta3 < 0 and lambda0 is admissible."""
        if self.beta > 0 and self.beta3 < 0 and 0 < self.lambda0 < -self.beta / self.beta3:
            return 1.0 + self.beta3 * self.lambda0 / self.beta
        return None

    def rhs(self, lam):
        return -self.beta * lam * lam - self.beta3 * lam * lam * lam

    @property
    def in_theorem3_regime(self) -> bool:
        if not self.beta > 0 or not self.lambda0 > 0:
            return False
        return self.beta3 >= 0 or self.lambda0 < -self.beta / self.beta3


@dataclass(frozen=True)
class Equilibrium:
    point: float
    sign_below: int  # sign of F just below the point
    sign_above: int


def equilibria(p: CubicFlowParams) -> tuple[Equilibrium, ...]:
    """Zeros of F(lambda) = -beta lambda^2 - beta3 lambda^3 with adjacent signs of F."""
    points = {0.0}
    if p.beta3 != 0:
        points.add(-p.beta / p.beta3 + 0.0)
    pts = sorted(points)
    # probes strictly between consecutive zeros and one unit beyond each end
    probes = [pts[0] - 1.0] + [(u + v) / 2 for u, v in zip(pts, pts[1:])] + [pts[-1] + 1.0]
    signs = [int(np.sign(p.rhs(x))) for x in probes]
    return tuple(Equilibrium(x, signs[i], signs[i + 1]) for i, x in enumerate(pts))


def quadratic_closed_form(beta: float, lambda0: float, t):
    """lambda0 / (1 + beta lambda0 t), the solution of d lambda/dt = -beta lambda^2."""
    t = np.asarray(t, dtype=np.float64)
    out = lambda0 / (1.0 + beta * lambda0 * t)
    return float(out) if out.ndim == 0 else out


def blow_up_time(beta3: float, lambda0: float) -> float | None:
    """1 / (2 |beta3| lambda0^2) when beta = 0 and beta3 < 0, else None."""
    if beta3 < 0 and lambda0 != 0:
        return 1.0 / (2.0 * abs(beta3) * lambda0 * lambda0)
    return None


def cubic_beta0_closed_form(beta3: float, lambda0: float, t):
    """[lambda0^-2 + 2 beta3 t]^(-1/2); raises :class:`BlowUpError` at or past t*."""
    if beta3 == 0 or not lambda0 > 0:
        raise DomainError("need beta3 != 0 and lambda0 > 0")
    t = np.asarray(t, dtype=np.float64)
    t_star = blow_up_time(beta3, lambda0)
    if t_star is not None and np.any(t >= t_star):
        raise BlowUpError(f"solution blows up at t* = {t_star}", t_star)
    out = 1.0 / np.sqrt(1.0 / (lambda0 * lambda0) + 2.0 * beta3 * t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BlowUp:
    t_star: float
    last_value: float
    reason: str  # "ceiling" or "step-collapse"


@dataclass(frozen=True, eq=False)
class FlowSolution:
    times: np.ndarray
    values: np.ndarray
    method: str  # "closed-form" or "numerical"
    rel_tol: float | None = None
    abs_tol: float | None = None
    blow_up: BlowUp | None = None
    dense: Callable | None = field(default=None, repr=False)

    def __call__(self, t):
        if self.dense is None:
            raise DomainError("this solution carries no dense output")
        return self.dense(t)

    def integral(self, refine: int = 16) -> np.ndarray:
        """Cumulative integral of lambda from 0 to each sampled time.

        Composite trapezoid rule on the dense output, each solver step split
        into ``refine`` pieces.
        """
        t = self.times
        if t.size < 2:
            return np.zeros(t.size)
        frac = np.linspace(0.0, 1.0, refine + 1)
        grid = t[:-1, None] + (t[1:] - t[:-1])[:, None] * frac[None, :]
        if self.dense is None:
            raise DomainError("integral needs dense output")
        vals = np.asarray(self.dense(grid.ravel())).reshape(grid.shape)
        pieces = np.sum(np.diff(grid, axis=1) * (vals[:, 1:] + vals[:, :-1]) / 2, axis=1)
        return np.concatenate([[0.0], np.cumsum(pieces)])


def integrate(
    p: CubicFlowParams,
    t_end: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-15,
    ceiling: float = DEFAULT_CEILING,
) -> FlowSolution:
    """Integrate d lambda/dt = F(lambda) on [0, t_end] with an adaptive RK pair.

    Uses the embedded 8(5,3) Dormand-Prince pair with dense output. A blow-up
    is reported when lambda crosses ``ceiling`` while increasing, or when the
    step size collapses while lambda is still increasing (double-precision time
    cannot resolve the approach to t* beyond that point).
    """
    if not t_end >= 0:
        raise DomainError("t_end must be nonnegative")
    if not (rel_tol > 0 and abs_tol > 0):
        raise DomainError("tolerances must be positive")
    lam0 = float(p.lambda0)
    if t_end == 0:
        return FlowSolution(
            np.array([0.0]), np.array([lam0]), "numerical", rel_tol, abs_tol,
            dense=lambda t: np.full(np.shape(t), lam0),
        )

    def rhs(_t, y):
        return p.rhs(y)

    def hit_ceiling(_t, y):
        return abs(y[0]) - ceiling

    hit_ceiling.terminal = True
    hit_ceiling.direction = 1

    sol = solve_ivp(
        rhs, (0.0, float(t_end)), [lam0], method="DOP853",
        rtol=rel_tol, atol=abs_tol, dense_output=True, events=hit_ceiling,
    )
    times, values = sol.t, sol.y[0]

    def dense(t):
        return sol.sol(t)[0]

    blow = None
    if sol.status == 1:
        t_star = float(sol.t_events[0][0])
        blow = BlowUp(t_star, float(sol.y_events[0][0][0]), "ceiling")
    elif sol.status == -1:
        last = float(values[-1])
        if p.rhs(last) > 0 and abs(last) > abs(lam0):
            blow = BlowUp(float(times[-1]), last, "step-collapse")
        else:
            raise StepSizeCollapseError(sol.message, float(times[-1]), last)

    if blow is None and lam0 > 0 and p.rhs(lam0) < 0:
        # F < 0 between 0 and the next equilibrium: positive, strictly decreasing
        if not (np.all(values > 0) and np.all(np.diff(values) < 0)):
            raise BoundViolation("orbit with F < 0 failed to stay positive and decreasing")
    return FlowSolution(times, values, "numerical", rel_tol, abs_tol, blow, dense)


@dataclass(frozen=True)
class FTCReport:
    """Largest relative excess of each claimed inequality (<= 0 means it holds).

    ``inverse``: 1/lambda_0 + beta t <= 1/lambda(t) for beta3 >= 0, reversed for
    beta3 < 0 (the integral term carries the sign of beta3).
    ``integral``: beta3 int lambda <= (beta3/beta) ln(1 + beta lambda0 t), beta3 > 0.
    ``envelope``: lambda(t) <= 1/(1/lambda0 + (beta - |beta3| lambda0) t), beta3 < 0.
    ``log_integral``: |beta3| int lambda <= (|beta3|/(beta f)) ln(1 + (1-f) beta^2 f t/|beta3|),
    beta3 < 0.
    """

    inverse: float
    integral: float | None
    envelope: float | None
    log_integral: float | None

    def holds(self, tol: float) -> bool:
        vals = [v for v in (self.inverse, self.integral, self.envelope, self.log_integral)
                if v is not None]
        return all(v <= tol for v in vals)


def _rel_excess(lhs: np.ndarray, rhs: np.ndarray) -> float:
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), np.finfo(float).tiny)
    return float(np.max((lhs - rhs) / scale))


def ftc_bounds_check(p: CubicFlowParams, sol: FlowSolution, refine: int = 16) -> FTCReport:
    """Check the integral-representation bounds along a numerical solution."""
    if not p.beta > 0:
        raise DomainError("FTC bounds need beta > 0")
    if not p.in_theorem3_regime:
        raise DomainError("FTC bounds need lambda0 > 0 (and lambda0 < -beta/beta3 if beta3 < 0)")
    b, b3, lam0 = p.beta, p.beta3, p.lambda0
    t, lam = sol.times, sol.values
    linear = 1.0 / lam0 + b * t
    inverse = _rel_excess(linear, 1.0 / lam) if b3 >= 0 else _rel_excess(1.0 / lam, linear)
    integral = envelope = log_integral = None
    if b3 > 0:
        I = sol.integral(refine)
        integral = _rel_excess(b3 * I, (b3 / b) * np.log1p(b * lam0 * t))
    elif b3 < 0:
        envelope = _rel_excess(lam, 1.0 / (1.0 / lam0 + (b - abs(b3) * lam0) * t))
        f = p.fraction
        I = sol.integral(refine)
        bound = (abs(b3) / (b * f)) * np.log1p((1.0 - f) * b * b * f * t / abs(b3))
        log_integral = _rel_excess(abs(b3) * I, bound)
    return FTCReport(inverse, integral, envelope, log_integral)


@dataclass(frozen=True)
class Theorem3Estimate:
    checkpoints: tuple[float, ...]
    products: tuple[float, ...]  # t lambda(t)
    extrapolated: float
    log_coef: float
    intercept: float


def theorem3_estimate(
    p: CubicFlowParams,
    t_checkpoints: Sequence[float] = DEFAULT_T_CHECKPOINTS,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-15,
) -> Theorem3Estimate:
    """Extrapolate lim t lambda(t) from a fit 1/lambda ~ beta t + c ln t + d."""
    if not p.in_theorem3_regime:
        raise DomainError(f"{p} is outside the regime where t lambda(t) -> 1/beta")
    cps = tuple(float(c) for c in t_checkpoints)
    if len(cps) < 3 or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] <= 0:
        raise DomainError("need at least 3 positive, strictly increasing checkpoints")
    sol = integrate(p, cps[-1], rel_tol, abs_tol)
    lam = np.asarray(sol(np.array(cps)))
    fit = fit_log_linear(cps, 1.0 / lam)
    products = tuple(float(t * v) for t, v in zip(cps, lam))
    return Theorem3Estimate(cps, products, fit.limit, fit.log_coef, fit.intercept)


# -- separation of variables -------------------------------------------------------


@dataclass(frozen=True)
class SeparableFlow:
    """A flow with tabulated antiderivative G of 1/F and its inverse."""

    G: Callable[[float], float]
    G_inv: Callable[[float], float]

    def solve(self, x0: float, t: float) -> float:
        """lambda(t) = G^{-1}(G(lambda0) + t)."""
        return self.G_inv(self.G(x0) + t)


def separable_quadratic(beta: float) -> SeparableFlow:
    """F = -beta lambda^2."""
    return SeparableFlow(lambda x: 1.0 / (beta * x), lambda s: 1.0 / (beta * s))


def separable_cubic(beta3: float) -> SeparableFlow:
    """F = -beta3 lambda^3 (the beta = 0 cubic flow), positive branch."""

    def G_inv(s):
        if not beta3 * s > 0:
            raise BlowUpError("no finite solution on the positive branch", math.nan)
        return 1.0 / math.sqrt(2.0 * beta3 * s)

    return SeparableFlow(lambda x: 1.0 / (2.0 * beta3 * x * x), G_inv)


def separable_verhulst(a: float, b: float) -> SeparableFlow:
    """F = a N - b N^2 on 0 < N < a/b."""

    def G(N):
        return math.log(N / (a - b * N)) / a

    def G_inv(s):
        e = math.exp(a * s)
        return a * e / (1.0 + b * e)

    return SeparableFlow(G, G_inv)
