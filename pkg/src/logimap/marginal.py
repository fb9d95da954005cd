"""The marginal map r = 1: lambda_{n+1} = lambda_n (1 - beta lambda_n).

Telescoping the reciprocal gives the exact split

    1/lambda_n = 1/lambda_0 + beta n + beta^2 S1 + beta^3 S_ge2,

with S1 = sum lambda_k and S_ge2 = sum lambda_k^2 / (1 - beta lambda_k) over
k < n. Everything here verifies consequences of that identity numerically:
the two-sided envelopes, the logarithmic bound on S1, the constant bound on
S_ge2, the residual inequality and the limit n lambda_n -> 1/beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np
from numba import njit

from .errors import DomainError
from .extrapolation import fit_log_linear
from .flow import quadratic_closed_form
from .mapcore import MapParams, Trajectory, iterate
from .precision import DEFAULT_POLICY, PrecisionPolicy

__all__ = [
    "DEFAULT_CHECKPOINTS",
    "TelescopingDecomposition",
    "PrefixSums",
    "EnvelopePair",
    "Theorem1Report",
    "SBoundsReport",
    "ResidualReport",
    "Theorem2Estimate",
    "marginal_params",
    "ratio_identity_check",
    "prefix_sums",
    "decompose",
    "reconstruction_error",
    "envelopes",
    "verify_theorem1",
    "s1_upper_bound",
    "s_ge2_upper_bound",
    "verify_s_bounds",
    "stream_s_bounds",
    "residual",
    "residual_sweep",
    "theorem2_estimate",
    "continuum_comparison",
    "fit_s1_log_growth",
]

#: Geometric checkpoint schedule 2^10 .. 2^20 for the limit fit.
DEFAULT_CHECKPOINTS = tuple(2**k for k in range(10, 21))


def marginal_params(beta: float) -> MapParams:
    return MapParams.verhulst(1.0, beta)


def _require_open(beta: float, lambda0: float) -> None:
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not 0.0 < beta * lambda0 < 1.0:
        raise DomainError(f"need lambda0 in (0, 1/beta); got beta*lambda0 = {beta * lambda0}")


def _require_marginal(traj: Trajectory) -> None:
    if traj.params.r != 1.0:
        raise DomainError(f"marginal analysis needs r = 1, got r = {traj.params.r}")
    _require_open(traj.params.beta, traj.x0)


def ratio_identity_check(traj: Trajectory) -> float:
    """Max relative deviation of lambda_k/lambda_{k+1} from 1/(1 - beta lambda_k)."""
    if traj.params.r != 1.0:
        raise DomainError("ratio identity is stated for r = 1")
    lam = traj.values
    if any(v == 0 for v in lam):
        raise DomainError("trajectory reaches the zero fixed point; ratio undefined")
    beta = traj.params.beta
    with traj.precision.context():
        worst = 0
        for k in range(len(lam) - 1):
            expected = 1 / (1 - beta * lam[k])
            dev = abs(lam[k] / lam[k + 1] - expected) / expected
            worst = max(worst, dev)
    return float(worst)


@dataclass(frozen=True)
class TelescopingDecomposition:
    lambda0: float
    n: int
    beta: float
    linear_term: object
    s1: object
    s_ge2: object
    s2: object
    precision: PrecisionPolicy = DEFAULT_POLICY

    def inverse(self):
        """1/lambda_0 + beta n + beta^2 S1 + beta^3 S_ge2."""
        b = self.beta
        with self.precision.context():
            lam0 = self.precision.number(self.lambda0)
            return 1 / lam0 + self.linear_term + b * b * self.s1 + b**3 * self.s_ge2

    def reconstructed(self):
        """lambda_n rebuilt from the sums (the closed-form reconstruction)."""
        b = self.beta
        with self.precision.context():
            lam0 = self.precision.number(self.lambda0)
            denom = 1 + b * lam0 * self.n + b * b * lam0 * self.s1 + b**3 * lam0 * self.s_ge2
            return lam0 / denom


@dataclass(frozen=True)
class PrefixSums:
    """Running sums over k < n for every n = 0..N (index n)."""

    s1: np.ndarray
    s2: np.ndarray
    s_ge2: np.ndarray


def prefix_sums(traj: Trajectory, n: int | None = None) -> PrefixSums:
    _require_marginal(traj)
    n = traj.n if n is None else n
    lam = traj.values[:n]
    beta = traj.params.beta
    policy = traj.precision
    if policy.is_bigfloat:
        with policy.context():
            sq = [v * v for v in lam]
            ge2 = [s / (1 - beta * v) for s, v in zip(sq, lam)]
    else:
        sq = lam * lam
        ge2 = sq / (1.0 - beta * lam)
    return PrefixSums(policy.cumsum(lam), policy.cumsum(sq), policy.cumsum(ge2))


def decompose(traj: Trajectory, n: int) -> TelescopingDecomposition:
    """Split 1/lambda_n into 1/lambda_0 + beta n + beta^2 S1 + beta^3 S_ge2."""
    if int(n) != n or not 0 <= n <= traj.n:
        raise DomainError(f"n must be an integer in [0, {traj.n}], got {n}")
    sums = prefix_sums(traj, int(n))
    with traj.precision.context():
        linear = traj.params.beta * traj.precision.number(int(n))
    return TelescopingDecomposition(
        traj.x0, int(n), traj.params.beta, linear,
        sums.s1[-1], sums.s_ge2[-1], sums.s2[-1], traj.precision,
    )


def reconstruction_error(traj: Trajectory) -> float:
    """Max over n of |lambda_n - reconstruction| / lambda_n for the whole orbit."""
    sums = prefix_sums(traj)
    beta, policy = traj.params.beta, traj.precision
    if policy.is_bigfloat:
        with policy.context():
            lam0 = gmpy2.mpfr(traj.x0)
            worst = gmpy2.mpfr(0)
            for n, lam_n in enumerate(traj.values):
                denom = (1 + beta * lam0 * n + beta**2 * lam0 * sums.s1[n]
                         + beta**3 * lam0 * sums.s_ge2[n])
                worst = max(worst, abs(lam_n - lam0 / denom) / lam_n)
            return float(worst)
    lam0 = traj.x0
    n = np.arange(traj.n + 1, dtype=np.float64)
    denom = 1.0 + beta * lam0 * n + beta**2 * lam0 * sums.s1 + beta**3 * lam0 * sums.s_ge2
    rebuilt = lam0 / denom
    return float(np.max(np.abs(traj.values - rebuilt) / traj.values))


@dataclass(frozen=True)
class EnvelopePair:
    lower: np.ndarray
    upper: np.ndarray
    beta: float
    lambda0: float


def envelopes(
    beta: float, lambda0: float, n_max: int, precision: PrecisionPolicy = DEFAULT_POLICY
) -> EnvelopePair:
    """Closed-form envelopes for n = 0..n_max.

    lower[n] = lambda0 / (1 + n beta lambda0 / (1 - beta lambda0)), evaluated
    as lambda0 t / (t + n a) with a = beta lambda0 and t = 1 - a so that the
    n = 1 equality with lambda_1 survives rounding; upper[n] = lambda0/(1 + n a).
    """
    _require_open(beta, lambda0)
    if precision.is_bigfloat:
        lower = np.empty(n_max + 1, dtype=object)
        upper = np.empty(n_max + 1, dtype=object)
        with precision.context():
            lam0 = gmpy2.mpfr(lambda0)
            a = beta * lam0
            t = 1 - a
            num = lam0 * t
            for n in range(n_max + 1):
                lower[n] = num / (t + n * a)
                upper[n] = lam0 / (1 + n * a)
            lower[0] = upper[0] = lam0
    else:
        n = np.arange(n_max + 1, dtype=np.float64)
        a = beta * lambda0
        t = 1.0 - a
        lower = (lambda0 * t) / (t + n * a)
        upper = lambda0 / (1.0 + n * a)
        lower[0] = upper[0] = lambda0
    return EnvelopePair(lower, upper, beta, lambda0)


@dataclass(frozen=True)
class Theorem1Report:
    holds: bool
    first_violation: int | None
    violations: int
    n: int
    min_lower_gap: float  # min over n >= 1 of (lambda_n - lower[n]) / lambda_n
    min_upper_gap: float  # min over n >= 1 of (upper[n] - lambda_n) / lambda_n


def verify_theorem1(traj: Trajectory) -> Theorem1Report:
    """Check lower[n] - slack <= lambda_n <= upper[n] + slack along the orbit."""
    _require_marginal(traj)
    env = envelopes(traj.params.beta, traj.x0, traj.n, traj.precision)
    lam = traj.values
    policy = traj.precision
    with policy.context():
        slack = policy.slack(env.upper)
        bad = (lam < env.lower - slack) | (lam > env.upper + slack)
        bad = np.asarray(bad, dtype=bool)
        lower_gap = (lam[1:] - env.lower[1:]) / lam[1:]
        upper_gap = (env.upper[1:] - lam[1:]) / lam[1:]
    first = int(np.argmax(bad)) if bad.any() else None
    count = int(np.count_nonzero(bad))
    if traj.n == 0:
        return Theorem1Report(first is None, first, count, 0, 0.0, 0.0)
    return Theorem1Report(
        first is None, first, count, traj.n,
        float(min(lower_gap)), float(min(upper_gap)),
    )


def s1_upper_bound(beta: float, lambda0: float, n):
    """lambda0 [1 + ln(1 + beta lambda0 n) / (beta lambda0)]; accepts arrays in n."""
    _require_open(beta, lambda0)
    a = beta * lambda0
    return lambda0 * (1.0 + np.log1p(a * np.asarray(n, dtype=np.float64)) / a)


def s_ge2_upper_bound(beta: float, lambda0: float) -> float:
    """(lambda0 / (1 - beta lambda0)) (lambda0 + 1/beta)."""
    _require_open(beta, lambda0)
    return lambda0 / (1.0 - beta * lambda0) * (lambda0 + 1.0 / beta)


@dataclass(frozen=True)
class SBoundsReport:
    holds: bool
    n: int
    s1_violations: int
    s_ge2_violations: int
    comparison_violations: int  # S_ge2 <= S2 / (1 - beta lambda0)
    max_s_ge2: float
    s_ge2_bound: float
    min_s1_margin: float  # min over n of bound - S1


def verify_s_bounds(traj: Trajectory) -> SBoundsReport:
    """Check S1 and S_ge2 against their bounds for every prefix of the orbit."""
    _require_marginal(traj)
    beta, lam0 = traj.params.beta, traj.x0
    sums = prefix_sums(traj)
    s1 = np.asarray(sums.s1, dtype=np.float64)
    s2 = np.asarray(sums.s2, dtype=np.float64)
    sge2 = np.asarray(sums.s_ge2, dtype=np.float64)
    n = np.arange(traj.n + 1)
    b1 = s1_upper_bound(beta, lam0, n)
    b2 = s_ge2_upper_bound(beta, lam0)
    slack = PrecisionPolicy.double().slack
    v1 = int(np.count_nonzero(s1 > b1 + slack(b1)))
    v2 = int(np.count_nonzero(sge2 > b2 + slack(b2)))
    comp = s2 / (1.0 - beta * lam0)
    v3 = int(np.count_nonzero(sge2 > comp + slack(comp)))
    return SBoundsReport(
        v1 == v2 == v3 == 0, traj.n, v1, v2, v3,
        float(sge2.max()), b2, float(np.min(b1 - s1)),
    )


@njit(cache=True)
def _ulp(x):
    m, e = math.frexp(abs(x))
    return math.ldexp(1.0, e - 53)


@njit(cache=True)
def _stream_s_bounds(beta, lam0, n_max):
    a = beta * lam0
    b2 = lam0 / (1.0 - a) * (lam0 + 1.0 / beta)
    b2_slack = b2 + 4.0 * _ulp(b2)
    lam = lam0
    s1 = 0.0
    c1 = 0.0
    s2 = 0.0
    c2 = 0.0
    v1 = 0
    v2 = 0
    first1 = -1
    first2 = -1
    max_sge2 = 0.0
    min_margin = np.inf
    for n in range(1, n_max + 1):
        # fold lambda_{n-1} into the running sums over k < n
        term = lam
        t = s1 + term
        if abs(s1) >= abs(term):
            c1 += (s1 - t) + term
        else:
            c1 += (term - t) + s1
        s1 = t
        term = lam * lam / (1.0 - beta * lam)
        t = s2 + term
        if abs(s2) >= abs(term):
            c2 += (s2 - t) + term
        else:
            c2 += (term - t) + s2
        s2 = t
        tt = 1.0 - beta * lam
        lam = lam * tt
        S1 = s1 + c1
        S2 = s2 + c2
        b1 = lam0 * (1.0 + math.log1p(a * n) / a)
        if S1 > b1 + 4.0 * _ulp(b1):
            v1 += 1
            if first1 < 0:
                first1 = n
        if S2 > b2_slack:
            v2 += 1
            if first2 < 0:
                first2 = n
        if S2 > max_sge2:
            max_sge2 = S2
        if b1 - S1 < min_margin:
            min_margin = b1 - S1
    return v1, v2, first1, first2, max_sge2, min_margin


def stream_s_bounds(beta: float, lambda0: float, n_max: int) -> SBoundsReport:
    """:func:`verify_s_bounds` without storing the orbit (for n up to 10^8).

    Compensated double only; the comparison with S2 is not tracked here.
    """
    _require_open(beta, lambda0)
    v1, v2, _, _, max_sge2, margin = _stream_s_bounds(float(beta), float(lambda0), int(n_max))
    return SBoundsReport(
        v1 == v2 == 0, int(n_max), int(v1), int(v2), 0,
        float(max_sge2), s_ge2_upper_bound(beta, lambda0), float(margin),
    )


@dataclass(frozen=True)
class ResidualReport:
    """The residual 1/(n lambda_n) - beta and its upper bound.

    ``rhs_bound = initial_term + sums_bound`` where ``initial_term`` is
    1/(n lambda_0), the contribution of 1/lambda_0 in the telescoped sum, and
    ``sums_bound`` bounds (beta^2 S1 + beta^3 S_ge2)/n.
    """

    n: int
    lhs: float
    initial_term: float
    sums_bound: float
    rhs_bound: float
    holds: bool


def residual(traj: Trajectory, n: int) -> ResidualReport:
    _require_marginal(traj)
    if int(n) != n or not 1 <= n <= traj.n:
        raise DomainError(f"residual needs 1 <= n <= {traj.n}, got {n}")
    beta, lam0 = traj.params.beta, traj.x0
    lam_n = float(traj.values[n])
    lhs = 1.0 / (n * lam_n) - beta
    a = beta * lam0
    sums_bound = (beta**2 * lam0 / n) * (1.0 + math.log1p(a * n) / a) + (
        beta**3 * lam0 / (n * (1.0 - a))
    ) * (lam0 + 1.0 / beta)
    initial = 1.0 / (n * lam0)
    rhs = initial + sums_bound
    slack = 4 * math.ulp(rhs)
    return ResidualReport(int(n), lhs, initial, sums_bound, rhs, 0.0 <= lhs <= rhs + slack)


def residual_sweep(traj: Trajectory) -> np.ndarray:
    """1/(n lambda_n) - beta for n = 1..N as float64."""
    _require_marginal(traj)
    lam = np.asarray(traj.values[1:], dtype=np.float64)
    n = np.arange(1, traj.n + 1, dtype=np.float64)
    return 1.0 / (n * lam) - traj.params.beta


@dataclass(frozen=True)
class Theorem2Estimate:
    checkpoints: tuple[int, ...]
    products: tuple[float, ...]  # n lambda_n at the checkpoints
    extrapolated_limit: float
    log_coef: float
    intercept: float
    products_increasing: bool  # along the whole orbit, n >= 1
    products_below_limit: bool  # n lambda_n < 1/beta for all n >= 1


def theorem2_estimate(
    beta: float,
    lambda0: float,
    n_checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
    precision: PrecisionPolicy = DEFAULT_POLICY,
) -> Theorem2Estimate:
    """Extrapolate lim n lambda_n from a fit 1/lambda_n ~ beta n + c ln n + d."""
    _require_open(beta, lambda0)
    cps = tuple(int(c) for c in n_checkpoints)
    if len(cps) < 3:
        raise DomainError("the limit fit needs at least 3 checkpoints")
    if any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1:
        raise DomainError("checkpoints must be positive and strictly increasing")
    traj = iterate(marginal_params(beta), lambda0, cps[-1], precision)
    lam = traj.as_float()
    n = np.arange(lam.size, dtype=np.float64)
    prod = n[1:] * lam[1:]
    fit = fit_log_linear(cps, [1.0 / lam[c] for c in cps])
    return Theorem2Estimate(
        cps,
        tuple(float(prod[c - 1]) for c in cps),
        fit.limit,
        fit.log_coef,
        fit.intercept,
        bool(np.all(np.diff(prod) > 0)),
        bool(np.all(prod < 1.0 / beta)),
    )


def continuum_comparison(beta: float, lambda0: float, t):
    """The continuum solution lambda0 / (1 + beta lambda0 t)."""
    return quadratic_closed_form(beta, lambda0, t)


def fit_s1_log_growth(traj: Trajectory, n_lo: int, n_hi: int) -> tuple[float, float]:
    """Fit S1^{n-1} ~ c ln n + d for n in [n_lo, n_hi]; returns (c, d)."""
    s1 = np.asarray(prefix_sums(traj, n_hi).s1, dtype=np.float64)
    n = np.unique(np.geomspace(n_lo, n_hi, 64).astype(np.int64))
    design = np.column_stack([np.log(n), np.ones(n.size)])
    (c, d), *_ = np.linalg.lstsq(design, s1[n], rcond=None)
    return float(c), float(d)
