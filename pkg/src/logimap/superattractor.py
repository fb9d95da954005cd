"""The super-attractive case r = 2: x_{n+1} = 2 x_n (1 - x_n).

With e_n = x_n - 1/2 the map reads e_{n+1} = -2 e_n^2, hence for n >= 1

    x_n - 1/2 = -(1/2) (2 x0 - 1)^(2^n),
    ln|x_n - 1/2| = 2^n ln|2 x0 - 1| - ln 2.

The deviation underflows doubles after a handful of steps, so it is carried
in log form with the 2^n factor kept as an exact power-of-two exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from .errors import DomainError, InsufficientPrecisionError
from .extended import ExtendedReal

__all__ = [
    "LogDeviation",
    "MAX_ORACLE_STEPS",
    "exact_deviation",
    "shifted_log_sweep",
    "decay_rate",
    "log_decay_rate",
    "required_bits",
    "validate_against_iteration",
    "effective_r",
]

_LN2 = math.log(2.0)

#: Largest n the high-precision oracle accepts.
MAX_ORACLE_STEPS = 12


@dataclass(frozen=True)
class LogDeviation:
    """ln|x_n - 1/2| = coefficient * 2**scale - ln 2, with the sign of x_n - 1/2.

    ``coefficient`` is ln|2 x0 - 1| and ``scale`` is n, so the shifted log
    ``ln|x_n - 1/2| + ln 2`` is held exactly and doubles exactly per step.
    """

    n: int
    coefficient: float
    scale: int
    sign: int
    base: float = math.nan  # |2 x0 - 1|, for direct evaluation while it does not underflow

    @property
    def shifted_log(self) -> ExtendedReal:
        return ExtendedReal.of(self.coefficient, self.scale)

    @property
    def log_abs_dev(self) -> ExtendedReal:
        return self.shifted_log - _LN2

    def deviation(self) -> float:
        """x_n - 1/2 as a float (rounds to a signed zero once it underflows)."""
        if self.sign == 0:
            return 0.0
        if self.base == self.base and self.n < 1024:
            return self.sign * 0.5 * self.base ** (2.0**self.n)
        log_dev = float(self.log_abs_dev)
        return self.sign * (math.exp(log_dev) if log_dev > -800 else 0.0)

    def x(self) -> float:
        return 0.5 + self.deviation()


def _check_x0(x0: float) -> None:
    if not 0.0 < x0 < 1.0:
        raise DomainError(f"x0 must lie in (0, 1), got {x0}")


def _check_n(n: int, least: int) -> int:
    if int(n) != n or n < least:
        raise DomainError(f"n must be an integer >= {least}, got {n}")
    return int(n)


def exact_deviation(x0: float, n: int) -> LogDeviation:
    """Closed-form log-deviation of x_n from the fixed point 1/2."""
    _check_x0(x0)
    n = _check_n(n, 0)
    if x0 == 0.5:
        return LogDeviation(n, -math.inf, n, 0, 0.0)
    base = abs(2.0 * x0 - 1.0)
    coef = math.log(base)
    if n == 0:
        return LogDeviation(0, coef, 0, 1 if x0 > 0.5 else -1, base)
    return LogDeviation(n, coef, n, -1, base)


def shifted_log_sweep(x0: float, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized (mantissa, exponent) of ln|x_n - 1/2| + ln 2 for n = 0..n_max."""
    _check_x0(x0)
    n_max = _check_n(n_max, 0)
    if x0 == 0.5:
        raise DomainError("the deviation vanishes identically at x0 = 1/2")
    m, e = math.frexp(math.log(abs(2.0 * x0 - 1.0)))
    n = np.arange(n_max + 1, dtype=np.int64)
    return np.full(n_max + 1, m), e + n


def decay_rate(x0: float, n: int) -> ExtendedReal:
    """(2^n / n) |ln|2 x0 - 1||, the n-dependent exponential decay rate."""
    _check_x0(x0)
    n = _check_n(n, 1)
    if x0 == 0.5:
        raise DomainError("the decay rate is undefined at the fixed point x0 = 1/2")
    return ExtendedReal.of(abs(math.log(abs(2.0 * x0 - 1.0))) / n, n)


def log_decay_rate(x0: float, n: int) -> float:
    """ln of :func:`decay_rate`: n ln 2 + ln|ln|2 x0 - 1|| - ln n."""
    _check_x0(x0)
    n = _check_n(n, 1)
    if x0 == 0.5:
        raise DomainError("the decay rate is undefined at the fixed point x0 = 1/2")
    return n * _LN2 + math.log(abs(math.log(abs(2.0 * x0 - 1.0)))) - math.log(n)


def required_bits(x0: float, n_max: int) -> int:
    """Working precision needed to resolve x_{n_max} - 1/2 by direct iteration.

    At least 2^n_max + 64, and enough to hold |x_n - 1/2| ~ 2^(-1 - 2^n |log2|2x0-1||)
    next to 1/2 with 64 guard bits.
    """
    if x0 == 0.5:
        return 64
    depth = 1.0 + 2.0**n_max * abs(math.log2(abs(2.0 * x0 - 1.0)))
    return max(2**n_max, math.ceil(depth)) + 64


def validate_against_iteration(
    x0: float, n_max: int, bits: int, check_precision: bool = True
) -> float:
    """Max over n <= n_max of the relative error of the closed-form ln|x_n - 1/2|.

    The oracle iterates x -> 2 x (1 - x) in ``bits``-bit arithmetic. With
    ``check_precision=False`` an under-resolved run goes ahead and reports
    ``inf`` once the iterate rounds onto 1/2.
    """
    _check_x0(x0)
    n_max = _check_n(n_max, 0)
    if n_max > MAX_ORACLE_STEPS:
        raise DomainError(f"n_max must be <= {MAX_ORACLE_STEPS}")
    need = required_bits(x0, n_max)
    if check_precision and bits < need:
        raise InsufficientPrecisionError(
            f"{bits} bits cannot resolve x_{n_max} - 1/2 for x0 = {x0}; need {need}", need
        )
    with gmpy2.context(precision=bits):
        x = gmpy2.mpfr(x0)
        half = gmpy2.mpfr(0.5)
        worst = 0.0
        for n in range(n_max + 1):
            dev = x - half
            exact = exact_deviation(x0, n)
            if exact.sign == 0 or dev == 0:
                if not (exact.sign == 0 and dev == 0):
                    return math.inf
            else:
                got = gmpy2.log(abs(dev))
                want = float(exact.log_abs_dev)
                worst = max(worst, abs(float(got) - want) / abs(want))
            x = 2 * x * (1 - x)
    return worst


def effective_r(r: float) -> float:
    """Derivative 2 - r of the map at its nonzero fixed point, for r in (1, 3]."""
    if not 1.0 < r <= 3.0:
        raise DomainError(f"effective r is defined here for r in (1, 3], got {r}")
    r_eff = 2.0 - r
    if r < 3.0:
        assert abs(r_eff) < 1.0
    return r_eff
