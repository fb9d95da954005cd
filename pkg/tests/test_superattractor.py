from __future__ import annotations

import math
from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logimap import DomainError, ExtendedReal, InsufficientPrecisionError
from logimap import superattractor as sa

LN2 = math.log(2.0)
SIX = (0.1, 0.25, 0.4, 0.6, 0.75, 0.9)


def test_exact_deviation_examples():
    d = sa.exact_deviation(0.25, 1)
    assert float(d.log_abs_dev) == pytest.approx(-3 * LN2, rel=1e-15)
    assert d.x() == 0.375 == 2 * 0.25 * 0.75
    d = sa.exact_deviation(0.25, 2)
    assert d.x() == 0.46875 == 2 * 0.375 * 0.625
    assert float(d.log_abs_dev) == pytest.approx(-5 * LN2, rel=1e-15)
    for n in (0, 1, 7, 10**6):
        d = sa.exact_deviation(0.5, n)
        assert d.sign == 0 and d.x() == 0.5


def test_n_zero_returns_initial_deviation():
    d = sa.exact_deviation(0.3, 0)
    assert d.sign == -1 and d.x() == pytest.approx(0.3, abs=1e-16)
    assert float(d.log_abs_dev) == pytest.approx(math.log(0.2), rel=1e-15)
    assert sa.exact_deviation(0.8, 0).sign == 1


def test_domain():
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(DomainError):
            sa.exact_deviation(bad, 3)
    with pytest.raises(DomainError):
        sa.exact_deviation(0.3, -1)


@pytest.mark.parametrize("x0", [Fraction(1, 10), Fraction(1, 4), Fraction(2, 5), Fraction(3, 4),
                                Fraction(9, 10), Fraction(3, 10)])
def test_closed_form_matches_rational_iteration(x0):
    # x_n - 1/2 = -(1/2)(2 x0 - 1)^(2^n) holds exactly in the rationals
    x = x0
    for n in range(1, 7):
        x = 2 * x * (1 - x)
        assert x - Fraction(1, 2) == -Fraction(1, 2) * (2 * x0 - 1) ** (2**n)
        d = sa.exact_deviation(float(x0), n)
        exact_log = math.log(float(abs(2 * x0 - 1))) * 2**n - LN2
        assert float(d.log_abs_dev) == pytest.approx(exact_log, rel=1e-14)


@given(x0=st.floats(0.001, 0.999).filter(lambda v: v != 0.5), n=st.integers(1, 10**6))
def test_sign_below_half(x0, n):
    d = sa.exact_deviation(x0, n)
    assert d.sign == -1
    assert d.deviation() <= 0.0 and d.x() <= 0.5


@given(x0=st.floats(0.001, 0.999).filter(lambda v: v != 0.5), n=st.integers(0, 10**6))
def test_doubling_law(x0, n):
    a = sa.exact_deviation(x0, n).shifted_log
    b = sa.exact_deviation(x0, n + 1).shifted_log
    assert b == a.ldexp(1)
    assert b.mantissa == a.mantissa and b.exponent == a.exponent + 1


def test_doubling_law_full_range():
    for x0 in SIX:
        mant, expo = sa.shifted_log_sweep(x0, 10**6)
        assert np.all(mant == mant[0]) and np.all(np.diff(expo) == 1)
        d = sa.exact_deviation(x0, 10**6).shifted_log
        assert (d.mantissa, d.exponent) == (mant[-1], expo[-1])


def test_no_overflow_at_a_million_steps():
    d = sa.exact_deviation(0.25, 10**6)
    assert math.isinf(float(d.log_abs_dev))  # a double cannot hold it
    assert math.isfinite((-d.log_abs_dev).log())  # the extended value is finite
    assert d.log_abs_dev.exponent >= 10**6
    assert d.deviation() == 0.0 and d.x() == 0.5


def test_decay_rate_examples():
    assert float(sa.decay_rate(0.25, 3)) == pytest.approx(8 * LN2 / 3, rel=1e-15)
    assert float(sa.decay_rate(0.25, 3)) == pytest.approx(1.84839, abs=1e-5)
    assert float(sa.decay_rate(0.25, 1)) == pytest.approx(2 * LN2, rel=1e-15)
    assert float(sa.decay_rate(0.25, 1)) == pytest.approx(1.38629, abs=1e-5)
    rates = [float(sa.decay_rate(0.5 + d, 5)) for d in (1e-1, 1e-3, 1e-6, 1e-12)]
    assert all(a < b for a, b in zip(rates, rates[1:]))
    with pytest.raises(DomainError):
        sa.decay_rate(0.5, 3)
    with pytest.raises(DomainError):
        sa.decay_rate(0.25, 0)


@given(x0=st.floats(0.001, 0.999).filter(lambda v: v != 0.5), n=st.integers(2, 10**6))
def test_rate_explosion(x0, n):
    step = sa.log_decay_rate(x0, n) - sa.log_decay_rate(x0, n - 1)
    want = LN2 - math.log(n / (n - 1))
    scale = n * LN2 + abs(math.log(abs(math.log(abs(2 * x0 - 1))))) + math.log(n)
    assert abs(step - want) <= 8 * math.ulp(scale)
    # rate(2) = rate(1); strictly increasing from there on
    if n >= 3:
        assert step > 0
    ratio = sa.decay_rate(x0, n) / sa.decay_rate(x0, n - 1)
    assert float(ratio) == pytest.approx(2 * (n - 1) / n, rel=4e-16)


def test_log_decay_rate_consistent_with_extended_value():
    for n in (1, 10, 1000, 10**6):
        assert sa.log_decay_rate(0.25, n) == pytest.approx(sa.decay_rate(0.25, n).log(), rel=1e-14)


def test_validation_examples():
    assert sa.validate_against_iteration(0.25, 10, 2048) <= 1e-9
    assert sa.validate_against_iteration(0.9, 8, 1024) <= 1e-9
    assert sa.validate_against_iteration(0.5, 10, 2048) == 0.0


@pytest.mark.parametrize("x0", SIX)
def test_validation_at_the_required_precision(x0):
    bits = sa.required_bits(x0, 10)
    assert sa.validate_against_iteration(x0, 10, bits) <= 1e-9


def test_precision_floor_depends_on_the_initial_condition():
    # |x_10 - 1/2| ~ 2^-2379 for x0 = 0.4: below what 2048 bits can resolve next to 1/2
    assert sa.required_bits(0.4, 10) > 2048 >= sa.required_bits(0.25, 10)
    with pytest.raises(InsufficientPrecisionError) as info:
        sa.validate_against_iteration(0.4, 10, 2048)
    assert info.value.required_bits == sa.required_bits(0.4, 10)
    assert sa.validate_against_iteration(0.4, 10, 2048, check_precision=False) == math.inf
    with gmpy2.context(precision=2048):
        x = gmpy2.mpfr(0.4)
        for _ in range(10):
            x = 2 * x * (1 - x)
        assert x == gmpy2.mpfr(0.5)  # the orbit has rounded onto the fixed point


def test_validation_rejects():
    with pytest.raises(DomainError):
        sa.validate_against_iteration(0.25, 13, 10**5)
    with pytest.raises(InsufficientPrecisionError):
        sa.validate_against_iteration(0.25, 10, 1000)


def test_effective_r():
    assert sa.effective_r(2.0) == 0.0
    assert sa.effective_r(1.5) == 0.5
    assert sa.effective_r(3.0) == -1.0
    for bad in (1.0, 3.5, 0.5):
        with pytest.raises(DomainError):
            sa.effective_r(bad)


@given(r=st.floats(1.0, 3.0, exclude_min=True, exclude_max=True))
def test_effective_r_contracts(r):
    assert abs(sa.effective_r(r)) < 1


def test_extended_scale_holds_the_shifted_log():
    d = sa.exact_deviation(0.1, 2000)
    assert d.shifted_log == ExtendedReal.of(math.log(0.8), 2000)
