from __future__ import annotations

import math
from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logimap import DomainError, Mode, PrecisionPolicy, Summation, policy_from_env
from logimap.extrapolation import fit_inverse_power, fit_log_linear
from logimap.precision import PRECISION_ENV


def test_policy_defaults():
    p = PrecisionPolicy.double()
    assert p.mode is Mode.DOUBLE and p.summation is Summation.COMPENSATED
    assert PrecisionPolicy.compensated().summation is Summation.COMPENSATED
    assert PrecisionPolicy.bigfloat(64).summation is Summation.NAIVE


def test_policy_validation():
    with pytest.raises(DomainError):
        PrecisionPolicy.bigfloat(63)
    with pytest.raises(DomainError):
        PrecisionPolicy(Mode.DOUBLE_COMPENSATED, summation=Summation.NAIVE)


@pytest.mark.parametrize("text, label", [("double", "double"), ("double-naive", "double-naive"),
                                         ("compensated", "compensated"),
                                         ("bigfloat:256", "bigfloat:256"),
                                         (" BigFloat:128 ", "bigfloat:128")])
def test_parse_roundtrip(text, label):
    assert PrecisionPolicy.parse(text).label() == label
    assert PrecisionPolicy.parse(label) == PrecisionPolicy.parse(text)


@pytest.mark.parametrize("text", ["single", "bigfloat", "bigfloat:abc", "bigfloat:32"])
def test_parse_rejects(text):
    with pytest.raises(DomainError):
        PrecisionPolicy.parse(text)


def test_env_override(monkeypatch):
    monkeypatch.delenv(PRECISION_ENV, raising=False)
    assert policy_from_env() == PrecisionPolicy.double()
    monkeypatch.setenv(PRECISION_ENV, "bigfloat:200")
    assert policy_from_env() == PrecisionPolicy.bigfloat(200)


@given(st.lists(st.floats(-1e6, 1e6), min_size=0, max_size=300))
def test_compensated_cumsum_final_is_exact_to_one_rounding(terms):
    out = PrecisionPolicy.double().cumsum(terms)
    assert out.size == len(terms) + 1 and out[0] == 0.0
    exact = float(sum((Fraction(t) for t in terms), Fraction(0)))
    # Neumaier bound: one final rounding plus a second-order term in eps
    eps = 2.0**-52
    second_order = len(terms) * eps * eps * sum(abs(t) for t in terms)
    assert abs(out[-1] - exact) <= 2 * math.ulp(exact) + second_order


def test_compensated_beats_naive_on_harmonic_tail():
    terms = 1.0 / np.arange(1, 10**6 + 1, dtype=np.float64)
    exact = math.fsum(terms)
    comp = PrecisionPolicy.double().cumsum(terms)[-1]
    naive = PrecisionPolicy.double(Summation.NAIVE).cumsum(terms)[-1]
    assert abs(comp - exact) <= math.ulp(exact)
    assert abs(naive - exact) >= abs(comp - exact)


def test_bigfloat_cumsum_and_sum():
    p = PrecisionPolicy.bigfloat(128)
    with p.context():
        terms = [gmpy2.mpfr(1) / 3] * 3
    out = p.cumsum(terms)
    assert out.dtype == object and abs(float(out[-1]) - 1.0) < 1e-30
    assert p.sum([0.5, 0.25]) == 0.75


def test_context_is_scoped():
    before = gmpy2.get_context().precision
    with PrecisionPolicy.bigfloat(300).context():
        assert gmpy2.get_context().precision == 300
    assert gmpy2.get_context().precision == before


def test_slack():
    d = PrecisionPolicy.double()
    assert d.slack(1.0) == 4 * np.spacing(1.0)
    assert PrecisionPolicy.bigfloat(256).slack(1.0) == 0
    assert float(PrecisionPolicy.bigfloat(128).slack(1.0)) == 4 * 2.0**-127
    assert d.unit_roundoff == 2.0**-53


# -- extrapolation fits --------------------------------------------------------------


def test_fit_log_linear_recovers_exact_model():
    x = np.geomspace(1e3, 1e6, 11)
    y = 2.0 * x + 0.7 * np.log(x) + 3.0
    fit = fit_log_linear(x, y)
    assert fit.slope == pytest.approx(2.0, rel=1e-12)
    assert fit.log_coef == pytest.approx(0.7, rel=1e-6)
    assert fit.intercept == pytest.approx(3.0, rel=1e-4)
    assert fit.limit == pytest.approx(0.5, rel=1e-12)


def test_fit_inverse_power_recovers_exact_model():
    x = np.geomspace(100, 1e4, 9)
    fit = fit_inverse_power(x, -0.7 + 2.5 / x)
    assert fit.limit == pytest.approx(-0.7, abs=1e-13)
    assert fit.coef == pytest.approx(2.5, rel=1e-10)


def test_fits_need_enough_points():
    with pytest.raises(DomainError):
        fit_log_linear([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        fit_inverse_power([1.0], [1.0])
