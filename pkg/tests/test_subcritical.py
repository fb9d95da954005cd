from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logimap import BoundViolation, DomainError, MapParams, PrecisionPolicy, iterate
from logimap import subcritical as sc


def test_exp_upper_bound_examples():
    assert sc.exp_upper_bound(0.5, 0.5, 1) == 0.25
    assert iterate(MapParams.x_form(0.5), 0.5, 1).values[1] == 0.125
    assert sc.exp_upper_bound(0.5, 0.5, 0) == 0.5
    lam = iterate(MapParams.x_form(0.9), 0.9, 100).values[100]
    assert lam <= sc.exp_upper_bound(0.9, 0.9, 100) == 0.9**100 * 0.9
    with pytest.raises(DomainError):
        sc.exp_upper_bound(1.0, 0.5, 3)
    with pytest.raises(DomainError):
        sc.exp_upper_bound(0.5, 1.0, 3)


@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("lam0", [0.1, 0.5, 0.9])
def test_exp_envelope_sweep(r, lam0):
    rep = sc.verify_exp_envelope(r, lam0, 10**5)
    assert rep.holds and rep.violations == 0 and rep.min_log_gap >= 0


def test_log_orbit_matches_direct_iteration_and_survives_underflow():
    logs = sc.log_orbit(0.1, 0.5, 2000)
    direct = iterate(MapParams.x_form(0.1), 0.5, 2000).values
    above = direct > 1e-290
    assert np.allclose(logs[above], np.log(direct[above]), rtol=1e-13, atol=0)
    assert np.all(np.isfinite(logs)) and np.all(np.diff(logs) < 0)
    assert direct[-1] == 0.0  # double underflow that the log recursion avoids
    assert logs[-1] / 2000 == pytest.approx(math.log(0.1), abs=1e-3)


def test_rate_analysis_example():
    traj = sc.subcritical_trajectory(0.5, 0.5, 2)
    ra = sc.rate_analysis(traj, 2)
    assert traj.values[2] == 0.0546875
    assert ra.s_log == pytest.approx(math.log(0.5) + math.log(0.875), rel=1e-15)
    assert ra.s_log == pytest.approx(-0.82668, abs=1e-5)
    assert ra.log_rate == pytest.approx(math.log(0.0546875) / 2, rel=1e-15)
    assert ra.s_log_bound == pytest.approx(math.log(2) / 0.5, rel=1e-15)
    assert ra.s_log_bound == pytest.approx(1.3863, abs=1e-4)
    assert ra.identity_holds and ra.s_bound_holds


def test_rate_analysis_small_lambda0():
    ra = sc.rate_analysis(sc.subcritical_trajectory(0.5, 1e-8, 2000), 2000)
    assert abs(ra.s_log) < 3e-8
    assert ra.log_rate - math.log(0.5) == pytest.approx(math.log(1e-8) / 2000, rel=1e-6)


def test_rate_analysis_rejects():
    traj = sc.subcritical_trajectory(0.5, 0.5, 5)
    with pytest.raises(DomainError):
        sc.rate_analysis(traj, 0)
    with pytest.raises(DomainError):
        sc.rate_analysis(traj, 6)
    with pytest.raises(DomainError):
        sc.rate_analysis(iterate(MapParams.verhulst(0.5, 2.0), 0.2, 5), 5)


@given(r=st.floats(0.01, 0.99), lam0=st.floats(1e-6, 0.999), n=st.integers(1, 3000))
def test_identity_and_s_bound(r, lam0, n):
    ra = sc.rate_analysis(sc.subcritical_trajectory(r, lam0, n), n)
    assert ra.identity_holds and ra.s_bound_holds


def test_rate_analysis_through_underflow():
    ra = sc.rate_analysis(sc.subcritical_trajectory(0.1, 0.5, 5000), 5000)
    assert ra.identity_holds and ra.log_rate == pytest.approx(math.log(0.1), abs=1e-3)


def test_rate_analysis_bigfloat():
    traj = sc.subcritical_trajectory(0.5, 0.5, 200, PrecisionPolicy.bigfloat(128))
    assert sc.rate_analysis(traj, 200).identity_holds


@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("lam0", [0.1, 0.5, 0.9])
def test_s_sweep_uniform_bound(r, lam0):
    s = sc.s_log_sweep(r, lam0, 10**5)
    assert s[0] == 0.0 and np.all(np.diff(s) <= 0)
    assert np.max(np.abs(s)) <= abs(math.log1p(-lam0)) / (1 - r)


def test_convexity_examples():
    assert sc.convexity_bound_check(0.5, [0.25])
    assert -math.log(0.75) == pytest.approx(0.2877, abs=1e-4)
    assert sc.convexity_bound_check(0.5, [0.0, 0.5])
    with pytest.raises(DomainError):
        sc.convexity_bound_check(0.5, [0.6])


@given(lam0=st.floats(1e-6, 0.999999))
def test_convexity_dense_grid(lam0):
    assert sc.convexity_bound_check(lam0, np.linspace(0.0, lam0, 257))


def test_rate_limit_examples():
    est = sc.rate_limit_estimate(0.5, 0.9)
    assert est.extrapolated == pytest.approx(-0.6931, abs=1e-3)
    assert est.checkpoints[-1] == 10**4
    est = sc.rate_limit_estimate(0.1, 0.5, np.geomspace(10, 1000, 9).astype(int))
    assert est.extrapolated == pytest.approx(-2.3026, abs=1e-3)
    assert est.correction_exponent == pytest.approx(-1.0, abs=0.05)
    assert est.contraction_bound == math.log(0.1)


def test_rates_approach_zero_from_below_as_r_grows():
    rates = [sc.rate_limit_estimate(r, 0.5, (100, 200, 400)).rates[-1]
             for r in (0.9, 0.99, 0.999, 0.9999)]
    assert all(v < 0 for v in rates)
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_measured_rate_is_sharper_than_the_contraction_bound():
    # the contraction argument only says rate <= ln r; the measured rate attains it
    for r in (0.1, 0.5, 0.9):
        est = sc.rate_limit_estimate(r, 0.5)
        assert all(v <= math.log(r) + 1e-12 for v in est.rates)
        assert abs(est.extrapolated - est.contraction_bound) <= 1e-3


def test_lipschitz_examples():
    assert sc.lipschitz_factor(0.5, 0.3, 0.1) == pytest.approx(0.06, rel=1e-14)
    assert sc.lipschitz_factor(0.5, 0.4, 0.4) == 0.0
    assert sc.lipschitz_factor(0.5, 1.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        sc.lipschitz_factor(0.5, 1.5, 0.0)


@given(r=st.floats(0.01, 1.0), x=st.floats(0.0, 1.0), y=st.floats(0.0, 1.0))
def test_lipschitz_property(r, x, y):
    v = sc.lipschitz_factor(r, x, y)
    assert abs(v) <= r * abs(x - y) * (1 + 1e-15)


@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
def test_contraction_grid(r):
    rep = sc.contraction_grid_check(r, 200)
    assert rep.violations == 0 and rep.max_ratio <= 1 + 1e-12
    assert rep.max_identity_error <= 1e-15


def test_endpoint_start_collapses():
    assert list(iterate(MapParams.x_form(0.5), 1.0, 3).values) == [1.0, 0.0, 0.0, 0.0]


def test_exceeding_the_bound_is_reported():
    traj = sc.subcritical_trajectory(0.5, 0.5, 10)
    values = traj.values.copy()
    values[10] *= 1.01
    with pytest.raises(BoundViolation):
        sc.rate_analysis(sc.Trajectory(traj.params, traj.x0, values, traj.precision), 10)
