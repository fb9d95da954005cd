"""The twelve acceptance criteria as executable checks.

Each criterion returns a list of :class:`Check` records; a criterion passes
when every check holds. Runtime limits are checks too, but their measured
value is kept out of ``lhs`` so reports stay byte-identical across runs.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import flow, marginal, subcritical, superattractor
from .mapcore import MapParams, empirical_convergence, iterate
from .precision import PrecisionPolicy

__all__ = ["Check", "CriterionResult", "CRITERIA", "run_criterion", "run_all"]


@dataclass(frozen=True)
class Check:
    name: str
    holds: bool
    lhs: float | None = None
    rhs: float | None = None


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    checks: tuple[Check, ...]
    elapsed: float = field(compare=False)

    @property
    def passed(self) -> bool:
        return all(c.holds for c in self.checks)

    def summary(self) -> str:
        failed = [c.name for c in self.checks if not c.holds]
        status = "PASS" if self.passed else "FAIL"
        tail = f" (failed: {', '.join(failed)})" if failed else ""
        return f"[{status}] criterion {self.number:2d}: {self.title}{tail}"


@dataclass(frozen=True)
class _Criterion:
    number: int
    title: str
    run: Callable[[], list[Check]]
    time_limit: float | None = None


_BETAS = (0.5, 1.0, 2.0)


def _sweep_configs():
    for beta in _BETAS:
        for k in range(1, 10):
            yield beta, k / (10 * beta)


def _c1() -> list[Check]:
    checks = []
    for beta, lam0 in _sweep_configs():
        traj = iterate(marginal.marginal_params(beta), lam0, 10**6)
        rep = marginal.verify_theorem1(traj)
        checks.append(Check(f"sandwich[beta={beta},lambda0={lam0:.6g}]", rep.holds,
                            float(rep.violations), 0.0))
    return checks


def _c2() -> list[Check]:
    checks = []
    for beta in _BETAS:
        limits = []
        for frac in (0.1, 0.3, 0.5):
            est = marginal.theorem2_estimate(beta, frac / beta)
            rel = abs(est.extrapolated_limit * beta - 1.0)
            limits.append(est.extrapolated_limit)
            checks.append(Check(f"limit[beta={beta},beta*lambda0={frac}]", rel <= 1e-3,
                                rel, 1e-3))
        spread = max(abs(a - b) for a, b in itertools.combinations(limits, 2)) * beta
        checks.append(Check(f"lambda0-independence[beta={beta}]", spread <= 2e-3, spread, 2e-3))
    return checks


def _c3() -> list[Check]:
    checks = []
    wide = PrecisionPolicy.bigfloat(256)
    for beta in _BETAS:
        for frac in (0.1, 0.5, 0.9):
            params = marginal.marginal_params(beta)
            err = marginal.reconstruction_error(iterate(params, frac / beta, 10**5))
            checks.append(Check(f"double[beta={beta},beta*lambda0={frac}]", err <= 1e-12,
                                err, 1e-12))
            err = marginal.reconstruction_error(iterate(params, frac / beta, 10**4, wide))
            checks.append(Check(f"bigfloat256[beta={beta},beta*lambda0={frac}]",
                                err <= 2.0**-236, err, 2.0**-236))
    return checks


def _c4() -> list[Check]:
    checks = []
    for beta, lam0 in _sweep_configs():
        res = marginal.residual_sweep(iterate(marginal.marginal_params(beta), lam0, 10**6))
        negatives = int(np.count_nonzero(res < 0))
        checks.append(Check(f"residual>=0[beta={beta},lambda0={lam0:.6g}]", negatives == 0,
                            float(negatives), 0.0))
    return checks


def _c5() -> list[Check]:
    rep = marginal.stream_s_bounds(1.0, 0.5, 10**7)
    return [
        Check("s1<=log-bound", rep.s1_violations == 0, float(rep.s1_violations), 0.0),
        Check("s_ge2<=const-bound", rep.s_ge2_violations == 0, rep.max_s_ge2, rep.s_ge2_bound),
    ]


def _c6() -> list[Check]:
    checks = []
    for r in (0.1, 0.5, 0.9):
        for lam0 in (0.1, 0.9):
            est = subcritical.rate_limit_estimate(r, lam0)
            err = abs(est.extrapolated - math.log(r))
            checks.append(Check(f"rate[r={r},lambda0={lam0}]", err <= 1e-3, err, 1e-3))
            s = subcritical.s_log_sweep(r, lam0, 10**4)
            bound = abs(math.log1p(-lam0)) / (1.0 - r)
            bad = int(np.count_nonzero(np.abs(s) > bound))
            checks.append(Check(f"|S|<=bound[r={r},lambda0={lam0}]", bad == 0,
                                float(np.max(np.abs(s))), bound))
    return checks


def _c7() -> list[Check]:
    checks = []
    for r in (0.1, 0.5, 0.9):
        rep = subcritical.contraction_grid_check(r, 200)
        checks.append(Check(f"lipschitz-grid[r={r}]", rep.violations == 0,
                            float(rep.violations), 0.0))
        est = subcritical.rate_limit_estimate(r, 0.5)
        ok = abs(est.extrapolated - math.log(r)) <= 1e-3
        # lhs: measured rate; rhs: ln r, which the contraction argument only gives as a bound
        checks.append(Check(f"measured-rate-vs-contraction[r={r}]", ok,
                            est.extrapolated, est.contraction_bound))
    return checks


R2_INITIAL_CONDITIONS = (0.1, 0.25, 0.4, 0.6, 0.75, 0.9)


def _c8() -> list[Check]:
    checks = []
    for x0 in R2_INITIAL_CONDITIONS:
        # run unconditionally: under-resolved orbits report their actual (infinite) error
        err = superattractor.validate_against_iteration(x0, 10, 2048, check_precision=False)
        checks.append(Check(f"closed-form-vs-2048bit[x0={x0}]", err <= 1e-9, err, 1e-9))
    n_max = 10**6
    for x0 in R2_INITIAL_CONDITIONS:
        mant, expo = superattractor.shifted_log_sweep(x0, n_max)
        exact = bool(np.all(mant[1:] == mant[:-1]) and np.all(expo[1:] == expo[:-1] + 1))
        for n in range(0, n_max, 9973):
            prev = superattractor.exact_deviation(x0, n).shifted_log
            nxt = superattractor.exact_deviation(x0, n + 1).shifted_log
            same = prev.mantissa == mant[n] and prev.exponent == expo[n]
            exact = exact and same and nxt == prev.ldexp(1)
        checks.append(Check(f"doubling-law[x0={x0}]", exact))
    return checks


def _t3_cases():
    for beta, beta3 in ((1.0, 1.0), (1.0, -0.5), (2.0, -1.0)):
        yield beta, beta3


def _c9() -> list[Check]:
    checks = []
    for beta, beta3 in _t3_cases():
        limits = []
        for f in (0.2, 0.5, 0.9):
            if beta3 < 0:
                p = flow.CubicFlowParams.from_fraction(beta, beta3, f)
            else:
                p = flow.CubicFlowParams(beta, beta3, f * beta / beta3)
            est = flow.theorem3_estimate(p)
            err = abs(est.extrapolated - 1.0 / beta)
            limits.append(est.extrapolated)
            checks.append(Check(f"limit[beta={beta},beta3={beta3},f={f}]", err <= 2e-3,
                                err, 2e-3))
        spread = max(abs(a - b) for a, b in itertools.combinations(limits, 2))
        checks.append(Check(f"lambda0-independence[beta={beta},beta3={beta3}]",
                            spread <= 4e-3, spread, 4e-3))
    t = np.linspace(0.0, 1e3, 2001)
    sol = flow.integrate(flow.CubicFlowParams(1.0, 0.0, 1.0), 1e3, rel_tol=1e-10)
    err = float(np.max(np.abs(sol(t) / flow.quadratic_closed_form(1.0, 1.0, t) - 1.0)))
    checks.append(Check("integrator-vs-quadratic", err <= 1e-9, err, 1e-9))
    sol = flow.integrate(flow.CubicFlowParams(0.0, 0.5, 1.0), 1e3, rel_tol=1e-10)
    err = float(np.max(np.abs(sol(t) / flow.cubic_beta0_closed_form(0.5, 1.0, t) - 1.0)))
    checks.append(Check("integrator-vs-cubic", err <= 1e-9, err, 1e-9))
    return checks


def _c10() -> list[Check]:
    checks = []
    for beta3 in (-0.5, -1.0, -2.0):
        for lam0 in (0.5, 1.0, 2.0):
            expected = 1.0 / (2.0 * abs(beta3) * lam0 * lam0)
            sol = flow.integrate(flow.CubicFlowParams(0.0, beta3, lam0), 2.0 * expected)
            if sol.blow_up is None:
                checks.append(Check(f"t*[beta3={beta3},lambda0={lam0}]", False, None, expected))
                continue
            rel = abs(sol.blow_up.t_star / expected - 1.0)
            checks.append(Check(f"t*[beta3={beta3},lambda0={lam0}]", rel <= 1e-6, rel, 1e-6))
    return checks


def _c11() -> list[Check]:
    checks = []
    h = 1e-5
    t = np.linspace(0.0, 20.0, 2001)
    for a, b, N0 in ((1.0, 1.0, 0.5), (2.0, 0.5, 0.1), (0.5, 2.0, 1.0)):
        p = flow.VerhulstParams(a, b, N0)
        N = flow.verhulst_closed_form(p, t)
        dN = (flow.verhulst_closed_form(p, t + h) - flow.verhulst_closed_form(p, t - h)) / (2 * h)
        res = float(np.max(np.abs(dN - a * N + b * N * N)))
        checks.append(Check(f"ode-residual[a={a},b={b},N0={N0}]", res <= 1e-9, res, 1e-9))
    for b, N0 in ((2.0, 1.0), (1.0, 2.0), (0.5, 4.0)):
        v = float(flow.malthus_brake_limit(b, N0, 0.0, 1e6)) * 1e6
        rel = abs(v * b - 1.0)
        checks.append(Check(f"malthus-limit[b={b},N0={N0}]", rel <= 1e-6, rel, 1e-6))
    return checks


def _c12() -> list[Check]:
    checks = []
    for r in (1.5, 2.5, 2.9):
        for x0 in (0.1, 0.5, 0.9):
            rep = empirical_convergence(MapParams.x_form(r), x0, 1e-8, 10**4)
            dev = abs(rep.final_value - (r - 1.0) / r)
            checks.append(Check(f"converged[r={r},x0={x0}]", rep.converged, dev, 1e-8))
    return checks


CRITERIA: tuple[_Criterion, ...] = (
    _Criterion(1, "Theorem 1 sandwich, 27 orbits, n <= 1e6", _c1, 30.0),
    _Criterion(2, "n lambda_n -> 1/beta and lambda0 independence", _c2, 60.0),
    _Criterion(3, "reconstruction identity (double and 256-bit)", _c3),
    _Criterion(4, "residual 1/(n lambda_n) - beta >= 0", _c4),
    _Criterion(5, "S1 and S_ge2 bounds, n <= 1e7", _c5, 60.0),
    _Criterion(6, "subcritical rate ln x_n / n -> ln r, |S| bound", _c6),
    _Criterion(7, "contraction grid and measured rate", _c7),
    _Criterion(8, "r = 2 closed form and doubling law", _c8, 10.0),
    _Criterion(9, "cubic flow t lambda(t) -> 1/beta, integrator oracle", _c9),
    _Criterion(10, "finite-time blow-up", _c10),
    _Criterion(11, "Verhulst ODE residual and Malthus brake", _c11),
    _Criterion(12, "empirical convergence for 1 < r < 3", _c12),
)


def run_criterion(number: int) -> CriterionResult:
    crit = next((c for c in CRITERIA if c.number == number), None)
    if crit is None:
        raise KeyError(f"no criterion {number}")
    start = time.perf_counter()
    checks = list(crit.run())
    elapsed = time.perf_counter() - start
    if crit.time_limit is not None:
        checks.append(Check(f"runtime<{crit.time_limit:g}s", elapsed < crit.time_limit,
                            None, crit.time_limit))
    return CriterionResult(crit.number, crit.title, tuple(checks), elapsed)


def run_all(numbers=None) -> list[CriterionResult]:
    numbers = [c.number for c in CRITERIA] if numbers is None else list(numbers)
    return [run_criterion(n) for n in numbers]
