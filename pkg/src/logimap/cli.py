"""Command-line front end: ``logimap {iterate,bounds,rate,r2,ode,verify-all}``.

Every command emits one report, either CSV (a header row plus data rows) or a
JSON object ``{command, params, results, assertions}``. Output depends only on
the arguments and the precision mode; timings go to stderr.

Exit status: 0 when every assertion holds, 1 on an assertion failure, 2 on a
usage or domain error, 3 when a resource cap is hit.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Sequence

import gmpy2
import numpy as np

from . import acceptance, flow, marginal, subcritical, superattractor
from .errors import (
    BoundViolation,
    DomainError,
    InsufficientPrecisionError,
    LogimapError,
    ResourceCapError,
)
from .mapcore import MAX_ITERATIONS, MapParams, iterate
from .precision import PRECISION_ENV, PrecisionPolicy, policy_from_env

__all__ = ["main", "build_parser", "Report"]

EXIT_OK, EXIT_ASSERTION, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

#: Largest working precision the r2 oracle is allowed to request.
MAX_ORACLE_BITS = 1 << 20


class Report:
    """Accumulates results, tabular rows and assertions for one command."""

    def __init__(self, command: str, params: dict[str, Any]):
        self.command = command
        self.params = params
        self.results: dict[str, Any] = {}
        self.columns: list[str] = []
        self.rows: list[list[Any]] = []
        self.assertions: list[dict[str, Any]] = []

    def check(self, name: str, holds: bool, lhs=None, rhs=None) -> None:
        self.assertions.append({"name": name, "holds": bool(holds), "lhs": lhs, "rhs": rhs})

    @property
    def ok(self) -> bool:
        return all(a["holds"] for a in self.assertions)

    def failures(self) -> list[str]:
        return [a["name"] for a in self.assertions if not a["holds"]]

    def to_json(self) -> str:
        obj = {
            "command": self.command,
            "params": self.params,
            "results": self.results,
            "assertions": self.assertions,
        }
        return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"

    def to_csv(self, digits: int) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.rows:
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt(v, digits) for v in row])
        else:
            writer.writerow(["name", "holds", "lhs", "rhs"])
            for a in self.assertions:
                writer.writerow([a["name"], _fmt(a["holds"], digits),
                                 _fmt(a["lhs"], digits), _fmt(a["rhs"], digits)])
        return buf.getvalue()


def _fmt(v, digits: int) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, type(gmpy2.mpfr(0))):
        return format(v, f".{digits}g")
    if isinstance(v, (float, np.floating)):
        return format(float(v), f".{digits}g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, type(gmpy2.mpfr(0))):
        # keep every bit: decimal string at the working precision
        return format(v, f".{max(17, math.ceil(v.precision * 0.30103) + 1)}g")
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".logimap-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve_precision(args) -> PrecisionPolicy:
    if args.precision is None and args.bits is None:
        return policy_from_env()
    mode = args.precision or "bigfloat"
    if mode == "bigfloat":
        if args.bits is None:
            raise DomainError("--precision bigfloat needs --bits")
        return PrecisionPolicy.bigfloat(args.bits)
    if args.bits is not None:
        raise DomainError("--bits only applies to --precision bigfloat")
    return PrecisionPolicy.parse(mode)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    """Map ``fn`` over ``items``; results keep the order of ``items``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


# -- iterate -----------------------------------------------------------------------


def _cmd_iterate(args, policy: PrecisionPolicy) -> Report:
    if args.beta == 1.0 and args.form != "verhulst":
        params = MapParams.x_form(args.r)
    else:
        params = MapParams.verhulst(args.r, args.beta)
    report = Report("iterate", {"r": args.r, "beta": args.beta, "x0": args.x0, "n": args.n,
                                "form": params.form.value, "precision": policy.label()})
    traj = iterate(params, args.x0, args.n, policy, max_iterations=args.max_iterations)
    values = list(traj.values)
    report.columns = ["n", "lambda"]
    report.rows = [[k, v] for k, v in enumerate(values)]
    report.results = {"values": values}
    return report


# -- bounds ------------------------------------------------------------------------


def _bounds_case(case) -> dict[str, Any]:
    beta, x0, n, label, max_iterations = case
    policy = PrecisionPolicy.parse(label)
    traj = iterate(marginal.marginal_params(beta), x0, n, policy, max_iterations=max_iterations)
    t1 = marginal.verify_theorem1(traj)
    sb = marginal.verify_s_bounds(traj)
    out: dict[str, Any] = {
        "beta": beta, "lambda0": x0, "n": n,
        "theorem1": {"holds": t1.holds, "first_violation": t1.first_violation,
                     "violations": t1.violations, "min_lower_gap": t1.min_lower_gap,
                     "min_upper_gap": t1.min_upper_gap},
        "s_bounds": {"s1_violations": sb.s1_violations, "s_ge2_violations": sb.s_ge2_violations,
                     "comparison_violations": sb.comparison_violations,
                     "max_s_ge2": sb.max_s_ge2, "s_ge2_bound": sb.s_ge2_bound,
                     "min_s1_margin": sb.min_s1_margin},
        "reconstruction_error": marginal.reconstruction_error(traj),
    }
    if n >= 1:
        res = marginal.residual_sweep(traj)
        rr = marginal.residual(traj, n)
        out["residual"] = {"min": float(np.min(res)), "negatives": int(np.count_nonzero(res < 0)),
                           "at_n": rr.lhs, "bound_at_n": rr.rhs_bound, "holds": rr.holds}
    return out


def _cmd_bounds(args, policy: PrecisionPolicy) -> Report:
    cases = [(b, x, args.n, policy.label(), args.max_iterations)
             for b, x in itertools.product(args.beta, args.x0)]
    for b, x, *_ in cases:
        if not (b > 0 and 0 < b * x < 1):
            raise DomainError(f"need beta > 0 and 0 < beta*x0 < 1, got beta={b}, x0={x}")
    report = Report("bounds", {"beta": args.beta, "x0": args.x0, "n": args.n,
                               "precision": policy.label()})
    outs = _pmap(_bounds_case, cases, args.parallel)
    tol = 1e-12 if not policy.is_bigfloat else 2.0 ** -(policy.bits - 20)
    for out in outs:
        tag = f"[beta={out['beta']:g},lambda0={out['lambda0']:g}]"
        t1, sb = out["theorem1"], out["s_bounds"]
        report.check(f"theorem1-sandwich{tag}", t1["holds"], t1["violations"], 0)
        report.check(f"s1-log-bound{tag}", sb["s1_violations"] == 0, sb["s1_violations"], 0)
        report.check(f"s_ge2-const-bound{tag}", sb["s_ge2_violations"] == 0,
                     sb["max_s_ge2"], sb["s_ge2_bound"])
        report.check(f"s_ge2-comparison{tag}", sb["comparison_violations"] == 0,
                     sb["comparison_violations"], 0)
        report.check(f"reconstruction{tag}", out["reconstruction_error"] <= tol,
                     out["reconstruction_error"], tol)
        if "residual" in out:
            rs = out["residual"]
            report.check(f"residual-nonnegative{tag}", rs["negatives"] == 0, rs["min"], 0.0)
            report.check(f"residual-bound{tag}", rs["holds"], rs["at_n"], rs["bound_at_n"])
    report.results = {"cases": outs}
    return report


# -- rate --------------------------------------------------------------------------


def _rate_checkpoints(n: int) -> tuple[int, ...]:
    lo = max(10, n // 100)
    return tuple(sorted({int(round(v)) for v in np.geomspace(lo, n, 9)}))


def _rate_case(case) -> dict[str, Any]:
    r, x0, n = case
    est = subcritical.rate_limit_estimate(r, x0, _rate_checkpoints(n))
    env = subcritical.verify_exp_envelope(r, x0, n)
    s = subcritical.s_log_sweep(r, x0, n)
    bound = abs(math.log1p(-x0)) / (1.0 - r)
    return {
        "r": r, "lambda0": x0, "n": n,
        "checkpoints": list(est.checkpoints), "rates": list(est.rates),
        "extrapolated": est.extrapolated, "ln_r": math.log(r),
        "correction_coef": est.correction_coef, "correction_exponent": est.correction_exponent,
        "contraction_bound": est.contraction_bound,
        "envelope_violations": env.violations,
        "max_abs_s": float(np.max(np.abs(s))), "s_bound": bound,
        "s_violations": int(np.count_nonzero(np.abs(s) > bound)),
    }


def _cmd_rate(args, policy: PrecisionPolicy) -> Report:
    if args.n < 20:
        raise DomainError("rate needs --n >= 20 for the limit fit")
    for r, x in itertools.product(args.r, args.x0):
        if not (0 < r < 1 and 0 < x < 1):
            raise DomainError(f"need 0 < r < 1 and 0 < x0 < 1, got r={r}, x0={x}")
    if args.n > args.max_iterations:
        raise ResourceCapError(f"n = {args.n} exceeds the cap {args.max_iterations}")
    cases = [(r, x, args.n) for r, x in itertools.product(args.r, args.x0)]
    report = Report("rate", {"r": args.r, "x0": args.x0, "n": args.n,
                             "precision": policy.label()})
    outs = _pmap(_rate_case, cases, args.parallel)
    report.columns = ["r", "lambda0", "n", "rate"]
    for out in outs:
        tag = f"[r={out['r']:g},lambda0={out['lambda0']:g}]"
        err = abs(out["extrapolated"] - out["ln_r"])
        report.check(f"rate-limit{tag}", err <= 1e-3, out["extrapolated"], out["ln_r"])
        report.check(f"s-bound{tag}", out["s_violations"] == 0, out["max_abs_s"], out["s_bound"])
        report.check(f"exp-envelope{tag}", out["envelope_violations"] == 0,
                     out["envelope_violations"], 0)
        for c, v in zip(out["checkpoints"], out["rates"]):
            report.rows.append([out["r"], out["lambda0"], c, v])
    report.results = {"cases": outs}
    return report


# -- r2 ----------------------------------------------------------------------------


def _cmd_r2(args, policy: PrecisionPolicy) -> Report:
    if not 0 < args.x0 < 1:
        raise DomainError(f"x0 must lie in (0, 1), got {args.x0}")
    if args.n < 0:
        raise DomainError("n must be nonnegative")
    report = Report("r2", {"x0": args.x0, "n": args.n, "precision": policy.label()})
    dev = superattractor.exact_deviation(args.x0, args.n)
    out: dict[str, Any] = {"n": args.n, "x": dev.x(), "deviation": dev.deviation(),
                           "sign": dev.sign}
    if dev.sign != 0:
        log_dev = dev.log_abs_dev
        out.update(log_dev=float(log_dev), log_dev_mantissa=log_dev.mantissa,
                   log_dev_exponent=log_dev.exponent)
        if args.n >= 1:
            out["log_decay_rate"] = superattractor.log_decay_rate(args.x0, args.n)
    report.results = out
    report.columns = list(out)
    report.rows = [list(out.values())]
    if args.n <= superattractor.MAX_ORACLE_STEPS and dev.sign != 0:
        need = superattractor.required_bits(args.x0, args.n)
        bits = policy.bits if policy.is_bigfloat else need
        if bits > MAX_ORACLE_BITS:
            raise ResourceCapError(f"the iteration oracle would need {bits} bits")
        err = superattractor.validate_against_iteration(args.x0, args.n, bits)
        report.check(f"closed-form-vs-{bits}bit-iteration", err <= 1e-9, err, 1e-9)
    return report


# -- ode ---------------------------------------------------------------------------


def _cmd_ode(args, policy: PrecisionPolicy) -> Report:
    t = np.linspace(0.0, args.t_end, args.samples)
    if args.flow == "verhulst":
        p = flow.VerhulstParams(args.a, args.b, args.N0)
        report = Report("ode", {"flow": "verhulst", "a": args.a, "b": args.b, "N0": args.N0,
                                "t_end": args.t_end, "samples": args.samples})
        N = flow.verhulst_closed_form(p, t)
        h = 1e-5
        dN = (flow.verhulst_closed_form(p, t + h) - flow.verhulst_closed_form(p, t - h)) / (2 * h)
        res = float(np.max(np.abs(dN - flow.verhulst_rhs(p, N))))
        report.check("ode-residual", res <= 1e-9, res, 1e-9)
        report.columns = ["t", "N"]
        report.rows = [[a, b] for a, b in zip(t, N)]
        report.results = {"N_inf": p.N_inf, "inflection_time": flow.verhulst_inflection_time(p)}
        return report

    p = flow.CubicFlowParams(args.beta, args.beta3, args.lambda0)
    report = Report("ode", {"flow": "cubic", "beta": args.beta, "beta3": args.beta3,
                            "lambda0": args.lambda0, "t_end": args.t_end,
                            "rel_tol": args.rel_tol, "abs_tol": args.abs_tol,
                            "samples": args.samples})
    sol = flow.integrate(p, args.t_end, args.rel_tol, args.abs_tol, args.ceiling)
    results: dict[str, Any] = {"steps": int(sol.times.size)}
    end = args.t_end
    if sol.blow_up is not None:
        results["blow_up"] = {"t_star": sol.blow_up.t_star, "reason": sol.blow_up.reason}
        end = sol.blow_up.t_star
        expected = flow.blow_up_time(args.beta3, args.lambda0) if args.beta == 0 else None
        if expected is not None:
            rel = abs(sol.blow_up.t_star / expected - 1.0)
            report.check("blow-up-time", rel <= 1e-6, sol.blow_up.t_star, expected)
    grid = t[t < end * (1 - 1e-6)] if sol.blow_up is not None else t
    lam = np.asarray(sol(grid)) if grid.size else np.array([])
    closed = None
    if args.beta3 == 0:
        closed = flow.quadratic_closed_form(args.beta, args.lambda0, grid)
    elif args.beta == 0 and args.lambda0 > 0 and sol.blow_up is None:
        closed = flow.cubic_beta0_closed_form(args.beta3, args.lambda0, grid)
    if closed is not None and grid.size:
        err = float(np.max(np.abs(lam / closed - 1.0)))
        tol = 100 * args.rel_tol
        report.check("integrator-vs-closed-form", err <= tol, err, tol)
    if args.beta > 0 and p.in_theorem3_regime and sol.blow_up is None:
        ftc = flow.ftc_bounds_check(p, sol)
        for name in ("inverse", "integral", "envelope", "log_integral"):
            v = getattr(ftc, name)
            if v is not None:
                report.check(f"ftc-{name}", v <= 1e-9, v, 1e-9)
        results["ftc"] = {k: getattr(ftc, k) for k in
                          ("inverse", "integral", "envelope", "log_integral")}
        if args.estimate_limit:
            est = flow.theorem3_estimate(p, np.geomspace(args.t_end / 100, args.t_end, 11),
                                         args.rel_tol, args.abs_tol)
            results["extrapolated_limit"] = est.extrapolated
            report.check("t-lambda-limit", abs(est.extrapolated - 1 / args.beta) <= 2e-3,
                         est.extrapolated, 1 / args.beta)
    report.columns = ["t", "lambda"] + (["closed_form"] if closed is not None else [])
    for i, (ti, li) in enumerate(zip(grid, lam)):
        report.rows.append([ti, li] + ([closed[i]] if closed is not None else []))
    report.results = results
    return report


# -- verify-all --------------------------------------------------------------------


def _cmd_verify_all(args, policy: PrecisionPolicy) -> Report:
    numbers = args.criteria or [c.number for c in acceptance.CRITERIA]
    known = {c.number for c in acceptance.CRITERIA}
    bad = [n for n in numbers if n not in known]
    if bad:
        raise DomainError(f"unknown criteria {bad}")
    report = Report("verify-all", {"criteria": numbers})
    outs = _pmap(acceptance.run_criterion, numbers, args.parallel)
    table = []
    report.columns = ["criterion", "title", "passed", "failed_checks"]
    for res in outs:
        print(f"criterion {res.number}: {res.elapsed:.2f} s", file=sys.stderr)
        failed = [c.name for c in res.checks if not c.holds]
        table.append({"criterion": res.number, "title": res.title, "passed": res.passed,
                      "failed_checks": failed})
        report.rows.append([res.number, res.title, res.passed, ";".join(failed)])
        for c in res.checks:
            report.check(f"c{res.number}:{c.name}", c.holds, c.lhs, c.rhs)
    report.results = {"table": table}
    return report


# -- wiring ------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--output", "-o", help="write the report to this file (atomically)")
    p.add_argument("--digits", type=int, default=17, help="significant digits in CSV output")
    p.add_argument("--precision", choices=("double", "double-naive", "compensated", "bigfloat"),
                   help=f"arithmetic mode (default: ${PRECISION_ENV} or compensated double)")
    p.add_argument("--bits", type=int, help="BigFloat working precision in bits")
    p.add_argument("--max-iterations", type=int, default=MAX_ITERATIONS)
    p.add_argument("--parallel", type=int, default=1, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logimap", description="Logistic map asymptotics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("iterate", help="iterate the map and print the orbit")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--form", choices=("x", "verhulst"), default="x")
    _common(p)

    p = sub.add_parser("bounds", help="r = 1 envelope, S-sum and residual checks")
    p.add_argument("--beta", type=_floats, default=[1.0], help="comma-separated sweep")
    p.add_argument("--x0", type=_floats, required=True, help="comma-separated sweep")
    p.add_argument("--n", type=int, required=True)
    _common(p)

    p = sub.add_parser("rate", help="0 < r < 1 rate ln x_n / n and its limit")
    p.add_argument("--r", type=_floats, required=True, help="comma-separated sweep")
    p.add_argument("--x0", type=_floats, required=True, help="comma-separated sweep")
    p.add_argument("--n", type=int, default=10_000)
    _common(p)

    p = sub.add_parser("r2", help="r = 2 closed-form deviation from 1/2")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    _common(p)

    p = sub.add_parser("ode", help="integrate the cubic flow or evaluate Verhulst")
    p.add_argument("--flow", choices=("cubic", "verhulst"), default="cubic")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--beta3", type=float, default=0.0)
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--N0", type=float, default=0.5)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--abs-tol", type=float, default=1e-15)
    p.add_argument("--ceiling", type=float, default=flow.DEFAULT_CEILING)
    p.add_argument("--estimate-limit", action="store_true",
                   help="also extrapolate lim t lambda(t) over [t_end/100, t_end]")
    _common(p)

    p = sub.add_parser("verify-all", help="run the acceptance criteria")
    p.add_argument("--criteria", type=int, nargs="*", help="subset of criterion numbers")
    _common(p)
    return parser


_COMMANDS = {
    "iterate": _cmd_iterate,
    "bounds": _cmd_bounds,
    "rate": _cmd_rate,
    "r2": _cmd_r2,
    "ode": _cmd_ode,
    "verify-all": _cmd_verify_all,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        if args.digits < 1 or args.parallel < 1 or args.max_iterations < 0:
            raise DomainError("--digits and --parallel must be positive")
        if getattr(args, "n", 0) is not None and getattr(args, "n", 0) < 0:
            raise DomainError("--n must be nonnegative")
        policy = _resolve_precision(args)
        report = _COMMANDS[args.command](args, policy)
    except (ResourceCapError, InsufficientPrecisionError) as exc:
        print(f"logimap: resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except BoundViolation as exc:
        print(f"logimap: assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except (DomainError, LogimapError) as exc:
        print(f"logimap: {exc}", file=sys.stderr)
        return EXIT_USAGE

    text = report.to_csv(args.digits) if args.format == "csv" else report.to_json()
    if args.output:
        _write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    print(f"logimap {args.command}: {time.perf_counter() - start:.3f} s", file=sys.stderr)
    if not report.ok:
        for name in report.failures()[:5]:
            print(f"logimap: FAILED {name}", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK
