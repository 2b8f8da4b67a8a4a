"""Command-line front end: eval, tabulate, verify, optimality, bench.

Exit codes: 0 success, 1 verification failure or I/O error, 2 usage or
domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import evalcore
from .boundfam import LOWER_K, PI, UPPER_K, a_threshold, g, h_gap, komatsu_lower, komatsu_upper
from .errors import ConvergenceError, DomainError, PrecisionError
from .evalcore import Method, eval_v
from .verify import (
    DEFAULT_GRID,
    DEFAULT_TOL,
    CounterexampleKind,
    GridSpec,
    Spacing,
    check_derivative_equivalence,
    check_monotone_convex,
    enclosure_reports,
    find_crossing,
    grid_points,
    optimality_suite,
)

CSV_HEADER = ("x", "v", "g_pi", "g_4", "komatsu_lo", "komatsu_hi", "gap", "rel_width")
DERIV_KS = (3.1, 3.5, 3.9, 4.0)
BENCH_POINTS = 10_000
# oracle and ODE cost milliseconds per point; they get every SLOW_STRIDE-th point
SLOW_STRIDE = 1000

SABOTAGE_TARGETS = {"pi": "lower_k", "four": "upper_k"}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class OutputRecord:
    x: float
    v: float
    g_pi: float
    g_4: float
    komatsu_lo: float
    komatsu_hi: float
    gap: float
    rel_width: float


def _fmt(v: float) -> str:
    return format(v, ".17g")


def _short(v: float) -> str:
    return repr(float(v))


def _grid_from_args(args, default=None):
    given = any(getattr(args, name) is not None for name in ("x_min", "x_max", "count", "spacing"))
    if not given and default is not None:
        return default
    return GridSpec(
        x_min=args.x_min if args.x_min is not None else 0.0,
        x_max=args.x_max if args.x_max is not None else 50.0,
        count=args.count if args.count is not None else 1001,
        spacing=args.spacing if args.spacing is not None else Spacing.LOGARITHMIC,
        log_floor=args.log_floor,
    )


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--count", "--grid-count", dest="count", type=int)
    p.add_argument("--spacing", choices=["lin", "log", "linear", "logarithmic"])
    p.add_argument("--log-floor", type=float, default=1e-6)


# ---------------------------------------------------------------- eval


def cmd_eval(args, out) -> int:
    ev = eval_v(args.x, Method.parse(args.method))
    row = {"x": ev.x, "value": ev.value, "method": ev.method.value, "abs_error_bound": ev.abs_error_bound}
    if args.format == "json":
        out.write(json.dumps(row) + "\n")
    elif args.format == "csv":
        out.write("x,value,method,abs_error_bound\n")
        out.write(f"{_fmt(ev.x)},{_fmt(ev.value)},{ev.method.value},{_fmt(ev.abs_error_bound)}\n")
    else:
        out.write(f"x               {_short(ev.x)}\n")
        out.write(f"value           {_short(ev.value)}\n")
        out.write(f"method          {ev.method.value}\n")
        out.write(f"abs_error_bound {ev.abs_error_bound:.3e}\n")
    return 0


# ---------------------------------------------------------------- tabulate


def tabulate_records(xs, method: "Method | str" = Method.AUTO) -> list[OutputRecord]:
    rows = []
    for x in xs:
        x = float(x)
        v = eval_v(x, method).value
        lo, hi = float(g(LOWER_K, x)), float(g(UPPER_K, x))
        gap = hi - lo
        rows.append(OutputRecord(x, v, lo, hi, float(komatsu_lower(x)), float(komatsu_upper(x)), gap, gap / v))
    return rows


def render_records(rows: list[OutputRecord], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "json":
        json.dump([{f.name: getattr(r, f.name) for f in fields(r)} for r in rows], buf, indent=1)
        buf.write("\n")
    else:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    return buf.getvalue()


def _emit(text: str, path: str | None, out) -> None:
    if path in (None, "-"):
        out.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_tabulate(args, out) -> int:
    grid = _grid_from_args(args, GridSpec(0.0, 10.0, 101, Spacing.LINEAR))
    rows = tabulate_records(grid_points(grid), args.v_method)
    _emit(render_records(rows, args.format), args.out, out)
    return 0


# ---------------------------------------------------------------- verify


def _parse_sabotage(items) -> dict:
    overrides = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or name not in SABOTAGE_TARGETS:
            raise UsageError(f"--sabotage expects pi=VALUE or four=VALUE, got {item!r}")
        try:
            overrides[SABOTAGE_TARGETS[name]] = float(value)
        except ValueError:
            raise UsageError(f"--sabotage value must be a number, got {value!r}") from None
    return overrides


def run_verify(grid, tol: float, *, lower_k=LOWER_K, upper_k=UPPER_K, workers: int = 1):
    reports = enclosure_reports(grid, tol, lower_k=lower_k, upper_k=upper_k, workers=workers)
    reports += optimality_suite(tol, grid, workers=workers)
    reports += [check_derivative_equivalence(k, grid) for k in DERIV_KS]
    reports += check_monotone_convex(grid, tol, workers=workers)
    return sorted(reports, key=lambda r: r.claim_id)


_SIDE_NAMES = {"enclosure.lower": "lower-bound", "enclosure.upper": "upper-bound"}


def cmd_verify(args, out, err) -> int:
    overrides = _parse_sabotage(args.sabotage)
    grid = _grid_from_args(args, DEFAULT_GRID)
    reports = run_verify(grid, args.tol, workers=args.workers, **overrides)
    text = "".join(json.dumps(r.to_dict()) + "\n" for r in reports)
    _emit(text, args.out, out)
    failed = [r for r in reports if not r.passed]
    for r in failed:
        what = _SIDE_NAMES.get(r.claim_id, "claim")
        err.write(
            f"FAILED {r.claim_id}: {what} violation, {r.violations} of {r.points_checked} points, "
            f"worst margin {r.worst_margin:.3e} at x={_fmt(r.worst_x)}\n"
        )
    return 1 if failed else 0


# ---------------------------------------------------------------- optimality


def cmd_optimality(args, out) -> int:
    k, x_max, tol = args.k, args.search_max, args.tol
    if not (math.isfinite(k) and k > 0):
        raise UsageError(f"--k must be > 0, got {k}")
    if not x_max > 0:
        raise UsageError("--search-max must be > 0")
    has_a = 3.0 <= k < 4.0
    a_k = a_threshold(k) if has_a else None
    h0 = h_gap(k, 0.0).h

    rows = [("k", _short(k))]
    rows.append(("a_k", _short(a_k) if has_a else "n/a (needs 3 <= k < 4)"))
    rows.append(("h_k(0) = sqrt(k) - sqrt(pi)", _short(h0)))

    verdicts = []
    if h0 > tol:
        verdicts.append("fails as lower bound at x = 0 (h_k(0) > 0)")
    if LOWER_K < k < UPPER_K:
        cx = find_crossing(k, a_k, x_max, tol)
    else:
        cx = find_crossing(k, 0.0, x_max, tol)
    if cx.kind is CounterexampleKind.UPPER_BOUND_FAILS:
        rows.append(("witness x", _short(cx.x_witness)))
        rows.append(("h_k(witness)", _short(cx.h_value)))
        if cx.x_crossing is not None:
            rows.append(("first crossing", _short(cx.x_crossing)))
        verdicts.append("fails as upper bound (h_k < 0 beyond a_k)" if has_a else "fails as upper bound")
    elif cx.kind is CounterexampleKind.LOWER_BOUND_FAILS:
        rows.append(("witness x", _short(cx.x_witness)))
        rows.append(("h_k(witness)", _short(cx.h_value)))
        verdicts.append("fails as lower bound")
    elif cx.kind is CounterexampleKind.NONE_FOUND:
        rows.append(("closest approach x", _short(cx.x_witness)))
        rows.append(("h_k there", _short(cx.h_value)))
        role = "upper" if k >= UPPER_K else "lower" if k <= LOWER_K else None
        if role:
            verdicts.append(f"no counterexample found; valid {role} bound")
        else:
            verdicts.append(f"no upper-bound counterexample found on [a_k, {_short(x_max)}]")

    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        out.write(f"{name:<{width}}  {value}\n")
    for v in verdicts:
        out.write(v + "\n")
    return 0


# ---------------------------------------------------------------- bench


def _checksum(values) -> str:
    return float(math.fsum(values)).hex()


def _bench_engines(n_points: int):
    slow = max(1, n_points // SLOW_STRIDE)
    return [
        ("oracle", np.linspace(0.0, 30.0, slow), lambda x: evalcore.oracle_v(x).value),
        ("series", np.linspace(0.0, 1.5, n_points), lambda x: evalcore.series_v(x).value),
        ("continued_fraction", np.linspace(1.0, 30.0, n_points), lambda x: evalcore.cf_v(x).value),
        ("quadrature", np.linspace(0.0, 30.0, n_points), lambda x: evalcore.quad_v(x).value),
        ("ode", np.linspace(0.0, 9.0, slow), lambda x: evalcore.ode_v(x).value),
        ("auto", np.linspace(0.0, 30.0, n_points), lambda x: evalcore.eval_v(x).value),
        ("bounds_g_pi_g_4", np.linspace(0.0, 30.0, n_points), lambda x: float(g(PI, x)) + float(g(4.0, x))),
    ]


def run_bench(reps: int, n_points: int = BENCH_POINTS) -> list[dict]:
    results = []
    for name, xs, fn in _bench_engines(n_points):
        best = math.inf
        checksum = None
        for _ in range(reps):
            evalcore._oracle_mp.cache_clear()
            t0 = time.perf_counter()
            values = [fn(float(x)) for x in xs]
            best = min(best, time.perf_counter() - t0)
            checksum = _checksum(values)
        results.append(
            {
                "engine": name,
                "points": int(xs.size),
                "seconds": best,
                "evals_per_second": xs.size / best if best > 0 else math.inf,
                "checksum": checksum,
            }
        )
    auto = next(r for r in results if r["engine"] == "auto")
    for r in results:
        r["speedup_vs_auto"] = r["evals_per_second"] / auto["evals_per_second"]
    return results


def cmd_bench(args, out) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be ≥ 1")
    results = run_bench(args.reps, args.points)
    if args.format == "json":
        out.write(json.dumps(results, indent=1) + "\n")
        return 0
    out.write(f"{'engine':<20} {'points':>7} {'evals/s':>12} {'vs auto':>9}  checksum\n")
    for r in results:
        out.write(
            f"{r['engine']:<20} {r['points']:>7d} {r['evals_per_second']:>12.1f} "
            f"{r['speedup_vs_auto']:>8.2f}x  {r['checksum']}\n"
        )
    return 0


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="erfcx-bounds",
        description="Evaluate V(x) = sqrt(pi) exp(x^2) erfc(x) and verify the g_pi <= V < g_4 enclosure.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate V at one point")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--method", default="auto", help="auto, oracle, series, asymptotic, cf, quadrature, ode")
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")

    p = sub.add_parser("tabulate", help="write V, the enclosure and the Komatsu bracket on a grid")
    _add_grid_flags(p)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--v-method", default="auto")

    p = sub.add_parser("verify", help="run every sweep and emit one JSON object per claim")
    _add_grid_flags(p)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sabotage", action="append", help=argparse.SUPPRESS)

    p = sub.add_parser("optimality", help="show why g_k fails as a bound for a given k")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--search-max", type=float, default=50.0)
    p.add_argument("--tol", type=float, default=1e-13)

    p = sub.add_parser("bench", help="throughput of each engine")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--points", type=int, default=BENCH_POINTS)
    p.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "eval":
            return cmd_eval(args, out)
        if args.command == "tabulate":
            return cmd_tabulate(args, out)
        if args.command == "verify":
            return cmd_verify(args, out, err)
        if args.command == "optimality":
            return cmd_optimality(args, out)
        return cmd_bench(args, out)
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return 2
    except (DomainError, PrecisionError) as exc:
        err.write(f"{exc}\n")
        return 2
    except ValueError as exc:
        err.write(f"usage error: {exc}\n")
        return 2
    except (OSError, ConvergenceError) as exc:
        err.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
