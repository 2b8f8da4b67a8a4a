"""Grid sweeps and searches confirming the enclosure and its optimality.

Every check produces a :class:`VerificationReport`. Reports only use
order-independent reductions (min, count), so chunked or threaded evaluation
cannot change them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .boundfam import (
    LOWER_K,
    PI,
    UPPER_K,
    a_threshold,
    dg,
    eq5_discriminant,
    g,
    h_gap,
    xg_minus_one,
)
from .errors import DomainError, PrecisionError
from .evalcore import sweep_oracle_v

DEFAULT_TOL = 1e-12
TIE_BAND = 1e-9
CONVEX_TOL = 1e-10
RATIO_SLACK = 1e-12
SCAN_POINTS = 1000
BISECT_STEPS = 80


class Spacing(str, enum.Enum):
    LINEAR = "linear"
    LOGARITHMIC = "logarithmic"

    @classmethod
    def parse(cls, name: "str | Spacing") -> "Spacing":
        if isinstance(name, Spacing):
            return name
        key = name.strip().lower()
        return {"lin": cls.LINEAR, "log": cls.LOGARITHMIC}.get(key) or cls(key)


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    count: int
    spacing: Spacing = Spacing.LOGARITHMIC
    log_floor: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "spacing", Spacing.parse(self.spacing))
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise DomainError("grid bounds must be finite")
        if self.x_min < 0:
            raise DomainError("domain: x must be ≥ 0")
        if not self.x_max > self.x_min:
            raise DomainError(f"grid needs x_max > x_min, got [{self.x_min}, {self.x_max}]")
        if self.count < 1:
            raise DomainError("grid count must be positive")
        if self.spacing is Spacing.LOGARITHMIC and self.x_min == 0 and not 0 < self.log_floor < self.x_max:
            raise DomainError("log_floor must lie in (0, x_max)")

    def abscissas(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.x_min])
        if self.spacing is Spacing.LINEAR:
            return np.linspace(self.x_min, self.x_max, self.count)
        if self.x_min > 0:
            return np.geomspace(self.x_min, self.x_max, self.count)
        # x = 0 itself, then count - 1 points from log_floor up
        return np.concatenate([[0.0], np.geomspace(self.log_floor, self.x_max, self.count - 1)])


Grid = Union[GridSpec, Sequence[GridSpec]]

DEFAULT_GRID: tuple[GridSpec, ...] = (
    GridSpec(1e-6, 50.0, 100_000, Spacing.LOGARITHMIC),
    GridSpec(0.0, 1.0, 1_000, Spacing.LINEAR),
)


def grid_points(grid: Grid) -> np.ndarray:
    """Sorted, de-duplicated abscissas of one grid or a union of grids."""
    specs = [grid] if isinstance(grid, GridSpec) else list(grid)
    if not specs:
        raise DomainError("empty grid")
    return np.unique(np.concatenate([s.abscissas() for s in specs]))


@dataclass(frozen=True)
class VerificationReport:
    claim_id: str
    points_checked: int
    violations: int
    worst_margin: float
    worst_x: float
    tolerance: float
    passed: bool

    def __post_init__(self):
        if self.passed != (self.violations == 0):
            raise ValueError("passed must equal (violations == 0)")

    def to_dict(self) -> dict:
        return asdict(self)


def _report(claim_id: str, xs: np.ndarray, margins: np.ndarray, bad: np.ndarray, tol: float) -> VerificationReport:
    xs = np.asarray(xs, dtype=float)
    margins = np.asarray(margins, dtype=float)
    bad = np.asarray(bad, dtype=bool)
    if xs.size == 0:
        return VerificationReport(claim_id, 0, 0, 0.0, 0.0, float(tol), True)
    # argmin takes the first (smallest-x) minimizer, so ties resolve the same way every run
    i = int(np.argmin(margins))
    violations = int(np.count_nonzero(bad))
    return VerificationReport(
        claim_id=claim_id,
        points_checked=int(xs.size),
        violations=violations,
        worst_margin=float(margins[i]),
        worst_x=float(xs[i]),
        tolerance=float(tol),
        passed=violations == 0,
    )


def _combine(claim_id: str, reports: Sequence[VerificationReport], tol: float) -> VerificationReport:
    worst = min(reports, key=lambda r: (r.worst_margin, r.worst_x))
    violations = sum(r.violations for r in reports)
    return VerificationReport(
        claim_id,
        max(r.points_checked for r in reports),
        violations,
        worst.worst_margin,
        worst.worst_x,
        float(tol),
        violations == 0,
    )


def _sweep(grid: Grid, oracle_tol: float, workers: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = grid_points(grid)
    v, err = sweep_oracle_v(xs, workers=workers, return_error=True)
    if err.size and err.max() > oracle_tol:
        raise PrecisionError(f"sweep oracle error {err.max():.3g} exceeds oracle_tol {oracle_tol:.3g}")
    return xs, v, err


def _k_label(k: float) -> str:
    if k == PI:
        return "pi"
    return f"{k:g}"


# ---------------------------------------------------------------- enclosure


def _enclosure_reports(xs, v, tol, lower_k, upper_k) -> list[VerificationReport]:
    lower_gap = v - g(lower_k, xs)
    upper_gap = g(upper_k, xs) - v
    lower = _report("enclosure.lower", xs, lower_gap, lower_gap < -tol, tol)
    upper = _report("enclosure.upper", xs, upper_gap, upper_gap <= -tol, tol)
    # the lower end may touch V at x = 0 only (within 10 tol), nowhere else
    at_zero = xs == 0
    strict_margin = np.where(at_zero, 10 * tol - np.abs(lower_gap), np.abs(lower_gap) - tol)
    strict = _report("enclosure.strict", xs, strict_margin, strict_margin < 0, tol)
    return [lower, upper, strict]


def enclosure_reports(
    grid: Grid = DEFAULT_GRID,
    oracle_tol: float = DEFAULT_TOL,
    *,
    lower_k: float = LOWER_K,
    upper_k: float = UPPER_K,
    workers: int = 1,
) -> list[VerificationReport]:
    """Lower side, upper side and strictness of g_lower <= V < g_upper."""
    xs, v, _ = _sweep(grid, oracle_tol, workers)
    return _enclosure_reports(xs, v, oracle_tol, lower_k, upper_k)


def verify_enclosure(
    grid: Grid = DEFAULT_GRID,
    oracle_tol: float = DEFAULT_TOL,
    *,
    lower_k: float = LOWER_K,
    upper_k: float = UPPER_K,
    workers: int = 1,
) -> VerificationReport:
    """Sweep g_pi <= V < g_4 over ``grid``; one combined report.

    ``lower_k`` and ``upper_k`` exist so that tests can perturb the constants
    and watch the sweep fail.
    """
    parts = enclosure_reports(grid, oracle_tol, lower_k=lower_k, upper_k=upper_k, workers=workers)
    return _combine("enclosure", parts, oracle_tol)


# ---------------------------------------------------------------- counterexamples


class CounterexampleKind(str, enum.Enum):
    UPPER_BOUND_FAILS = "upper_bound_fails"
    LOWER_BOUND_FAILS_AT_ZERO = "lower_bound_fails_at_zero"
    LOWER_BOUND_FAILS = "lower_bound_fails"
    NONE_FOUND = "none_found"


@dataclass(frozen=True)
class Counterexample:
    """Witness that g_k is not a bound, or the closest approach if none.

    ``x_crossing`` is the first zero of h_k located by bisection when the scan
    saw h_k change to the adverse sign inside the range.
    """

    k: float
    x_witness: float
    h_value: float
    kind: CounterexampleKind
    x_crossing: float | None = None


def _bisect_zero(k: float, lo: float, hi: float, oracle_tol: float, steps: int) -> float:
    h_lo = h_gap(k, lo, oracle_tol).h
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        h_mid = h_gap(k, mid, oracle_tol).h
        if (h_mid > 0) == (h_lo > 0):
            lo, h_lo = mid, h_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_crossing(
    k: float,
    x_lo: float,
    x_hi: float,
    oracle_tol: float = 1e-13,
    *,
    scan_points: int = SCAN_POINTS,
    bisect_steps: int = BISECT_STEPS,
) -> Counterexample:
    """Search [x_lo, x_hi] for a point where g_k is on the wrong side of V.

    k >= 4 is treated as an upper-bound candidate (looking for h_k < 0) and
    k <= pi as a lower-bound candidate (looking for h_k > 0). For pi < k < 4
    g_k fails both ways; when x_lo = 0 the cheapest witness is h_k(0) =
    sqrt(k) - sqrt(pi) > 0, otherwise the negative tail is searched.

    The scan is logarithmic because h_k decays like x**-5 and crossings for
    k near 4 sit far out. A witness must clear ``oracle_tol`` and is
    re-evaluated with the mpmath oracle; for 3 < k < 4 witnesses beyond a_k
    are preferred.
    """
    k, x_lo, x_hi = float(k), float(x_lo), float(x_hi)
    if not k > 0:
        raise DomainError(f"domain: k must be > 0, got {k}")
    if not 0 <= x_lo < x_hi:
        raise DomainError(f"need 0 ≤ x_lo < x_hi, got [{x_lo}, {x_hi}]")

    if k >= UPPER_K:
        role = "upper"
    elif k <= LOWER_K:
        role = "lower"
    else:
        role = "neither"

    if role == "neither" and x_lo == 0:
        h0 = h_gap(k, 0.0, oracle_tol).h
        if h0 > oracle_tol:
            return Counterexample(k, 0.0, h0, CounterexampleKind.LOWER_BOUND_FAILS_AT_ZERO)

    if x_lo > 0:
        xs = np.geomspace(x_lo, x_hi, scan_points)
    else:
        floor = min(1e-6, x_hi * 1e-3)
        xs = np.concatenate([[0.0], np.geomspace(floor, x_hi, scan_points - 1)])
    h = g(k, xs) - sweep_oracle_v(xs)

    # signed so that negative means adverse
    score = -h if role == "lower" else h
    adverse = score < -oracle_tol
    if not adverse.any():
        i = int(np.argmin(score))
        return Counterexample(k, float(xs[i]), h_gap(k, xs[i], oracle_tol).h, CounterexampleKind.NONE_FOUND)

    candidates = adverse.copy()
    if role != "lower" and 3.0 < k < 4.0:
        beyond = adverse & (xs > a_threshold(k))
        if beyond.any():
            candidates = beyond
    idx = np.flatnonzero(candidates)
    i = int(idx[np.argmin(score[idx])])
    x_w = float(xs[i])
    h_w = h_gap(k, x_w, oracle_tol).h

    crossing = None
    first = int(np.flatnonzero(adverse)[0])
    if first > 0:
        crossing = _bisect_zero(k, float(xs[first - 1]), float(xs[first]), oracle_tol, bisect_steps)

    if role == "lower":
        kind = CounterexampleKind.LOWER_BOUND_FAILS_AT_ZERO if x_w == 0 else CounterexampleKind.LOWER_BOUND_FAILS
    else:
        kind = CounterexampleKind.UPPER_BOUND_FAILS
    return Counterexample(k, x_w, h_w, kind, crossing)


# ---------------------------------------------------------------- optimality


def _strict_sign_report(claim_id, xs, h, err, tol, sign: int) -> VerificationReport:
    # sign=+1 claims h > 0, sign=-1 claims h < 0; err is the oracle noise floor
    margin = sign * h
    return _report(claim_id, xs, margin, margin <= err, tol)


def optimality_suite(
    oracle_tol: float = DEFAULT_TOL,
    grid: Grid = DEFAULT_GRID,
    *,
    epsilon: float = 0.01,
    workers: int = 1,
) -> list[VerificationReport]:
    """Check that pi and 4 cannot be moved, and that nearby k behave as claimed.

    * k in {3.5, 3.9, 3.99}: h_k > 0 at the left end and h_k < 0 somewhere
      beyond a_k, so g_k is neither bound.
    * k in {2.5, 3}: h_k < -oracle_tol at every x > 0 (strict lower bounds).
    * k = 4: h_4 > 0 for x > 0.
    * k = pi: h_pi <= 0, touching only at x = 0.
    * k = 4 + epsilon still an upper bound, k = pi - epsilon a strict lower bound.
    """
    xs, v, err = _sweep(grid, oracle_tol, workers)
    reports = []

    for k in (3.5, 3.9, 3.99):
        h = g(k, xs) - v
        a_k = a_threshold(k)
        pos = float(h[0])
        tail = xs > a_k
        neg = float(h[tail].min()) if tail.any() else math.inf
        margin = min(pos, -neg)
        violations = int(not pos > oracle_tol) + int(not neg < -oracle_tol)
        worst_x = float(xs[0]) if pos <= -neg else float(xs[tail][np.argmin(h[tail])])
        reports.append(
            VerificationReport(
                f"optimality.neither.k={_k_label(k)}",
                int(xs.size),
                violations,
                margin,
                worst_x,
                oracle_tol,
                violations == 0,
            )
        )

    positive = xs > 0
    for k in (2.5, 3.0):
        h = g(k, xs[positive]) - v[positive]
        reports.append(_report(f"optimality.lower.k={_k_label(k)}", xs[positive], -h, h >= -oracle_tol, oracle_tol))

    h4 = g(UPPER_K, xs[positive]) - v[positive]
    reports.append(_strict_sign_report("optimality.upper.k=4", xs[positive], h4, err[positive], oracle_tol, +1))

    h_pi = g(LOWER_K, xs) - v
    at_zero = xs == 0
    pi_margin = np.where(at_zero, 10 * oracle_tol - np.abs(h_pi), -h_pi - oracle_tol)
    reports.append(_report("optimality.lower.k=pi", xs, pi_margin, pi_margin < 0, oracle_tol))

    k_up = UPPER_K + epsilon
    h_up = g(k_up, xs) - v
    reports.append(_strict_sign_report(f"optimality.upper.k=4+{epsilon:g}", xs, h_up, err, oracle_tol, +1))
    k_lo = LOWER_K - epsilon
    h_lo = g(k_lo, xs) - v
    reports.append(_report(f"optimality.lower.k=pi-{epsilon:g}", xs, -h_lo, h_lo >= -oracle_tol, oracle_tol))
    return reports


# ---------------------------------------------------------------- derivative inequality


def check_derivative_equivalence(
    k: float, grid: Grid, tie_band: float = TIE_BAND
) -> VerificationReport:
    """Compare sign(discriminant) < 0 with g_k' > 2 (x g_k - 1) pointwise.

    Points where the discriminant is within ``tie_band`` of zero are skipped.
    The margin is |g_k' - 2 (x g_k - 1)|, negated where the two sides disagree.
    """
    k = float(k)
    if not k > 3:
        raise DomainError(f"domain: the equivalence needs k > 3, got {k}")
    xs = grid_points(grid)
    disc = eq5_discriminant(k, xs)
    keep = np.abs(disc) >= tie_band
    xs, disc = xs[keep], disc[keep]
    diff = dg(k, xs) - 2.0 * xg_minus_one(k, xs)
    agree = (disc < 0) == (diff > 0)
    margin = np.where(agree, np.abs(diff), -np.abs(diff))
    return _report(f"derivative_ineq.k={_k_label(k)}", xs, margin, ~agree, tie_band)


# ---------------------------------------------------------------- auxiliary claims


def check_monotone_convex(
    grid: Grid = DEFAULT_GRID,
    oracle_tol: float = DEFAULT_TOL,
    *,
    convex_tol: float = CONVEX_TOL,
    ratio_slack: float = RATIO_SLACK,
    gap_ks: Iterable[float] = (3.0, PI, 4.0),
    workers: int = 1,
) -> list[VerificationReport]:
    """V decreasing, 1/V convex, (1/V - x)**2 / V non-increasing, |h_k| < 1/x."""
    xs, v, _ = _sweep(grid, oracle_tol, workers)
    if xs.size < 3:
        raise DomainError("need at least 3 grid points")
    reports = []

    drop = v[:-1] - v[1:]
    reports.append(_report("monotone.v_decreasing", xs[1:], drop, drop <= 0, 0.0))

    # convexity as a second difference on a non-uniform grid: the chord
    # through the outer points must not pass below the middle value
    inv = 1.0 / v
    x0, x1, x2 = xs[:-2], xs[1:-1], xs[2:]
    w0 = (x2 - x1) / (x2 - x0)
    w2 = (x1 - x0) / (x2 - x0)
    second = w0 * inv[:-2] + w2 * inv[2:] - inv[1:-1]
    reports.append(_report("convex.inv_v", x1, second, second < -convex_tol, convex_tol))

    ratio = (inv - xs) ** 2 / v
    fall = ratio[:-1] - ratio[1:]
    reports.append(_report("monotone.ratio_decreasing", xs[1:], fall, fall < -ratio_slack, ratio_slack))

    positive = xs > 0
    xp, vp = xs[positive], v[positive]
    for k in gap_ks:
        margin = 1.0 / xp - np.abs(g(k, xp) - vp)
        reports.append(_report(f"gap_decay.k={_k_label(k)}", xp, margin, margin <= 0, 0.0))
    return reports
