"""Evaluation engines for V(x) = sqrt(pi) * exp(x**2) * erfc(x) on x >= 0.

V is the scaled complementary error function (``erfcx``) times sqrt(pi).
It satisfies V' = 2 x V - 2 with V(0) = sqrt(pi), and has the integral forms

    V(x) = int_0^inf exp(-u) / sqrt(x**2 + u) du
         = 2 exp(x**2) int_x^inf exp(-t**2) dt.

Several independent routes are provided so that each can be checked against
the others:

* :func:`oracle_v` -- mpmath quadrature at 40 digits (slow ground truth)
* :func:`sweep_oracle_v` -- vectorized binary64 quadrature of a third,
  shifted-Gaussian form, for sweeps over 10**5 points
* :func:`series_v` -- Maclaurin series from the ODE recurrence
* :func:`asymptotic_v` -- large-x asymptotic series, optimally truncated
* :func:`cf_v` -- continued fraction (modified Lentz)
* :func:`quad_v` -- tanh-sinh quadrature after u = s**2
* :func:`ode_v` -- backward integration of the ODE from an asymptotic anchor
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from ._quadrature import exp_sinh, interval_nodes
from .errors import ConvergenceError, DomainError, PrecisionError

# correctly rounded; math.sqrt(math.pi) is one ulp low
SQRT_PI = 1.7724538509055160273
EPS = np.finfo(float).eps

# smallest oracle target that survives rounding the result to binary64
MIN_TARGET_ABS_ERROR = 1e-15
ORACLE_DPS = 40

SERIES_MAX_X = 1.5
SERIES_DEFAULT_TERMS = 60
SERIES_MAX_TERMS = 400

CF_MIN_X = 1.0
CF_DEFAULT_DEPTH = 2000

ODE_DEFAULT_START = 10.0
ODE_DEFAULT_TOL = (1e-12, 1e-15)

# auto-dispatch switchover points; tuned against the oracle, not contracts
AUTO_SERIES_MAX = 1.0
AUTO_CF_MIN = 2.0

# quadrature on s in [0, QUAD_S_MAX]; exp(-s**2) < 1e-35 beyond it
QUAD_S_MAX = 9.0

_SWEEP_CHUNK = 4096


class Method(str, enum.Enum):
    ORACLE = "oracle"
    SERIES = "series"
    ASYMPTOTIC = "asymptotic"
    CONTINUED_FRACTION = "continued_fraction"
    QUADRATURE = "quadrature"
    ODE = "ode"
    AUTO = "auto"

    @classmethod
    def parse(cls, name: "str | Method") -> "Method":
        if isinstance(name, Method):
            return name
        key = name.strip().lower()
        aliases = {"cf": cls.CONTINUED_FRACTION, "quad": cls.QUADRATURE}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown method {name!r}; choose from {choices}") from None


@dataclass(frozen=True)
class Evaluation:
    """A computed value of V(x) together with a claimed absolute error."""

    x: float
    value: float
    method: Method
    abs_error_bound: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "abs_error_bound", float(self.abs_error_bound))
        if not (math.isfinite(self.abs_error_bound) and self.abs_error_bound >= 0):
            raise ValueError(f"abs_error_bound must be finite and >= 0, got {self.abs_error_bound}")
        slack = self.abs_error_bound + 4 * EPS * abs(self.value)
        if not self.value > -slack:
            raise ArithmeticError(f"{self.method.value}: V({self.x}) = {self.value} is not positive")
        if self.value > SQRT_PI + slack:
            raise ArithmeticError(f"{self.method.value}: V({self.x}) = {self.value} exceeds sqrt(pi)")
        if self.x > 0 and self.value * self.x >= 1.0 + slack * self.x:
            raise ArithmeticError(f"{self.method.value}: V({self.x}) = {self.value} is not below 1/x")


def _check_x(x: float) -> float:
    x = float(x)
    if math.isnan(x) or x < 0:
        raise DomainError("domain: x must be ≥ 0")
    if math.isinf(x):
        raise DomainError("domain: x must be finite")
    return x


# ---------------------------------------------------------------- oracle

_MP = mpmath.MPContext()
_MP.dps = ORACLE_DPS


@lru_cache(maxsize=65536)
def _oracle_mp(x: float) -> tuple[mpmath.mpf, mpmath.mpf]:
    ctx = _MP
    xm = ctx.mpf(x)
    if x == 0:
        # integrand exp(-u)/sqrt(u) becomes 2 exp(-s**2) after u = s**2
        return ctx.quad(lambda s: 2 * ctx.exp(-s * s), [0, ctx.inf], error=True)
    x2 = xm * xm

    def f(s):
        return 2 * s * ctx.exp(-s * s) / ctx.sqrt(x2 + s * s)

    # the integrand bends sharply at s ~ x; split there
    return ctx.quad(f, [0, xm, ctx.inf], error=True)


def _series_mp(x: float) -> mpmath.mpf:
    ctx = _MP
    xm = ctx.mpf(x)
    c_prev, c = ctx.sqrt(ctx.pi), ctx.mpf(-2)
    total = c_prev + c * xm
    power = xm
    for n in range(1, 400):
        c_prev, c = c, 2 * c_prev / (n + 1)
        power *= xm
        term = c * power
        total += term
        if n > 8 and abs(term) < ctx.mpf(10) ** (-ORACLE_DPS):
            break
    return total


def oracle_v(x: float, target_abs_error: float = MIN_TARGET_ABS_ERROR) -> Evaluation:
    """Ground-truth V(x) from 40-digit quadrature of the Laplace-type integral.

    The substitution u = s**2 removes the u**-1/2 endpoint behaviour at x = 0.
    For x <= 1 the result is also cross-checked against a 40-digit Maclaurin
    sum and the disagreement is folded into the error bound.
    """
    x = _check_x(x)
    if not target_abs_error >= MIN_TARGET_ABS_ERROR:
        raise PrecisionError(
            f"target_abs_error {target_abs_error!r} is below the attainable {MIN_TARGET_ABS_ERROR}"
        )
    value_mp, quad_err = _oracle_mp(x)
    err = quad_err
    if x <= 1.0:
        err = max(err, abs(value_mp - _series_mp(x)))
    value = float(value_mp)
    # rounding to binary64 dominates everything else
    bound = float(err) + abs(float(value_mp - _MP.mpf(value)))
    if bound > target_abs_error:
        raise PrecisionError(f"oracle error {bound:.3g} exceeds target {target_abs_error:.3g} at x={x}")
    return Evaluation(x, value, Method.ORACLE, bound)


def _sweep_level(x: np.ndarray, h: float) -> np.ndarray:
    # V(x) = 2 int_0^inf exp(-t**2 - 2 x t) dt, rescaled by c = 1/(1 + 2x)
    t, w = exp_sinh(h)
    c = 1.0 / (1.0 + 2.0 * x)
    T = c[:, None] * t[None, :]
    f = np.exp(-T * (T + 2.0 * x[:, None]))
    return 2.0 * c * (f @ w)


def _sweep_chunk(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fine = _sweep_level(x, 1.0 / 64)
    coarse = _sweep_level(x, 1.0 / 32)
    return fine, np.abs(fine - coarse) + 8 * EPS * fine


def sweep_oracle_v(
    xs, *, workers: int = 1, return_error: bool = False
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Vectorized binary64 oracle for grid sweeps.

    Uses the shifted-Gaussian form 2 int_0^inf exp(-t(t + 2x)) dt, which is
    smooth for every x >= 0, with an exp-sinh rule. The error estimate is the
    difference between step 1/32 and step 1/64 plus a rounding allowance.
    Results do not depend on ``workers``: chunks are fixed-size and
    independently computed.
    """
    x = np.asarray(xs, dtype=float)
    flat = x.ravel()
    if flat.size and (np.isnan(flat).any() or flat.min() < 0 or not np.isfinite(flat).all()):
        raise DomainError("domain: x must be ≥ 0")
    chunks = [flat[i : i + _SWEEP_CHUNK] for i in range(0, flat.size, _SWEEP_CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sweep_chunk, chunks))
    else:
        parts = [_sweep_chunk(c) for c in chunks]
    if parts:
        values = np.concatenate([p[0] for p in parts]).reshape(x.shape)
        errors = np.concatenate([p[1] for p in parts]).reshape(x.shape)
    else:
        values = np.empty(x.shape)
        errors = np.empty(x.shape)
    if return_error:
        return values, errors
    return values


# ---------------------------------------------------------------- series


@dataclass(frozen=True)
class SeriesState:
    """Maclaurin coefficients c_0..c_N of V.

    Matching powers in V' = 2xV - 2 gives c_0 = sqrt(pi), c_1 = -2 and
    c_{n+1} = 2 c_{n-1} / (n + 1).
    """

    coefficients: tuple[float, ...]

    @property
    def n_terms(self) -> int:
        return len(self.coefficients)


@lru_cache(maxsize=None)
def series_coefficients(n_terms: int) -> SeriesState:
    if n_terms < 1:
        raise ValueError("n_terms must be positive")
    c = [SQRT_PI, -2.0]
    for n in range(1, n_terms - 1):
        c.append(2.0 * c[n - 1] / (n + 1))
    return SeriesState(tuple(c[:n_terms]))


def series_v(x: float, n_terms: int = SERIES_DEFAULT_TERMS) -> Evaluation:
    x = _check_x(x)
    if x > SERIES_MAX_X:
        raise DomainError(f"domain: series_v needs 0 ≤ x ≤ {SERIES_MAX_X}, got {x}")
    if not 1 <= n_terms <= SERIES_MAX_TERMS:
        raise ValueError(f"n_terms must be in [1, {SERIES_MAX_TERMS}]")
    if x == 0:
        return Evaluation(0.0, SQRT_PI, Method.SERIES, 0.0)
    coeffs = series_coefficients(n_terms + 2).coefficients
    terms = [c * x**n for n, c in enumerate(coeffs)]
    value = math.fsum(terms[:n_terms])
    # |t_{n+2} / t_n| = 2 x**2 / (n + 2) <= q for every omitted pair
    q = 2.0 * x * x / (n_terms + 1)
    if q < 0.5:
        tail = (abs(terms[n_terms]) + abs(terms[n_terms + 1])) / (1.0 - q)
    else:
        more = series_coefficients(n_terms + 200).coefficients[n_terms:]
        tail = math.fsum(abs(c) * x ** (n_terms + i) for i, c in enumerate(more))
    rounding = 2 * EPS * math.fsum(abs(t) for t in terms[:n_terms])
    return Evaluation(x, value, Method.SERIES, tail + rounding)


# ---------------------------------------------------------------- asymptotic


def asymptotic_v(x: float, n_terms: int | None = None) -> Evaluation:
    """V(x) ~ sum_n (-1)**n (2n-1)!! / (2**n x**(2n+1)).

    Without ``n_terms`` the series stops before its smallest term. The series
    alternates and its terms shrink up to that point, so the first omitted
    term bounds the error.
    """
    x = _check_x(x)
    if x == 0:
        raise DomainError("domain: asymptotic_v needs x > 0")
    limit = n_terms if n_terms is not None else 10**6
    if limit < 1:
        raise ValueError("n_terms must be positive")
    term = 1.0 / x
    terms = []
    inv2x2 = 1.0 / (2.0 * x * x)
    n = 0
    while n < limit:
        terms.append(term)
        n += 1
        nxt = -term * (2 * n - 1) * inv2x2
        if n_terms is None and abs(nxt) >= abs(term):
            break
        term = nxt
    omitted = abs(terms[-1] * (2 * n - 1) * inv2x2)
    value = math.fsum(terms)
    return Evaluation(x, value, Method.ASYMPTOTIC, omitted + 2 * EPS * value)


# ---------------------------------------------------------------- continued fraction


def cf_v(x: float, max_depth: int = CF_DEFAULT_DEPTH) -> Evaluation:
    """V(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz.

    All partial numerators are positive, so successive convergents bracket V
    and the last change bounds the truncation error.
    """
    x = _check_x(x)
    if x < CF_MIN_X:
        raise DomainError(f"domain: cf_v needs x ≥ {CF_MIN_X}, got {x}")
    tiny = 1e-300
    f = x
    C = x
    D = 0.0
    for n in range(1, max_depth + 1):
        a = 0.5 * n
        D = x + a * D
        D = 1.0 / (D if D != 0.0 else tiny)
        C = x + a / C
        if C == 0.0:
            C = tiny
        delta = C * D
        f *= delta
        if abs(delta - 1.0) <= EPS:
            value = 1.0 / f
            bound = value * (abs(1.0 - 1.0 / delta) + n * EPS)
            return Evaluation(x, value, Method.CONTINUED_FRACTION, bound)
    raise ConvergenceError(f"cf_v did not converge at x={x} within max_depth={max_depth}")


# ---------------------------------------------------------------- quadrature


def _quad_level(x: float, h: float) -> float:
    if x == 0:
        s, w = interval_nodes(0.0, QUAD_S_MAX, h)
        return float(np.dot(w, 2.0 * np.exp(-s * s)))
    pieces = [(0.0, x), (x, QUAD_S_MAX)] if x < QUAD_S_MAX else [(0.0, QUAD_S_MAX)]
    total = 0.0
    for a, b in pieces:
        s, w = interval_nodes(a, b, h)
        total += float(np.dot(w, 2.0 * s * np.exp(-s * s) / np.hypot(x, s)))
    return total


def quad_v(x: float) -> Evaluation:
    """Tanh-sinh quadrature of int_0^inf 2 s exp(-s**2) / sqrt(x**2 + s**2) ds.

    This is the Laplace-type integral after u = s**2. For 0 < x < 9 the range is
    split at s = x, where the integrand turns over; the tanh-sinh clustering
    then resolves that bend for arbitrarily small x.
    """
    x = _check_x(x)
    fine = _quad_level(x, 1.0 / 64)
    coarse = _quad_level(x, 1.0 / 32)
    return Evaluation(x, fine, Method.QUADRATURE, abs(fine - coarse) + 8 * EPS * fine)


# ---------------------------------------------------------------- ODE


def _rhs(x, v):
    return 2.0 * x * v - 2.0


def _integrate(x0: float, v0: float, x1: float, rtol: float, atol: float) -> float:
    sol = solve_ivp(_rhs, (x0, x1), [v0], method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise ConvergenceError(f"ODE integration failed between {x0} and {x1}: {sol.message}")
    return float(sol.y[0, -1])


def ode_v(
    x: float,
    x_start: float = ODE_DEFAULT_START,
    step_control: tuple[float, float] = ODE_DEFAULT_TOL,
) -> Evaluation:
    """Integrate V' = 2xV - 2 backward from an asymptotic anchor at ``x_start``.

    Backward is the stable direction: the homogeneous solution exp(x**2)
    shrinks as x decreases, so the anchor error is damped on the way down.
    The error estimate compares the run at ``step_control`` with a run at
    100x tighter tolerances (clamped at the integrator's floor).
    """
    x = _check_x(x)
    rtol, atol = step_control
    if x >= x_start:
        raise DomainError(f"domain: ode_v needs x < x_start={x_start}, got {x}")
    anchor = asymptotic_v(x_start)
    if anchor.abs_error_bound > max(atol, rtol * anchor.value):
        raise PrecisionError(
            f"asymptotic anchor error {anchor.abs_error_bound:.3g} at x_start={x_start} "
            "exceeds the step tolerance; raise x_start"
        )
    value = _integrate(x_start, anchor.value, x, rtol, atol)
    check = _integrate(x_start, anchor.value, x, max(rtol * 1e-2, 3e-14), max(atol * 1e-2, 1e-300))
    bound = abs(value - check) + anchor.abs_error_bound + 8 * EPS * abs(value)
    return Evaluation(x, value, Method.ODE, bound)


def forward_ode_v(x: float, step_control: tuple[float, float] = ODE_DEFAULT_TOL) -> float:
    """Integrate forward from V(0) = sqrt(pi); numerically unstable.

    The homogeneous mode exp(x**2) amplifies every local error, so this drifts
    away from V long before x = 6. Kept to document why :func:`ode_v` runs
    backward. Returns a bare float because no honest error bound exists.
    """
    x = _check_x(x)
    if x == 0:
        return SQRT_PI
    rtol, atol = step_control
    return _integrate(0.0, SQRT_PI, x, rtol, atol)


# ---------------------------------------------------------------- dispatch


def eval_v(x: float, method: "Method | str" = Method.AUTO) -> Evaluation:
    """Evaluate V(x) with the named engine; ``auto`` picks by range.

    auto uses the series for x <= 1, quadrature for 1 < x < 2 and the
    continued fraction for x >= 2.
    """
    method = Method.parse(method)
    x = _check_x(x)
    if method is Method.AUTO:
        if x <= AUTO_SERIES_MAX:
            method = Method.SERIES
        elif x < AUTO_CF_MIN:
            method = Method.QUADRATURE
        else:
            method = Method.CONTINUED_FRACTION
    engines = {
        Method.ORACLE: oracle_v,
        Method.SERIES: series_v,
        Method.ASYMPTOTIC: asymptotic_v,
        Method.CONTINUED_FRACTION: cf_v,
        Method.QUADRATURE: quad_v,
        Method.ODE: ode_v,
    }
    return engines[method](x)


def dv(x: float) -> float:
    """V'(x) through the ODE, 2 x V(x) - 2."""
    d = 2.0 * x * eval_v(x).value - 2.0
    # V < 1/x makes this negative; a few ulps above 0 is roundoff for huge x
    assert d <= 8 * EPS, f"V'({x}) = {d} > 0"
    return min(d, 0.0)
