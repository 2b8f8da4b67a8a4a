"""The bound family g_k(x) = k / ((k - 1) x + sqrt(x**2 + k)) and friends.

g_pi <= V < g_4 on x >= 0, with equality only at x = 0, and neither constant
can be improved within the family. The helpers here evaluate the family, its
x-derivative, the threshold a_k past which the differential inequality driving
the upper-bound argument reverses, the gap h_k = g_k - V, and the classical
Komatsu bracket that the enclosure sharpens.

On h_k'(0): differentiating g_k gives g_k'(0) = -(k - 1), and V'(0) = -2, so
h_k'(0) = 3 - k. The value 2 - k is sometimes quoted for this slope; a finite
difference of g_4 at 0 gives about -3, not -4, which settles it. Both values
are negative at k = pi, so the strictness of the lower bound is unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .evalcore import MIN_TARGET_ABS_ERROR, oracle_v

PI = math.pi
LOWER_K = PI
UPPER_K = 4.0


@dataclass(frozen=True)
class BoundParam:
    k: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise DomainError(f"domain: k must be > 0, got {self.k}")

    @property
    def has_threshold(self) -> bool:
        return 3.0 <= self.k < 4.0


@dataclass(frozen=True)
class Enclosure:
    x: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ArithmeticError(f"empty enclosure at x={self.x}: [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


@dataclass(frozen=True)
class GapValue:
    k: float
    x: float
    h: float


def _scalar(k, x) -> bool:
    if isinstance(k, (int, float)) and isinstance(x, (int, float)):
        if not (k > 0 and math.isfinite(k)):
            raise DomainError(f"domain: k must be > 0, got {k}")
        if not x >= 0:
            raise DomainError("domain: x must be ≥ 0")
        return True
    return False


def _check(k, x):
    if _scalar(k, x):
        return
    if np.any(~np.isfinite(k)) or np.any(np.asarray(k) <= 0):
        raise DomainError(f"domain: k must be > 0, got {k}")
    if np.any(np.isnan(x)) or np.any(np.asarray(x) < 0):
        raise DomainError("domain: x must be ≥ 0")


def g(k, x):
    """g_k(x); accepts scalars or arrays (broadcast).

    Evaluated as 1 / (x + 1/(x + r)), r = sqrt(x**2 + k), which equals the
    defining ratio but avoids the cancellation in (k - 1) x + r for k < 1.
    """
    if _scalar(k, x):
        r = math.sqrt(x * x + k)
        if x == 0:
            return k / r
        return 1.0 / (x + 1.0 / (x + r))
    _check(k, x)
    r = np.sqrt(x * x + k)
    with np.errstate(divide="ignore"):
        stable = 1.0 / (x + 1.0 / (x + r))
    return np.where(x == 0, k / r, stable)


def dg(k, x):
    """x-derivative of g_k.

    -k ((k-1) + x/r) / ((k-1) x + r)**2, rewritten with the same identity as
    :func:`g` into -(x (x + r) + k - 1) / (r (x + r) (x + 1/(x + r))**2).
    """
    _check(k, x)
    r = np.sqrt(x * x + k)
    d = x + 1.0 / (x + r)
    return -(x * (x + r) + (k - 1.0)) / (r * (x + r) * d * d)


def xg_minus_one(k, x):
    """x g_k(x) - 1 = -1 / (1 + x (x + r)), free of cancellation."""
    _check(k, x)
    r = np.sqrt(x * x + k)
    return -1.0 / (1.0 + x * (x + r))


def a_threshold(k: float) -> float:
    """a_k = sqrt(k (k-3)**2 / ((k-2)(4-k))) for 3 <= k < 4."""
    k = float(k)
    if k == 3.0:
        return 0.0
    if not 3.0 < k < 4.0:
        raise DomainError(f"domain: a_threshold needs 3 < k < 4, got {k}")
    return math.sqrt(k * (k - 3.0) ** 2 / ((k - 2.0) * (4.0 - k)))


def eq5_discriminant(k, x):
    """x**2 (k-2)(k-4) + k (k-3)**2.

    For k > 3 this is negative exactly where g_k' > 2 (x g_k - 1).
    """
    return x * x * (k - 2.0) * (k - 4.0) + k * (k - 3.0) ** 2


def h_gap(k: float, x: float, oracle_tol: float = MIN_TARGET_ABS_ERROR) -> GapValue:
    k, x = float(k), float(x)
    _check(k, x)
    v = oracle_v(x, oracle_tol).value
    return GapValue(k, x, float(g(k, x)) - v)


def enclosure(x: float, oracle_tol: float | None = None) -> Enclosure:
    """[g_pi(x), g_4(x)].

    With ``oracle_tol`` the enclosure is checked against the oracle before it
    is returned: g_pi <= V < g_4, with the lower end touching only at x = 0.
    """
    x = float(x)
    enc = Enclosure(x, float(g(LOWER_K, x)), float(g(UPPER_K, x)))
    if oracle_tol is not None:
        v = oracle_v(x, oracle_tol).value
        if not enc.lower <= v + oracle_tol:
            raise ArithmeticError(f"g_pi({x}) = {enc.lower} exceeds V = {v}")
        if not v < enc.upper + oracle_tol:
            raise ArithmeticError(f"V({x}) = {v} is not below g_4 = {enc.upper}")
        if x > 0 and abs(v - enc.lower) <= oracle_tol:
            raise ArithmeticError(f"g_pi touches V at x={x} > 0")
    return enc


def komatsu_lower(x):
    return 2.0 / (x + np.sqrt(x * x + 2.0))


def komatsu_upper(x):
    return 2.0 / (x + np.sqrt(x * x + 1.0))


def komatsu_bounds(x: float) -> Enclosure:
    """Komatsu's bracket for the Mills ratio, written for V.

    In the exp(-t**2) normalization the classical statement reads
    2/(x + sqrt(x**2 + 2)) < V(x) <= 2/(x + sqrt(x**2 + 1)); the lower end is
    g_2.
    """
    x = float(x)
    _check(1.0, x)
    return Enclosure(x, float(komatsu_lower(x)), float(komatsu_upper(x)))


def _validate_komatsu():
    # a mistyped literature formula should fail on import, not in a report
    for x in (0.0, 0.25, 1.0, 3.0, 10.0):
        enc = komatsu_bounds(x)
        v = oracle_v(x).value
        if not enc.lower < v <= enc.upper:
            raise ImportError(f"Komatsu bracket fails to contain V({x}) = {v}: {enc}")


_validate_komatsu()
