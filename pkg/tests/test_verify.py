import math

import numpy as np
import pytest

from erfcx_bounds.boundfam import PI, a_threshold, h_gap
from erfcx_bounds.errors import DomainError, PrecisionError
from erfcx_bounds.evalcore import oracle_v
from erfcx_bounds.verify import (
    DEFAULT_GRID,
    Counterexample,
    CounterexampleKind,
    GridSpec,
    Spacing,
    VerificationReport,
    check_derivative_equivalence,
    check_monotone_convex,
    enclosure_reports,
    find_crossing,
    grid_points,
    optimality_suite,
    verify_enclosure,
)

SMALL = (GridSpec(1e-6, 50.0, 4000, "log"), GridSpec(0.0, 1.0, 101, "lin"))


@pytest.fixture(scope="module")
def default_reports():
    return {
        "enclosure": enclosure_reports(DEFAULT_GRID, 1e-12),
        "optimality": optimality_suite(1e-12, DEFAULT_GRID),
        "aux": check_monotone_convex(DEFAULT_GRID, 1e-12),
    }


# ---------------------------------------------------------------- grids


def test_linear_grid():
    xs = GridSpec(0.0, 2.0, 5, Spacing.LINEAR).abscissas()
    assert xs.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]


def test_log_grid_from_zero_uses_floor():
    xs = GridSpec(0.0, 10.0, 4, "log", log_floor=1e-2).abscissas()
    assert xs[0] == 0.0
    assert xs[1] == pytest.approx(1e-2)
    assert xs[-1] == pytest.approx(10.0)
    assert np.all(np.diff(xs) > 0)


def test_log_grid_positive_start():
    xs = GridSpec(1e-3, 1e3, 7, "logarithmic").abscissas()
    assert np.allclose(np.log10(xs), np.arange(-3, 4))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(x_min=-1.0, x_max=1.0, count=3),
        dict(x_min=1.0, x_max=1.0, count=3),
        dict(x_min=0.0, x_max=1.0, count=0),
        dict(x_min=0.0, x_max=1.0, count=3, log_floor=2.0),
    ],
)
def test_grid_validation(kwargs):
    with pytest.raises(DomainError):
        GridSpec(**kwargs)


def test_grid_union_is_sorted_unique_and_deterministic():
    xs = grid_points(DEFAULT_GRID)
    assert np.all(np.diff(xs) > 0)
    assert xs[0] == 0.0 and xs[-1] == 50.0
    assert np.array_equal(xs, grid_points(DEFAULT_GRID))
    # 10^5 log points plus 10^3 linear points; none coincide exactly
    assert xs.size == 101_000


# ---------------------------------------------------------------- reports


def test_report_invariant():
    with pytest.raises(ValueError):
        VerificationReport("x", 3, 1, -1.0, 0.0, 1e-12, True)


def test_report_fields_in_order():
    rep = verify_enclosure(SMALL)
    assert list(rep.to_dict()) == [
        "claim_id",
        "points_checked",
        "violations",
        "worst_margin",
        "worst_x",
        "tolerance",
        "passed",
    ]


# ---------------------------------------------------------------- enclosure


def test_verify_enclosure_default_grid(default_reports):
    for rep in default_reports["enclosure"]:
        assert rep.passed, rep
        assert rep.points_checked == 101_000


def test_enclosure_touches_at_zero_only():
    rep = verify_enclosure(GridSpec(0.0, 1.0, 1), 1e-12)
    assert rep.passed
    lower = enclosure_reports(GridSpec(0.0, 1.0, 1), 1e-12)[0]
    assert abs(lower.worst_margin) <= 1e-12
    assert lower.worst_x == 0.0


def test_sabotaged_pi_fails():
    rep = verify_enclosure(SMALL, lower_k=3.2)
    assert not rep.passed
    assert rep.violations > 0
    lower = enclosure_reports(SMALL, lower_k=3.2)[0]
    assert lower.worst_x == 0.0
    assert lower.worst_margin == pytest.approx(math.sqrt(math.pi) - math.sqrt(3.2), abs=1e-12)


def test_sabotaged_four_fails():
    upper = enclosure_reports(SMALL, upper_k=3.9)[1]
    assert not upper.passed
    assert upper.worst_x > a_threshold(3.9)


def test_enclosure_rejects_tolerance_below_oracle_noise():
    with pytest.raises(PrecisionError):
        verify_enclosure(SMALL, 1e-18)


def test_enclosure_deterministic_under_threads():
    a = enclosure_reports(SMALL, workers=1)
    b = enclosure_reports(SMALL, workers=4)
    assert a == b


# ---------------------------------------------------------------- find_crossing


def test_crossing_upper_fails_beyond_threshold_k39():
    a = a_threshold(3.9)
    cx = find_crossing(3.9, a, 50)
    assert cx.kind is CounterexampleKind.UPPER_BOUND_FAILS
    assert cx.x_witness > 4.0776
    assert cx.h_value < 0


def test_crossing_none_for_k4():
    cx = find_crossing(4.0, 0.0, 50.0)
    assert cx.kind is CounterexampleKind.NONE_FOUND
    assert cx.h_value > 0


def test_crossing_lower_fails_at_zero():
    cx = find_crossing(3.3, 0.0, 1.0)
    assert cx.kind is CounterexampleKind.LOWER_BOUND_FAILS_AT_ZERO
    assert cx.x_witness == 0.0
    assert cx.h_value == pytest.approx(math.sqrt(3.3) - math.sqrt(math.pi), abs=1e-15)
    assert cx.h_value == pytest.approx(0.0441, abs=1e-4)


def test_crossing_bisection_locates_first_zero():
    cx = find_crossing(3.9, 0.5, 50.0)
    assert cx.kind is CounterexampleKind.UPPER_BOUND_FAILS
    b = cx.x_crossing
    assert b is not None
    # h changes sign at b: positive just before, negative just after
    assert h_gap(3.9, b * (1 - 1e-9)).h > 0
    assert h_gap(3.9, b * (1 + 1e-9)).h < 0
    # the first crossing sits before a_k; negativity then persists past it
    assert b < a_threshold(3.9)


def test_crossing_none_for_valid_lower_bounds():
    for k in (2.5, 3.0, PI):
        cx = find_crossing(k, 0.0, 50.0)
        assert cx.kind is CounterexampleKind.NONE_FOUND, k
        assert cx.h_value <= 0


def test_crossing_detects_positive_gap_for_lower_candidates():
    # k <= pi should be a lower bound; feed it through a point where it is not
    # by asking about a perturbed constant slightly above pi
    cx = find_crossing(PI + 0.05, 0.0, 5.0)
    assert cx.kind is CounterexampleKind.LOWER_BOUND_FAILS_AT_ZERO


@pytest.mark.parametrize("k", [3.5, 3.9, 3.99])
def test_witness_reverifies_with_tighter_oracle(k):
    cx = find_crossing(k, a_threshold(k), 50.0, oracle_tol=1e-13)
    tight = h_gap(k, cx.x_witness, 1e-14).h
    assert math.copysign(1, tight) == math.copysign(1, cx.h_value)
    assert tight < -1e-13


def test_crossing_domain():
    with pytest.raises(DomainError):
        find_crossing(3.5, 2.0, 1.0)
    with pytest.raises(DomainError):
        find_crossing(-1.0, 0.0, 1.0)


def test_counterexample_is_plain_data():
    cx = Counterexample(3.5, 2.0, -1e-3, CounterexampleKind.UPPER_BOUND_FAILS)
    assert cx.x_crossing is None


# ---------------------------------------------------------------- optimality


def test_optimality_suite_default(default_reports):
    reports = default_reports["optimality"]
    ids = [r.claim_id for r in reports]
    assert ids == [
        "optimality.neither.k=3.5",
        "optimality.neither.k=3.9",
        "optimality.neither.k=3.99",
        "optimality.lower.k=2.5",
        "optimality.lower.k=3",
        "optimality.upper.k=4",
        "optimality.lower.k=pi",
        "optimality.upper.k=4+0.01",
        "optimality.lower.k=pi-0.01",
    ]
    for rep in reports:
        assert rep.passed, rep


def test_optimality_k35_both_signs(default_reports):
    rep = default_reports["optimality"][0]
    # margin is min(h(0), -min_{x > a_k} h)
    assert rep.worst_margin > 0
    assert math.sqrt(3.5) - math.sqrt(math.pi) == pytest.approx(0.0984, abs=1e-4)


def test_optimality_pi_touches_only_at_zero(default_reports):
    rep = next(r for r in default_reports["optimality"] if r.claim_id == "optimality.lower.k=pi")
    assert rep.worst_x == 0.0
    assert rep.violations == 0


# ---------------------------------------------------------------- derivative inequality


def test_derivative_equivalence_examples():
    grid = GridSpec(0.0, 10.0, 200, "lin")
    for k in (3.1, 3.5, 3.9, 4.0):
        rep = check_derivative_equivalence(k, grid)
        assert rep.passed, rep
        assert rep.points_checked >= 199


def test_derivative_equivalence_tie_point_excluded():
    a = a_threshold(3.5)
    rep = check_derivative_equivalence(3.5, GridSpec(a, a + 1.0, 1))
    assert rep.points_checked == 0


def test_derivative_equivalence_domain():
    with pytest.raises(DomainError):
        check_derivative_equivalence(3.0, GridSpec(0.0, 1.0, 3))


# ---------------------------------------------------------------- auxiliary claims


def test_monotone_convex_default(default_reports):
    ids = [r.claim_id for r in default_reports["aux"]]
    assert ids == [
        "monotone.v_decreasing",
        "convex.inv_v",
        "monotone.ratio_decreasing",
        "gap_decay.k=3",
        "gap_decay.k=pi",
        "gap_decay.k=4",
    ]
    for rep in default_reports["aux"]:
        assert rep.passed, rep


def test_inv_v_second_difference_at_one_positive():
    v = [oracle_v(x).value for x in (0.99, 1.0, 1.01)]
    assert 1 / v[0] - 2 / v[1] + 1 / v[2] > 0


def test_v_decreasing_examples():
    assert oracle_v(0.5).value > oracle_v(1.0).value > oracle_v(2.0).value


def test_ratio_values():
    def ratio(x):
        v = oracle_v(x).value
        return (1 / v - x) ** 2 / v

    assert ratio(0.0) == pytest.approx(0.1795871, abs=1e-7)
    assert ratio(1.0) == pytest.approx(0.1346795, abs=1e-7)
    assert ratio(0.0) > ratio(1.0)


def test_monotone_convex_needs_three_points():
    with pytest.raises(DomainError):
        check_monotone_convex(GridSpec(0.0, 1.0, 2, "lin"))


def test_reports_reproducible():
    a = check_monotone_convex(SMALL) + optimality_suite(1e-12, SMALL)
    b = check_monotone_convex(SMALL, workers=3) + optimality_suite(1e-12, SMALL, workers=3)
    assert a == b
