"""Certified evaluation of sqrt(pi) exp(x^2) erfc(x) and its g_k bound family."""

from .boundfam import (
    Enclosure,
    GapValue,
    a_threshold,
    dg,
    enclosure,
    eq5_discriminant,
    g,
    h_gap,
    komatsu_bounds,
)
from .errors import ConvergenceError, DomainError, PrecisionError
from .evalcore import (
    Evaluation,
    Method,
    asymptotic_v,
    cf_v,
    dv,
    eval_v,
    ode_v,
    oracle_v,
    quad_v,
    series_v,
    sweep_oracle_v,
)
from .verify import (
    Counterexample,
    CounterexampleKind,
    GridSpec,
    VerificationReport,
    check_derivative_equivalence,
    check_monotone_convex,
    find_crossing,
    optimality_suite,
    verify_enclosure,
)

__version__ = "0.1.0"
