"""Oscillation analysis for difference equations with deviating arguments."""

from .equations import (
    ArgCase,
    ArgumentRule,
    CaseKind,
    Direction,
    EnvelopeTable,
    EquationError,
    EquationSpec,
    HypothesisReport,
    PeriodicSequence,
    Term,
    build_phi,
    build_rho,
    check_hypotheses,
    equation_from_json,
    equation_to_json,
    load_equation,
)
from .criteria import (
    INF,
    AlphaReport,
    CriterionOutcome,
    FactorTable,
    FactorValue,
    Verdict,
    alpha_advanced,
    alpha_retarded,
    baseline_tests,
    evaluate_all,
    evaluate_criterion,
    limsup_sum_advanced,
    limsup_sum_retarded,
    lower_ratio_bound,
    criterion_bounded_deviation_liminf,
    criterion_iterated_limsup,
    criterion_limsup_with_ratio,
    criterion_liminf_inv_e,
    criterion_unit_coefficient_sum,
)
from .numerics import (
    ComparisonOutcome,
    ComparisonVerdict,
    RealInterval,
    compare,
    decimal_str,
    format_rational,
    interval_inv_e,
    interval_sqrt,
    parse_rational,
)
from .simulate import (
    InitialData,
    OscillationEvidence,
    PeriodicSolutionCertificate,
    Trace,
    detect_oscillation,
    solve_advanced,
    solve_retarded,
    verify_periodic_solution,
)

__version__ = "0.1.0"
