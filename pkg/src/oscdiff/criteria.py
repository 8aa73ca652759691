"""Oscillation criteria: iterated decay-factor recursions and limit tests.

The central objects are the decay factor tables a_r(n, k) (retarded) and
b_r(n, k) (advanced): exact rational upper bounds on the ratio of a
hypothetical positive solution across an index window, refined iteratively.
Each criterion evaluates an exactly periodic derived sequence, confirms its
periodicity over two consecutive blocks, and adjudicates the resulting
limsup/liminf against its threshold (exact rational comparison where the
threshold is rational, certified interval enclosure where it is irrational).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .equations import (
    Direction,
    EnvelopeTable,
    EquationSpec,
    HypothesisReport,
    build_phi,
    build_rho,
    check_hypotheses,
)
from .numerics import (
    ComparisonOutcome,
    ComparisonVerdict,
    DEFAULT_MAX_PRECISION_BITS,
    RealInterval,
    compare,
    interval_inv_e,
    interval_sqrt,
)

DEFAULT_R_MAX = 8


class CriteriaError(ValueError):
    """Misuse of a criterion operation (bad window, inapplicable input)."""


class _Infinity:
    """Sentinel for a divergent criterion sum (certified oscillation signal)."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "inf"

    def __eq__(self, other) -> bool:
        return isinstance(other, _Infinity)

    def __hash__(self) -> int:
        return hash("oscdiff-infinity")

    def __gt__(self, other) -> bool:
        return not isinstance(other, _Infinity)

    def __ge__(self, other) -> bool:
        return True

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return isinstance(other, _Infinity)


INF = _Infinity()

ExtendedValue = Union[Fraction, _Infinity]


# -- decay factor tables ------------------------------------------------------


@dataclass(frozen=True)
class FactorValue:
    """Result of a factor product.

    value None with truncated False: some bracket is certifiably nonpositive
    from fully in-domain data (no positive solution can cross the window).
    value None with truncated True: the chain reached below the sequence
    start, so no certified value exists.  A positive value with truncated
    True is the product clamped to available indices (informational only).
    """

    value: Optional[Fraction]
    truncated: bool

    @property
    def is_certified_nonpositive(self) -> bool:
        return self.value is None and not self.truncated

    @property
    def is_clean(self) -> bool:
        return self.value is not None and not self.truncated


_ONE = FactorValue(Fraction(1), False)


class FactorTable:
    """Memoized per-index brackets for the decay factor recursion.

    a_r(n, k) (retarded, k <= n) and b_r(n, k) (advanced, k >= n) are products
    of per-index brackets, so the table memoizes brackets by (level, index)
    and assembles window products on demand.
    """

    def __init__(self, eq: EquationSpec):
        self.eq = eq
        self._brackets: dict[tuple[int, int], FactorValue] = {}

    def bracket(self, level: int, i: int) -> FactorValue:
        if level < 1:
            raise CriteriaError("factor level must be >= 1")
        key = (level, i)
        cached = self._brackets.get(key)
        if cached is not None:
            return cached
        result = self._compute_bracket(level, i)
        self._brackets[key] = result
        return result

    def _compute_bracket(self, level: int, i: int) -> FactorValue:
        eq = self.eq
        if level == 1:
            value = Fraction(1) - eq.coeff_sum(i)
            return FactorValue(value, False) if value > 0 else FactorValue(None, False)
        truncated = False
        inverse_sum = Fraction(0)
        for t in range(eq.m):
            coeff = eq.coeff_unchecked(t, i)
            if coeff == 0:
                continue
            sub = self.factor(level - 1, i, eq.arg_unchecked(t, i))
            if sub.is_certified_nonpositive:
                return FactorValue(None, False)
            if sub.value is None:
                return FactorValue(None, True)
            truncated = truncated or sub.truncated
            inverse_sum += coeff / sub.value
        value = Fraction(1) - inverse_sum
        if value <= 0:
            return FactorValue(None, truncated)
        return FactorValue(value, truncated)

    def factor(self, level: int, n: int, k: int) -> FactorValue:
        """a_level(n, k) for retarded equations, b_level(n, k) for advanced."""
        if self.eq.direction is Direction.RETARDED:
            if k > n:
                raise CriteriaError(f"retarded factor needs k <= n, got ({n}, {k})")
            lo, hi = k, n - 1
        else:
            if k < n:
                raise CriteriaError(f"advanced factor needs k >= n, got ({n}, {k})")
            lo, hi = n + 1, k
        truncated = False
        if lo < 0:
            lo = 0
            truncated = True
        product = Fraction(1)
        for i in range(lo, hi + 1):
            b = self.bracket(level, i)
            if b.is_certified_nonpositive:
                return FactorValue(None, False)
            if b.value is None:
                return FactorValue(None, True)
            truncated = truncated or b.truncated
            product *= b.value
        return FactorValue(product, truncated)

    def level_fixed_point(self, level: int) -> bool:
        """True when every bracket computed at this level equals the bracket
        one level shallower (the recursion has stabilized).  An evaluation
        that referenced no brackets at all cannot change with depth."""
        if level < 2:
            return False
        indices = [i for (lvl, i) in self._brackets if lvl == level]
        if not indices:
            return True
        return all(self.bracket(level, i) == self.bracket(level - 1, i) for i in indices)


# -- evaluation windows and periodic limits -----------------------------------


@dataclass(frozen=True)
class SequenceSummary:
    """Extremum of a derived sequence with periodicity confirmation."""

    values: tuple[tuple[int, ExtendedValue], ...]
    extremal: Optional[ExtendedValue]
    exact: bool
    witnesses: tuple[int, ...]
    degraded: bool
    notes: tuple[str, ...]
    degraded_indices: tuple[int, ...] = ()


def evaluation_window(eq: EquationSpec, depth_units: int) -> tuple[list[int], int, bool]:
    period = eq.structure_period
    start = eq.stable_start(depth_units)
    end = start + 2 * period - 1
    notes_ok = True
    if end > eq.horizon:
        start = max(eq.preamble_end, eq.horizon - 2 * period + 1)
        end = eq.horizon
        notes_ok = end - start + 1 >= 2 * period
    return list(range(start, end + 1)), period, notes_ok


def _summarize(
    pairs: Sequence[tuple[int, ExtendedValue]],
    period: int,
    window_ok: bool,
    mode: str,
    degraded: bool,
    extra_notes: Sequence[str] = (),
    degraded_indices: Sequence[int] = (),
) -> SequenceSummary:
    notes = list(extra_notes)
    exact = False
    if window_ok and len(pairs) >= 2 * period:
        exact = all(pairs[j][1] == pairs[j + period][1] for j in range(period))
    if not exact:
        notes.append("periodicity not confirmed; extremum taken over the finite window")
    pool = pairs[:period] if exact else pairs
    if not pool:
        return SequenceSummary((), None, False, (), degraded, tuple(notes))
    pick = max if mode == "max" else min
    extremal = pick(value for _, value in pool)
    witnesses = tuple(n for n, value in pool if value == extremal)
    return SequenceSummary(tuple(pairs), extremal, exact, witnesses, degraded,
                           tuple(notes), tuple(degraded_indices))


def _coefficient_window_sum(
    eq: EquationSpec, lo: int, hi: int, coeff_index: Optional[int] = None
) -> tuple[Fraction, bool]:
    """Coefficient sum over [lo, hi], clamped below the sequence start.

    With coeff_index set, only that term's coefficients are summed.
    """
    clamped = lo < 0
    total = Fraction(0)
    for j in range(max(lo, 0), hi + 1):
        if coeff_index is None:
            total += eq.coeff_sum(j)
        else:
            total += eq.coeff_unchecked(coeff_index, j)
    return total, clamped


def limsup_sum_retarded(
    eq: EquationSpec,
    r: int,
    table: Optional[FactorTable] = None,
    phi: Optional[EnvelopeTable] = None,
    window: Optional[Sequence[int]] = None,
) -> SequenceSummary:
    """Iterated-factor window sums S_r(n) over [phi(n), n] with their limsup.

    A certified nonpositive factor marks S_r(n) as infinite.  A factor chain
    that reaches below the sequence start degrades S_r(n) to the plain
    coefficient sum over the window (every factor inverse is at least 1, so
    the degraded value is a valid lower bound).
    """
    if eq.direction is not Direction.RETARDED:
        raise CriteriaError("retarded limsup sums need a retarded equation")
    table = table or FactorTable(eq)
    phi = phi or build_phi(eq)
    if window is None:
        window, period, window_ok = evaluation_window(eq, r + 1)
    else:
        window = list(window)
        period = eq.structure_period
        window_ok = len(window) >= 2 * period
    degraded_indices: list[int] = []
    pairs: list[tuple[int, ExtendedValue]] = []
    for n in window:
        base = phi.combined[n]
        total = Fraction(0)
        degraded = base < 0
        infinite = False
        for j in range(max(base, 0), n + 1):
            for t in range(eq.m):
                coeff = eq.coeff_unchecked(t, j)
                if coeff == 0:
                    continue
                f = table.factor(r, base, eq.arg_unchecked(t, j))
                if f.is_certified_nonpositive:
                    infinite = True
                    break
                if f.value is None or f.truncated:
                    degraded = True
                    continue
                total += coeff / f.value
            if infinite:
                break
        if infinite:
            pairs.append((n, INF))
            continue
        if degraded:
            fallback, _ = _coefficient_window_sum(eq, base, n)
            pairs.append((n, fallback))
            degraded_indices.append(n)
        else:
            pairs.append((n, total))
    notes = []
    if degraded_indices:
        notes.append(
            "factor chains reach below the sequence start; affected window sums "
            "use the conservative plain coefficient sum"
        )
    return _summarize(pairs, period, window_ok, "max", bool(degraded_indices),
                      notes, degraded_indices)


def limsup_sum_advanced(
    eq: EquationSpec,
    r: int,
    table: Optional[FactorTable] = None,
    rho: Optional[EnvelopeTable] = None,
    window: Optional[Sequence[int]] = None,
) -> SequenceSummary:
    """Advanced mirror of the iterated-factor window sums, over [n, rho(n)]."""
    if eq.direction is not Direction.ADVANCED:
        raise CriteriaError("advanced limsup sums need an advanced equation")
    table = table or FactorTable(eq)
    rho = rho or build_rho(eq)
    if window is None:
        window, period, window_ok = evaluation_window(eq, r + 1)
    else:
        window = list(window)
        period = eq.structure_period
        window_ok = len(window) >= 2 * period
    pairs: list[tuple[int, ExtendedValue]] = []
    for n in window:
        base = rho.combined[n]
        total = Fraction(0)
        infinite = False
        for j in range(n, base + 1):
            for t in range(eq.m):
                coeff = eq.coeff_unchecked(t, j)
                if coeff == 0:
                    continue
                f = table.factor(r, base, eq.arg_unchecked(t, j))
                if f.is_certified_nonpositive:
                    infinite = True
                    break
                total += coeff / f.value
            if infinite:
                break
        pairs.append((n, INF if infinite else total))
    return _summarize(pairs, period, window_ok, "max", False, ())


# -- liminf quantities ---------------------------------------------------------


@dataclass(frozen=True)
class AlphaReport:
    """Per-term liminf of coefficient sums over envelope windows."""

    per_term: tuple[Fraction, ...]
    alpha: Fraction
    exact: bool
    in_range_inv_e: ComparisonVerdict


def _liminf_of(
    eq: EquationSpec,
    window_fn: Callable[[int], tuple[int, int]],
    coeff_index: Optional[int] = None,
) -> SequenceSummary:
    window, period, window_ok = evaluation_window(eq, 1)
    degraded_indices: list[int] = []
    pairs: list[tuple[int, ExtendedValue]] = []
    for n in window:
        lo, hi = window_fn(n)
        value, clamped = _coefficient_window_sum(eq, lo, hi, coeff_index)
        if clamped:
            degraded_indices.append(n)
        pairs.append((n, value))
    notes = []
    if degraded_indices:
        notes.append("summation windows reach below the sequence start and were clamped")
    return _summarize(pairs, period, window_ok, "min", bool(degraded_indices),
                      notes, degraded_indices)


def alpha_retarded(
    eq: EquationSpec,
    phi: Optional[EnvelopeTable] = None,
    max_precision_bits: int = DEFAULT_MAX_PRECISION_BITS,
) -> AlphaReport:
    """liminf of per-term coefficient sums over [phi_i(n), n-1]."""
    if eq.direction is not Direction.RETARDED:
        raise CriteriaError("alpha_retarded needs a retarded equation")
    phi = phi or build_phi(eq)
    per_term = []
    exact = True
    for i in range(eq.m):
        summary = _liminf_of(
            eq, lambda n, i=i: (phi.per_term[i][n], n - 1), coeff_index=i
        )
        per_term.append(summary.extremal)
        exact = exact and summary.exact
    alpha = min(per_term)
    verdict = compare(alpha, interval_inv_e, max_precision_bits)
    return AlphaReport(tuple(per_term), alpha, exact, verdict)


def alpha_advanced(
    eq: EquationSpec,
    rho: Optional[EnvelopeTable] = None,
    max_precision_bits: int = DEFAULT_MAX_PRECISION_BITS,
) -> AlphaReport:
    """liminf of per-term coefficient sums over [n+1, rho_i(n)]."""
    if eq.direction is not Direction.ADVANCED:
        raise CriteriaError("alpha_advanced needs an advanced equation")
    rho = rho or build_rho(eq)
    per_term = []
    exact = True
    for i in range(eq.m):
        summary = _liminf_of(
            eq, lambda n, i=i: (n + 1, rho.per_term[i][n]), coeff_index=i
        )
        per_term.append(summary.extremal)
        exact = exact and summary.exact
    alpha = min(per_term)
    verdict = compare(alpha, interval_inv_e, max_precision_bits)
    return AlphaReport(tuple(per_term), alpha, exact, verdict)


def lower_ratio_bound(alpha: Fraction, precision_bits: int) -> RealInterval:
    """Certified enclosure of (1 - alpha - sqrt(1 - 2*alpha - alpha^2)) / 2.

    Applicable for 0 <= alpha <= sqrt(2) - 1, which is exactly where the
    radicand is nonnegative; alpha = 0 gives the exact point interval [0, 0].
    """
    alpha = Fraction(alpha)
    if alpha < 0:
        raise CriteriaError(f"ratio bound needs alpha >= 0, got {alpha}")
    radicand = 1 - 2 * alpha - alpha * alpha
    if radicand < 0:
        raise CriteriaError(f"ratio bound inapplicable: alpha {alpha} exceeds sqrt(2) - 1")
    root = interval_sqrt(radicand, precision_bits)
    return ((1 - alpha) - root) * Fraction(1, 2)


def ratio_bound_threshold(alpha: Fraction, precision_bits: int) -> RealInterval:
    """Enclosure of 1 - lower_ratio_bound(alpha), the ratio-test threshold."""
    return 1 - lower_ratio_bound(alpha, precision_bits)


# -- criterion outcomes ---------------------------------------------------------


class Verdict(Enum):
    OSCILLATORY_PROVEN = "OSCILLATORY_PROVEN"
    INCONCLUSIVE = "INCONCLUSIVE"
    NOT_APPLICABLE = "NOT_APPLICABLE"
    INDETERMINATE_PRECISION = "INDETERMINATE_PRECISION"
    INDICATIVE_ONLY = "INDICATIVE_ONLY"


@dataclass(frozen=True)
class TermBound:
    """Per-term liminf value against its per-term threshold."""

    term: int                       # 1-based term index
    value: Fraction
    threshold_text: str
    threshold_value: Optional[Fraction]
    satisfied: Optional[bool]


@dataclass(frozen=True)
class CriterionOutcome:
    criterion_id: str
    verdict: Verdict
    value_sequence: tuple[tuple[int, ExtendedValue], ...] = ()
    extremal_value: Optional[ExtendedValue] = None
    exact: bool = False
    threshold_description: str = ""
    witnesses: tuple[int, ...] = ()
    per_term: tuple[TermBound, ...] = ()
    notes: tuple[str, ...] = ()
    comparison: Optional[ComparisonVerdict] = None


def _hyp_failures_retarded(hyp: HypothesisReport) -> list[str]:
    failures = []
    if not hyp.arguments_tend_to_infinity:
        failures.append("arguments do not tend to infinity (constant argument case present)")
    if not hyp.coeff_sum_below_one:
        failures.append("coefficient sums reach 1 somewhere on the horizon")
    return failures


def _gate(holds: bool, failures: Sequence[str]) -> Verdict:
    if not holds:
        return Verdict.INCONCLUSIVE
    return Verdict.OSCILLATORY_PROVEN if not failures else Verdict.INDICATIVE_ONLY


# -- individual criteria --------------------------------------------------------


def criterion_unit_coefficient_sum(
    eq: EquationSpec, hyp: Optional[HypothesisReport] = None
) -> CriterionOutcome:
    """T2.3 / T2.3a: coefficient sums reach 1 on an infinite index set."""
    hyp = hyp or check_hypotheses(eq)
    criterion_id = "T2.3" if eq.direction is Direction.RETARDED else "T2.3a"
    window, period, window_ok = evaluation_window(eq, 1)
    pairs = [(n, eq.coeff_sum(n)) for n in window]
    summary = _summarize(pairs, period, window_ok, "max", False, ())
    failures = []
    if eq.direction is Direction.RETARDED and not hyp.arguments_tend_to_infinity:
        failures.append("arguments do not tend to infinity (constant argument case present)")
    verdict = _gate(hyp.unit_sum_infinite, failures)
    return CriterionOutcome(
        criterion_id=criterion_id,
        verdict=verdict,
        value_sequence=summary.values,
        extremal_value=summary.extremal,
        exact=summary.exact,
        threshold_description="coefficient sum >= 1 infinitely often",
        witnesses=hyp.unit_sum_witnesses,
        notes=tuple(failures),
    )


def _holds_above_one(extremal: Optional[ExtendedValue]) -> bool:
    if extremal is None:
        return False
    if isinstance(extremal, _Infinity):
        return True
    return extremal > 1


def criterion_iterated_limsup(
    eq: EquationSpec,
    r: int,
    table: Optional[FactorTable] = None,
    envelope: Optional[EnvelopeTable] = None,
    hyp: Optional[HypothesisReport] = None,
) -> CriterionOutcome:
    """T2.4(r) / T2.4a(r): iterated-factor window sums exceed 1."""
    hyp = hyp or check_hypotheses(eq)
    if eq.direction is Direction.RETARDED:
        summary = limsup_sum_retarded(eq, r, table, envelope)
        criterion_id = f"T2.4({r})"
        failures = _hyp_failures_retarded(hyp)
    else:
        summary = limsup_sum_advanced(eq, r, table, envelope)
        criterion_id = f"T2.4a({r})"
        failures = [] if hyp.coeff_sum_below_one else [
            "coefficient sums reach 1 somewhere on the horizon"
        ]
    verdict = _gate(_holds_above_one(summary.extremal), failures)
    return CriterionOutcome(
        criterion_id=criterion_id,
        verdict=verdict,
        value_sequence=summary.values,
        extremal_value=summary.extremal,
        exact=summary.exact,
        threshold_description="1",
        witnesses=summary.witnesses,
        notes=tuple(failures) + summary.notes,
    )


def criterion_limsup_with_ratio(
    eq: EquationSpec,
    r: int,
    table: Optional[FactorTable] = None,
    envelope: Optional[EnvelopeTable] = None,
    hyp: Optional[HypothesisReport] = None,
    alpha_report: Optional[AlphaReport] = None,
    max_precision_bits: int = DEFAULT_MAX_PRECISION_BITS,
) -> CriterionOutcome:
    """T2.5(r) / T2.5a(r): window sums exceed 1 - c(alpha) for 0 < alpha <= 1/e."""
    hyp = hyp or check_hypotheses(eq)
    retarded = eq.direction is Direction.RETARDED
    criterion_id = f"T2.5({r})" if retarded else f"T2.5a({r})"
    if alpha_report is None:
        alpha_report = (
            alpha_retarded(eq, envelope, max_precision_bits)
            if retarded
            else alpha_advanced(eq, envelope, max_precision_bits)
        )
    alpha = alpha_report.alpha
    threshold_text = "1 - (1 - alpha - sqrt(1 - 2*alpha - alpha^2))/2 at alpha = " + str(alpha)

    if alpha <= 0:
        return CriterionOutcome(
            criterion_id=criterion_id,
            verdict=Verdict.NOT_APPLICABLE,
            threshold_description=threshold_text,
            notes=("requires 0 < alpha; alpha = " + str(alpha),),
        )
    if alpha_report.in_range_inv_e.outcome is ComparisonOutcome.GREATER:
        return CriterionOutcome(
            criterion_id=criterion_id,
            verdict=Verdict.NOT_APPLICABLE,
            threshold_description=threshold_text,
            notes=(f"requires alpha <= 1/e; alpha = {alpha} exceeds it",),
        )
    if alpha_report.in_range_inv_e.outcome is ComparisonOutcome.INDETERMINATE:
        return CriterionOutcome(
            criterion_id=criterion_id,
            verdict=Verdict.INDETERMINATE_PRECISION,
            threshold_description=threshold_text,
            notes=("could not certify alpha <= 1/e at maximum precision",),
            comparison=alpha_report.in_range_inv_e,
        )

    summary = (
        limsup_sum_retarded(eq, r, table, envelope)
        if retarded
        else limsup_sum_advanced(eq, r, table, envelope)
    )
    failures = _hyp_failures_retarded(hyp) if retarded else (
        [] if hyp.coeff_sum_below_one else ["coefficient sums reach 1 somewhere on the horizon"]
    )

    comparison = None
    if isinstance(summary.extremal, _Infinity):
        holds = True
    elif summary.extremal is None:
        holds = False
    else:
        comparison = compare(
            summary.extremal,
            lambda bits: ratio_bound_threshold(alpha, bits),
            max_precision_bits,
        )
        if comparison.outcome is ComparisonOutcome.INDETERMINATE:
            return CriterionOutcome(
                criterion_id=criterion_id,
                verdict=Verdict.INDETERMINATE_PRECISION,
                value_sequence=summary.values,
                extremal_value=summary.extremal,
                exact=summary.exact,
                threshold_description=threshold_text,
                witnesses=summary.witnesses,
                notes=tuple(failures) + summary.notes,
                comparison=comparison,
            )
        holds = comparison.outcome is ComparisonOutcome.GREATER

    verdict = _gate(holds, failures)
    return CriterionOutcome(
        criterion_id=criterion_id,
        verdict=verdict,
        value_sequence=summary.values,
        extremal_value=summary.extremal,
        exact=summary.exact,
        threshold_description=threshold_text,
        witnesses=summary.witnesses,
        notes=tuple(failures) + summary.notes,
        comparison=comparison,
    )


def _per_term_liminfs(eq: EquationSpec) -> list[SequenceSummary]:
    """liminf over n of the all-term coefficient sums across each term's own
    deviation window (combined inner sums, per-term window edges)."""
    summaries = []
    for k in range(eq.m):
        if eq.direction is Direction.RETARDED:
            summaries.append(
                _liminf_of(eq, lambda n, k=k: (eq.arg_unchecked(k, n), n - 1))
            )
        else:
            summaries.append(
                _liminf_of(eq, lambda n, k=k: (n + 1, eq.arg_unchecked(k, n)))
            )
    return summaries


def criterion_bounded_deviation_liminf(
    eq: EquationSpec, hyp: Optional[HypothesisReport] = None
) -> CriterionOutcome:
    """T3.3 / T3.3a: per-term liminf sums beat (M/(M+1))**(M+1) exactly."""
    hyp = hyp or check_hypotheses(eq)
    criterion_id = "T3.3" if eq.direction is Direction.RETARDED else "T3.3a"
    if not hyp.bounded_deviations:
        return CriterionOutcome(
            criterion_id=criterion_id,
            verdict=Verdict.NOT_APPLICABLE,
            threshold_description="(M/(M+1))**(M+1) per term",
            notes=("requires uniformly bounded deviations",),
        )
    summaries = _per_term_liminfs(eq)
    bounds = hyp.deviation_bounds
    per_term = []
    all_hold = True
    exact = True
    for k, summary in enumerate(summaries):
        m_k = bounds[k]
        threshold = Fraction(m_k, m_k + 1) ** (m_k + 1)
        value = summary.extremal
        satisfied = value > threshold
        all_hold = all_hold and satisfied
        exact = exact and summary.exact
        per_term.append(
            TermBound(k + 1, value, f"({m_k}/{m_k + 1})**{m_k + 1}", threshold, satisfied)
        )
    worst = min(per_term, key=lambda tb: tb.value)
    verdict = Verdict.OSCILLATORY_PROVEN if all_hold else Verdict.INCONCLUSIVE
    return CriterionOutcome(
        criterion_id=criterion_id,
        verdict=verdict,
        value_sequence=summaries[worst.term - 1].values,
        extremal_value=worst.value,
        exact=exact,
        threshold_description="(M/(M+1))**(M+1) per term",
        per_term=tuple(per_term),
    )


def criterion_liminf_inv_e(
    eq: EquationSpec,
    hyp: Optional[HypothesisReport] = None,
    nonstrict: bool = False,
    max_precision_bits: int = DEFAULT_MAX_PRECISION_BITS,
) -> CriterionOutcome:
    """T3.4 / T3.4a: per-term liminf sums exceed 1/e (strict by default)."""
    hyp = hyp or check_hypotheses(eq)
    criterion_id = "T3.4" if eq.direction is Direction.RETARDED else "T3.4a"
    if eq.direction is Direction.RETARDED and not hyp.arguments_tend_to_infinity:
        return CriterionOutcome(
            criterion_id=criterion_id,
            verdict=Verdict.NOT_APPLICABLE,
            threshold_description="1/e per term",
            notes=("requires arguments tending to infinity",),
        )
    summaries = _per_term_liminfs(eq)
    per_term = []
    any_fail = False
    any_indeterminate = False
    exact = True
    for k, summary in enumerate(summaries):
        value = summary.extremal
        verdict = compare(value, interval_inv_e, max_precision_bits)
        satisfied: Optional[bool]
        if verdict.outcome is ComparisonOutcome.GREATER:
            satisfied = True
        elif verdict.outcome is ComparisonOutcome.LESS:
            satisfied = False
            any_fail = True
        else:
            if nonstrict and value >= interval_inv_e(max_precision_bits).lower:
                satisfied = True
            else:
                satisfied = None
                any_indeterminate = True
        exact = exact and summary.exact
        per_term.append(TermBound(k + 1, value, "1/e", None, satisfied))
    worst = min(per_term, key=lambda tb: tb.value)
    if any_fail:
        outcome_verdict = Verdict.INCONCLUSIVE
    elif any_indeterminate:
        outcome_verdict = Verdict.INDETERMINATE_PRECISION
    else:
        outcome_verdict = Verdict.OSCILLATORY_PROVEN
    notes = ()
    if nonstrict:
        notes = ("nonstrict reading enabled: boundary cases accepted via interval lower bound",)
    return CriterionOutcome(
        criterion_id=criterion_id,
        verdict=outcome_verdict,
        value_sequence=summaries[worst.term - 1].values,
        extremal_value=worst.value,
        exact=exact,
        threshold_description="1/e per term",
        per_term=tuple(per_term),
        notes=notes,
    )


# -- prior-art baseline tests ----------------------------------------------------


def _is_nondecreasing_arg(eq: EquationSpec, i: int) -> bool:
    previous = eq.arg_unchecked(i, 0)
    for n in range(1, eq.horizon + 1):
        current = eq.arg_unchecked(i, n)
        if current < previous:
            return False
        previous = current
    return True


def _limsup_coeff_sum_positive(eq: EquationSpec) -> bool:
    base = eq.preamble_end
    return any(eq.coeff_sum(n) > 0 for n in range(base, base + eq.structure_period))


def _per_term_own_coeff_liminf(eq: EquationSpec) -> SequenceSummary:
    """liminf of the total of per-term coefficient sums over each term's own window."""
    per_term = []
    for i in range(eq.m):
        if eq.direction is Direction.RETARDED:
            per_term.append(
                _liminf_of(eq, lambda n, i=i: (eq.arg_unchecked(i, n), n - 1), coeff_index=i)
            )
        else:
            per_term.append(
                _liminf_of(eq, lambda n, i=i: (n + 1, eq.arg_unchecked(i, n)), coeff_index=i)
            )
    window, period, window_ok = evaluation_window(eq, 1)
    pairs = []
    degraded = any(s.degraded for s in per_term)
    for idx, n in enumerate(window):
        total = sum((per_term[i].values[idx][1] for i in range(eq.m)), Fraction(0))
        pairs.append((n, total))
    notes = ["summation windows clamped at the sequence start"] if degraded else []
    return _summarize(pairs, period, window_ok, "min", degraded, notes)


def _baseline_outcome(
    eq: EquationSpec,
    criterion_id: str,
    summary: SequenceSummary,
    structural_failures: Sequence[str],
    max_precision_bits: int,
) -> CriterionOutcome:
    cond_positive = _limsup_coeff_sum_positive(eq)
    comparison = compare(summary.extremal, interval_inv_e, max_precision_bits)
    notes = list(structural_failures) + list(summary.notes)
    if not cond_positive:
        notes.append("limsup of coefficient sums is 0")
    if comparison.outcome is ComparisonOutcome.INDETERMINATE:
        verdict = Verdict.INDETERMINATE_PRECISION
    elif comparison.outcome is ComparisonOutcome.LESS or not cond_positive:
        verdict = Verdict.INCONCLUSIVE
    elif structural_failures:
        verdict = Verdict.NOT_APPLICABLE
    else:
        verdict = Verdict.OSCILLATORY_PROVEN
    return CriterionOutcome(
        criterion_id=criterion_id,
        verdict=verdict,
        value_sequence=summary.values,
        extremal_value=summary.extremal,
        exact=summary.exact,
        threshold_description="1/e",
        witnesses=summary.witnesses,
        notes=tuple(notes),
        comparison=comparison,
    )


def baseline_tests(
    eq: EquationSpec,
    hyp: Optional[HypothesisReport] = None,
    max_precision_bits: int = DEFAULT_MAX_PRECISION_BITS,
) -> list[CriterionOutcome]:
    """Prior liminf tests reported for comparison alongside the main criteria."""
    hyp = hyp or check_hypotheses(eq)
    monotone_failures = [
        f"argument of term {i + 1} is not non-decreasing"
        for i in range(eq.m)
        if not _is_nondecreasing_arg(eq, i)
    ]
    if eq.direction is Direction.RETARDED:
        if not hyp.arguments_tend_to_infinity:
            note = ("requires arguments tending to infinity",)
            return [
                CriterionOutcome("B-5.16", Verdict.NOT_APPLICABLE,
                                 threshold_description="1/e", notes=note),
                CriterionOutcome("B-3.1", Verdict.NOT_APPLICABLE,
                                 threshold_description="1/e", notes=note),
            ]

        def combined_max_window(n: int) -> tuple[int, int]:
            tau_max = max(eq.arg_unchecked(i, n) for i in range(eq.m))
            return tau_max, n - 1

        combined_summary = _liminf_of(eq, combined_max_window)
        return [
            _baseline_outcome(eq, "B-5.16", combined_summary, [], max_precision_bits),
            _baseline_outcome(
                eq, "B-3.1", _per_term_own_coeff_liminf(eq), monotone_failures,
                max_precision_bits,
            ),
        ]
    return [
        _baseline_outcome(
            eq, "B-3.2", _per_term_own_coeff_liminf(eq), monotone_failures,
            max_precision_bits,
        ),
    ]


# -- drivers ---------------------------------------------------------------------


def evaluate_all(
    eq: EquationSpec,
    r_max: int = DEFAULT_R_MAX,
    max_precision_bits: int = DEFAULT_MAX_PRECISION_BITS,
    nonstrict: bool = False,
    include_baselines: bool = True,
) -> list[CriterionOutcome]:
    """Run every applicable criterion, scanning depth r with early stopping."""
    if r_max < 1:
        raise CriteriaError("r_max must be >= 1")
    hyp = check_hypotheses(eq)
    retarded = eq.direction is Direction.RETARDED
    envelope = build_phi(eq) if retarded else build_rho(eq)
    table = FactorTable(eq)
    alpha_report = (
        alpha_retarded(eq, envelope, max_precision_bits)
        if retarded
        else alpha_advanced(eq, envelope, max_precision_bits)
    )

    outcomes = [criterion_unit_coefficient_sum(eq, hyp)]
    for r in range(1, r_max + 1):
        limsup_outcome = criterion_iterated_limsup(eq, r, table, envelope, hyp)
        ratio_outcome = criterion_limsup_with_ratio(
            eq, r, table, envelope, hyp, alpha_report, max_precision_bits
        )
        outcomes.append(limsup_outcome)
        outcomes.append(ratio_outcome)
        if Verdict.OSCILLATORY_PROVEN in (limsup_outcome.verdict, ratio_outcome.verdict):
            outcomes[-1] = replace(
                ratio_outcome,
                notes=ratio_outcome.notes + (f"depth scan stopped at r={r}: criterion proven",),
            )
            break
        if r < r_max and table.level_fixed_point(r):
            outcomes[-1] = replace(
                ratio_outcome,
                notes=ratio_outcome.notes
                + (f"depth scan stopped at r={r}: factor tables reached a fixed point",),
            )
            break
    outcomes.append(criterion_bounded_deviation_liminf(eq, hyp))
    outcomes.append(criterion_liminf_inv_e(eq, hyp, nonstrict, max_precision_bits))
    if include_baselines:
        outcomes.extend(baseline_tests(eq, hyp, max_precision_bits))
    return outcomes


def evaluate_criterion(
    eq: EquationSpec,
    criterion_id: str,
    max_precision_bits: int = DEFAULT_MAX_PRECISION_BITS,
    nonstrict: bool = False,
    table: Optional[FactorTable] = None,
    envelope: Optional[EnvelopeTable] = None,
    hyp: Optional[HypothesisReport] = None,
    alpha_report: Optional[AlphaReport] = None,
) -> CriterionOutcome:
    """Evaluate one criterion by its stable identifier (e.g. "T2.4(3)")."""
    hyp = hyp or check_hypotheses(eq)
    retarded = eq.direction is Direction.RETARDED
    if envelope is None:
        envelope = build_phi(eq) if retarded else build_rho(eq)
    if criterion_id in ("T2.3", "T2.3a"):
        return criterion_unit_coefficient_sum(eq, hyp)
    if criterion_id in ("T3.3", "T3.3a"):
        return criterion_bounded_deviation_liminf(eq, hyp)
    if criterion_id in ("T3.4", "T3.4a"):
        return criterion_liminf_inv_e(eq, hyp, nonstrict, max_precision_bits)
    if criterion_id in ("B-5.16", "B-3.1", "B-3.2"):
        for outcome in baseline_tests(eq, hyp, max_precision_bits):
            if outcome.criterion_id == criterion_id:
                return outcome
        raise CriteriaError(f"baseline {criterion_id} not applicable to this equation kind")
    match = re.fullmatch(r"(T2\.[45])(a?)\((\d+)\)", criterion_id)
    if not match:
        raise CriteriaError(f"unknown criterion identifier {criterion_id!r}")
    family, advanced_flag, r_text = match.groups()
    if (eq.direction is Direction.ADVANCED) != (advanced_flag == "a"):
        raise CriteriaError(f"criterion {criterion_id} does not match the equation kind")
    r = int(r_text)
    table = table or FactorTable(eq)
    if family == "T2.4":
        return criterion_iterated_limsup(eq, r, table, envelope, hyp)
    if alpha_report is None:
        alpha_report = (
            alpha_retarded(eq, envelope, max_precision_bits)
            if retarded
            else alpha_advanced(eq, envelope, max_precision_bits)
        )
    return criterion_limsup_with_ratio(
        eq, r, table, envelope, hyp, alpha_report, max_precision_bits
    )
