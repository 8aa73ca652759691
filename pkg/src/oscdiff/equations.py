"""Declarative model of difference equations with deviating arguments.

An equation is a list of terms, each pairing an eventually periodic
coefficient sequence with a residue-class argument rule (plus finite
overrides).  Retarded rules must satisfy arg(n) <= n-1, advanced rules
arg(n) >= n+1.  Envelope maps restore monotonicity of the deviating
arguments for the criterion sums.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

from .numerics import format_rational, parse_rational


class EquationError(ValueError):
    """Structural or semantic error in an equation description."""


class Direction(Enum):
    RETARDED = "retarded"
    ADVANCED = "advanced"


class CaseKind(Enum):
    OFFSET = "offset"
    CONSTANT = "constant"


@dataclass(frozen=True)
class PeriodicSequence:
    """Eventually periodic sequence: finite preamble, then a repeating block."""

    preamble: tuple[Fraction, ...]
    period: tuple[Fraction, ...]
    start_index: int = 0

    def __post_init__(self) -> None:
        if not self.period:
            raise EquationError("period block must be nonempty")

    @property
    def preamble_end(self) -> int:
        """First index governed by the repeating block."""
        return self.start_index + len(self.preamble)

    def value_at(self, n: int) -> Fraction:
        if n < self.start_index:
            raise EquationError(f"sequence undefined at index {n} (starts at {self.start_index})")
        offset = n - self.start_index
        if offset < len(self.preamble):
            return self.preamble[offset]
        return self.period[(offset - len(self.preamble)) % len(self.period)]


@dataclass(frozen=True)
class ArgCase:
    kind: CaseKind
    value: int


@dataclass(frozen=True)
class ArgumentRule:
    """Residue-class argument rule with finite per-index overrides."""

    modulus: int
    cases: tuple[ArgCase, ...]
    overrides: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.modulus <= 0:
            raise EquationError("modulus must be positive")
        if len(self.cases) != self.modulus:
            raise EquationError(f"expected {self.modulus} cases, got {len(self.cases)}")
        seen = set()
        for n, _ in self.overrides:
            if n < 0:
                raise EquationError(f"override at negative index {n}")
            if n in seen:
                raise EquationError(f"duplicate override at index {n}")
            seen.add(n)

    def evaluate(self, n: int, direction: Direction) -> int:
        for idx, value in self.overrides:
            if idx == n:
                return value
        case = self.cases[n % self.modulus]
        if case.kind is CaseKind.CONSTANT:
            return case.value
        if direction is Direction.RETARDED:
            return n - case.value
        return n + case.value

    @property
    def has_constant_case(self) -> bool:
        return any(case.kind is CaseKind.CONSTANT for case in self.cases)

    @property
    def max_offset(self) -> int:
        return max((case.value for case in self.cases if case.kind is CaseKind.OFFSET),
                   default=0)

    def deviation_bound(self, direction: Direction) -> Optional[int]:
        """Uniform bound on |arg(n) - n|, or None when no finite bound exists."""
        if self.has_constant_case:
            return None
        bound = self.max_offset
        for n, value in self.overrides:
            bound = max(bound, n - value if direction is Direction.RETARDED else value - n)
        return bound


@dataclass(frozen=True)
class Term:
    coeff: PeriodicSequence
    arg: ArgumentRule


@dataclass(frozen=True)
class EquationSpec:
    direction: Direction
    terms: tuple[Term, ...]
    horizon: int

    def __post_init__(self) -> None:
        if not self.terms:
            raise EquationError("equation needs at least one term")
        if self.horizon <= 0:
            raise EquationError("horizon must be positive")
        self._validate_terms()

    def _validate_terms(self) -> None:
        for i, term in enumerate(self.terms):
            seq = term.coeff
            if seq.start_index != 0:
                raise EquationError(f"term {i}: coefficient sequences must start at index 0")
            for value in (*seq.preamble, *seq.period):
                if value < 0:
                    raise EquationError(f"term {i}: negative coefficient {value}")
            rule = term.arg
            for class_index, case in enumerate(rule.cases):
                if case.kind is CaseKind.OFFSET:
                    if case.value < 1:
                        raise EquationError(
                            f"term {i}: offset must be >= 1, got {case.value}"
                        )
                else:
                    if self.direction is Direction.ADVANCED:
                        raise EquationError(
                            f"term {i}: constant argument cases are impossible for "
                            "advanced equations (arg(n) >= n+1 fails for large n)"
                        )
                    # Smallest index in the residue class is the class index itself.
                    if case.value > class_index - 1:
                        raise EquationError(
                            f"term {i}: constant argument {case.value} violates "
                            f"arg(n) <= n-1 at n={class_index}"
                        )
            for n, value in rule.overrides:
                if self.direction is Direction.RETARDED and value > n - 1:
                    raise EquationError(f"term {i}: override arg({n})={value} violates arg(n) <= n-1")
                if self.direction is Direction.ADVANCED and value < n + 1:
                    raise EquationError(f"term {i}: override arg({n})={value} violates arg(n) >= n+1")

    # -- evaluation ---------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.terms)

    def _check_range(self, n: int) -> None:
        if n < 0 or n > self.horizon:
            raise EquationError(f"index {n} outside analysis horizon [0, {self.horizon}]")

    def eval_coeff(self, i: int, n: int) -> Fraction:
        self._check_range(n)
        return self.terms[i].coeff.value_at(n)

    def eval_arg(self, i: int, n: int) -> int:
        self._check_range(n)
        return self.terms[i].arg.evaluate(n, self.direction)

    def coeff_unchecked(self, i: int, n: int) -> Fraction:
        """Coefficient via the periodic rule without the horizon range check."""
        return self.terms[i].coeff.value_at(n)

    def arg_unchecked(self, i: int, n: int) -> int:
        return self.terms[i].arg.evaluate(n, self.direction)

    def coeff_sum(self, n: int) -> Fraction:
        return sum((self.coeff_unchecked(i, n) for i in range(self.m)), Fraction(0))

    # -- structural quantities ---------------------------------------------

    @property
    def structure_period(self) -> int:
        """Common period of all coefficient blocks and argument rules."""
        result = 1
        for term in self.terms:
            result = math.lcm(result, len(term.coeff.period), term.arg.modulus)
        return result

    @property
    def preamble_end(self) -> int:
        """First index past every coefficient preamble and argument override."""
        end = 0
        for term in self.terms:
            end = max(end, term.coeff.preamble_end)
            for n, _ in term.arg.overrides:
                end = max(end, n + 1)
        return end

    @property
    def max_deviation(self) -> int:
        """Largest finite deviation component; constant cases contribute |c|+1."""
        dev = 1
        for term in self.terms:
            rule = term.arg
            dev = max(dev, rule.max_offset)
            for case in rule.cases:
                if case.kind is CaseKind.CONSTANT:
                    dev = max(dev, abs(case.value) + 1)
            for n, value in rule.overrides:
                dev = max(dev, abs(n - value))
        return dev

    def deviation_bounds(self) -> list[Optional[int]]:
        return [term.arg.deviation_bound(self.direction) for term in self.terms]

    @property
    def initial_depth(self) -> int:
        """w = -min arg over the horizon (retarded); smallest referenced index is -w."""
        if self.direction is not Direction.RETARDED:
            return 0
        lowest = 0
        for i, term in enumerate(self.terms):
            rule = term.arg
            for class_index, case in enumerate(rule.cases):
                if case.kind is CaseKind.CONSTANT:
                    lowest = min(lowest, case.value)
                else:
                    lowest = min(lowest, class_index - case.value)
            for _, value in rule.overrides:
                lowest = min(lowest, value)
        return -lowest

    def stable_start(self, depth_units: int = 1) -> int:
        """Index past which coefficient and argument patterns are purely periodic,
        with headroom for deviation chains of the given depth."""
        return self.preamble_end + depth_units * (self.max_deviation + 1)


def default_horizon(terms: Sequence[Term], direction: Direction) -> int:
    probe = EquationSpec(direction=direction, terms=tuple(terms), horizon=1 << 30)
    return probe.preamble_end + 10 * probe.structure_period + 10 * probe.max_deviation


# -- envelope maps -----------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeTable:
    """Per-term and combined monotone envelopes of the deviating arguments."""

    per_term: tuple[tuple[int, ...], ...]
    combined: tuple[int, ...]


def build_phi(eq: EquationSpec) -> EnvelopeTable:
    """Running maxima of retarded arguments; combined map is the pointwise max."""
    if eq.direction is not Direction.RETARDED:
        raise EquationError("phi envelope is defined for retarded equations")
    per_term = []
    for i in range(eq.m):
        running = []
        best = None
        for n in range(eq.horizon + 1):
            t = eq.arg_unchecked(i, n)
            best = t if best is None else max(best, t)
            running.append(best)
        per_term.append(tuple(running))
    combined = tuple(max(col) for col in zip(*per_term))
    return EnvelopeTable(tuple(per_term), combined)


def build_rho(eq: EquationSpec) -> EnvelopeTable:
    """Forward minima of advanced arguments; combined map is the pointwise min.

    The infinite min over s >= n reduces to s in [n, sigma(n) - 1] because
    sigma(s) >= s+1 >= sigma(n) once s >= sigma(n) - 1.
    """
    if eq.direction is not Direction.ADVANCED:
        raise EquationError("rho envelope is defined for advanced equations")
    per_term = []
    for i in range(eq.m):
        values = []
        for n in range(eq.horizon + 1):
            sigma_n = eq.arg_unchecked(i, n)
            best = sigma_n
            for s in range(n, sigma_n):
                best = min(best, eq.arg_unchecked(i, s))
            values.append(best)
        per_term.append(tuple(values))
    combined = tuple(min(col) for col in zip(*per_term))
    return EnvelopeTable(tuple(per_term), combined)


# -- hypothesis checking ------------------------------------------------------


@dataclass(frozen=True)
class HypothesisReport:
    """Which standing hypotheses hold, with the bounds that witness them."""

    arguments_tend_to_infinity: bool          # (1.1) / (1.2): no constant cases
    bounded_deviations: bool                  # (1.1') / (1.2')
    deviation_bounds: tuple[Optional[int], ...]
    coeff_sum_below_one: bool                 # sum of coefficients < 1 at every n
    coeff_sum_violations: tuple[int, ...]
    unit_sum_witnesses: tuple[int, ...]       # n in the periodic part with sum >= 1
    unit_sum_infinite: bool
    initial_depth: int

    @property
    def max_deviation_bound(self) -> Optional[int]:
        if not self.bounded_deviations:
            return None
        return max(b for b in self.deviation_bounds if b is not None)


def check_hypotheses(eq: EquationSpec) -> HypothesisReport:
    bounds = tuple(eq.deviation_bounds())
    bounded = all(b is not None for b in bounds)
    # Offset-only residue rules drive the argument to infinity; a constant
    # case pins it forever on one residue class.
    tends_to_infinity = not any(term.arg.has_constant_case for term in eq.terms)

    violations = []
    for n in range(eq.horizon + 1):
        if eq.coeff_sum(n) >= 1:
            violations.append(n)

    period = eq.structure_period
    base = eq.preamble_end
    periodic_witnesses = [n for n in range(base, base + period) if eq.coeff_sum(n) >= 1]
    witnesses = tuple(n for n in violations if n < base) + tuple(periodic_witnesses)

    return HypothesisReport(
        arguments_tend_to_infinity=tends_to_infinity,
        bounded_deviations=bounded,
        deviation_bounds=bounds,
        coeff_sum_below_one=not violations,
        coeff_sum_violations=tuple(violations),
        unit_sum_witnesses=witnesses,
        unit_sum_infinite=bool(periodic_witnesses),
        initial_depth=eq.initial_depth,
    )


# -- JSON input ---------------------------------------------------------------

_KIND_TO_DIRECTION = {"retarded": Direction.RETARDED, "advanced": Direction.ADVANCED}


def _require_keys(doc: dict, allowed: set[str], context: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise EquationError(f"{context}: unknown fields {sorted(unknown)}")


def collect_parameters(doc: dict) -> set[str]:
    """Names of "$param" placeholders appearing in coefficient slots."""
    names: set[str] = set()
    for term in doc.get("terms", []):
        coeff = term.get("coeff", {})
        for key in ("preamble", "period"):
            for entry in coeff.get(key, []):
                if isinstance(entry, str) and entry.startswith("$"):
                    names.add(entry[1:])
    return names


def _parse_coeff_entry(entry, params: Optional[dict[str, Fraction]], context: str) -> Fraction:
    if isinstance(entry, str) and entry.startswith("$"):
        name = entry[1:]
        if params is None or name not in params:
            raise EquationError(f"{context}: parameter ${name} has no value")
        return params[name]
    return parse_rational(entry)


def equation_from_json(
    doc: dict,
    params: Optional[dict[str, Fraction]] = None,
    horizon_override: Optional[int] = None,
) -> EquationSpec:
    if not isinstance(doc, dict):
        raise EquationError("equation document must be a JSON object")
    _require_keys(doc, {"kind", "horizon", "terms"}, "equation")
    try:
        direction = _KIND_TO_DIRECTION[doc["kind"]]
    except KeyError:
        raise EquationError(f"kind must be 'retarded' or 'advanced', got {doc.get('kind')!r}") from None
    raw_terms = doc.get("terms")
    if not isinstance(raw_terms, list) or not raw_terms:
        raise EquationError("terms must be a nonempty list")

    terms = []
    for t_index, raw in enumerate(raw_terms):
        context = f"terms[{t_index}]"
        if not isinstance(raw, dict):
            raise EquationError(f"{context}: must be an object")
        _require_keys(raw, {"coeff", "arg"}, context)
        coeff_doc = raw.get("coeff")
        arg_doc = raw.get("arg")
        if not isinstance(coeff_doc, dict) or not isinstance(arg_doc, dict):
            raise EquationError(f"{context}: coeff and arg must be objects")
        _require_keys(coeff_doc, {"preamble", "period"}, f"{context}.coeff")
        preamble = tuple(
            _parse_coeff_entry(v, params, f"{context}.coeff.preamble")
            for v in coeff_doc.get("preamble", [])
        )
        period = tuple(
            _parse_coeff_entry(v, params, f"{context}.coeff.period")
            for v in coeff_doc.get("period", [])
        )
        _require_keys(arg_doc, {"modulus", "cases", "overrides"}, f"{context}.arg")
        raw_cases = arg_doc.get("cases")
        if not isinstance(raw_cases, list):
            raise EquationError(f"{context}.arg: cases must be a list")
        cases = []
        for c_index, case_doc in enumerate(raw_cases):
            if not isinstance(case_doc, dict):
                raise EquationError(f"{context}.arg.cases[{c_index}]: must be an object")
            _require_keys(case_doc, {"kind", "value"}, f"{context}.arg.cases[{c_index}]")
            kind_str = case_doc.get("kind")
            if kind_str not in ("offset", "constant"):
                raise EquationError(
                    f"{context}.arg.cases[{c_index}]: kind must be 'offset' or 'constant'"
                )
            value = case_doc.get("value")
            if not isinstance(value, int) or isinstance(value, bool):
                raise EquationError(f"{context}.arg.cases[{c_index}]: value must be an integer")
            cases.append(ArgCase(CaseKind(kind_str), value))
        overrides = []
        for o_index, pair in enumerate(arg_doc.get("overrides", [])):
            if (not isinstance(pair, list)) or len(pair) != 2 or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in pair
            ):
                raise EquationError(f"{context}.arg.overrides[{o_index}]: must be [n, value]")
            overrides.append((pair[0], pair[1]))
        rule = ArgumentRule(int(arg_doc["modulus"]), tuple(cases), tuple(overrides))
        terms.append(Term(PeriodicSequence(preamble, period), rule))

    horizon = horizon_override if horizon_override is not None else doc.get("horizon")
    if horizon is None:
        horizon = default_horizon(terms, direction)
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon <= 0:
        raise EquationError("horizon must be a positive integer")
    return EquationSpec(direction=direction, terms=tuple(terms), horizon=horizon)


def equation_to_json(eq: EquationSpec) -> dict:
    terms = []
    for term in eq.terms:
        terms.append({
            "coeff": {
                "preamble": [format_rational(v) for v in term.coeff.preamble],
                "period": [format_rational(v) for v in term.coeff.period],
            },
            "arg": {
                "modulus": term.arg.modulus,
                "cases": [{"kind": case.kind.value, "value": case.value} for case in term.arg.cases],
                "overrides": [[n, v] for n, v in term.arg.overrides],
            },
        })
    return {"kind": eq.direction.value, "horizon": eq.horizon, "terms": terms}


def load_equation(
    path: Union[str, Path],
    params: Optional[dict[str, Fraction]] = None,
    horizon_override: Optional[int] = None,
) -> EquationSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise EquationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise EquationError(f"{path} is not valid JSON: {exc}") from None
    return equation_from_json(doc, params=params, horizon_override=horizon_override)
