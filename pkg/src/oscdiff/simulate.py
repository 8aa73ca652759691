"""Exact solution generation and nonoscillation certificates.

Traces are computed in exact rational arithmetic, so the defining recurrence
holds with residual identically zero and sign information is never a
rounding artifact.  Finite traces yield oscillation *evidence* only; a
verified periodic-solution certificate is a proof of nonoscillation.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Union

from .equations import Direction, EquationSpec
from .numerics import decimal_str, format_rational, parse_rational


class SimulationError(ValueError):
    """Missing or inconsistent data for exact solving or verification."""


@dataclass(frozen=True)
class InitialData:
    """Exact solution values on the segment the solver reads before stepping."""

    values: tuple[tuple[int, Fraction], ...]

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, Fraction]) -> "InitialData":
        return cls(tuple(sorted((int(n), Fraction(v)) for n, v in mapping.items())))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.values)


def required_initial_range(eq: EquationSpec, upto: Optional[int] = None) -> tuple[int, int]:
    """Index range the solver must know before producing new values."""
    if eq.direction is Direction.RETARDED:
        end = eq.horizon if upto is None else upto
        lowest = 0
        for i in range(eq.m):
            for n in range(0, end):
                lowest = min(lowest, eq.arg_unchecked(i, n))
        return lowest, 0
    bounds = [b for b in eq.deviation_bounds() if b is not None]
    if len(bounds) != eq.m:
        raise SimulationError("advanced solving needs uniformly bounded advances")
    mu = max(bounds)
    return eq.horizon - mu, eq.horizon


def random_initial_data(eq: EquationSpec, seed: int, upto: Optional[int] = None) -> InitialData:
    """Seeded pseudorandom exact rational initial values on the required segment."""
    lo, hi = required_initial_range(eq, upto)
    rng = random.Random(seed)
    values = {}
    for n in range(lo, hi + 1):
        numerator = rng.randint(-32, 32)
        if numerator == 0:
            numerator = 1
        values[n] = Fraction(numerator, rng.randint(1, 16))
    return InitialData.from_mapping(values)


@dataclass(frozen=True)
class Trace:
    """Exact solution values on a contiguous index window."""

    start: int
    values: tuple[Fraction, ...]

    @property
    def end(self) -> int:
        return self.start + len(self.values) - 1

    def value_at(self, n: int) -> Fraction:
        if n < self.start or n > self.end:
            raise SimulationError(f"trace undefined at {n} (window [{self.start}, {self.end}])")
        return self.values[n - self.start]

    def sign_change_indices(self) -> tuple[int, ...]:
        """Indices where the sign flips relative to the last nonzero value."""
        changes = []
        last_sign = 0
        for offset, value in enumerate(self.values):
            sign = (value > 0) - (value < 0)
            if sign != 0:
                if last_sign != 0 and sign != last_sign:
                    changes.append(self.start + offset)
                last_sign = sign
        return tuple(changes)

    def constant_sign_suffix(self) -> tuple[Optional[int], int]:
        """(start index, sign) of the maximal strictly signed suffix; sign 0 if none."""
        idx = len(self.values) - 1
        if idx < 0:
            return None, 0
        sign = (self.values[idx] > 0) - (self.values[idx] < 0)
        if sign == 0:
            return None, 0
        start = idx
        while start > 0:
            prev = self.values[start - 1]
            prev_sign = (prev > 0) - (prev < 0)
            if prev_sign != sign:
                break
            start -= 1
        return self.start + start, sign


def solve_retarded(eq: EquationSpec, init: InitialData, upto: int) -> Trace:
    """Forward exact recurrence x(n+1) = x(n) - sum_i p_i(n) x(arg_i(n))."""
    if eq.direction is not Direction.RETARDED:
        raise SimulationError("solve_retarded needs a retarded equation")
    if upto > eq.horizon:
        raise SimulationError(f"upto={upto} exceeds the analysis horizon {eq.horizon}")
    known = init.as_dict()
    lo, hi = required_initial_range(eq, upto)
    for n in range(lo, hi + 1):
        if n not in known:
            raise SimulationError(f"initial data missing x({n}) (needs [{lo}, {hi}])")
    start = min(known)
    values = dict(known)
    for n in range(0, upto):
        step = values[n]
        for i in range(eq.m):
            coeff = eq.coeff_unchecked(i, n)
            if coeff == 0:
                continue
            ref = eq.arg_unchecked(i, n)
            if ref not in values:
                raise SimulationError(f"recurrence at n={n} references unknown x({ref})")
            step -= coeff * values[ref]
        values[n + 1] = step
    window = tuple(values[n] for n in range(start, upto + 1))
    return Trace(start, window)


def solve_advanced(eq: EquationSpec, terminal: InitialData, downto: int = 0) -> Trace:
    """Backward exact recurrence x(n-1) = x(n) - sum_i p_i(n) x(arg_i(n))."""
    if eq.direction is not Direction.ADVANCED:
        raise SimulationError("solve_advanced needs an advanced equation")
    lo, hi = required_initial_range(eq)
    if downto < 0:
        raise SimulationError("downto must be >= 0")
    known = terminal.as_dict()
    for n in range(lo, hi + 1):
        if n not in known:
            raise SimulationError(f"terminal data missing x({n}) (needs [{lo}, {hi}])")
    values = dict(known)
    for n in range(lo, downto, -1):
        step = values[n]
        for i in range(eq.m):
            coeff = eq.coeff_unchecked(i, n)
            if coeff == 0:
                continue
            ref = eq.arg_unchecked(i, n)
            if ref not in values:
                raise SimulationError(f"recurrence at n={n} references unknown x({ref})")
            step -= coeff * values[ref]
        values[n - 1] = step
    window = tuple(values[n] for n in range(downto, hi + 1))
    return Trace(downto, window)


def residual(eq: EquationSpec, values: Mapping[int, Fraction], n: int) -> Fraction:
    """Defining recurrence residual at n; zero iff the values satisfy it there."""
    if eq.direction is Direction.RETARDED:
        total = values[n + 1] - values[n]
    else:
        total = values[n] - values[n - 1]
    for i in range(eq.m):
        coeff = eq.coeff_unchecked(i, n)
        if coeff == 0:
            continue
        ref = values[eq.arg_unchecked(i, n)]
        total = total + coeff * ref if eq.direction is Direction.RETARDED else total - coeff * ref
    return total


# -- oscillation evidence -------------------------------------------------------


class OscillationEvidence(Enum):
    OSCILLATING = "OSCILLATING_EVIDENCE"
    NONOSCILLATING = "NONOSC_EVIDENCE"
    DEGENERATE = "DEGENERATE"


@dataclass(frozen=True)
class OscillationReport:
    kind: OscillationEvidence
    sign_changes_beyond_settle: tuple[int, ...]
    suffix_start: Optional[int]
    suffix_sign: int
    settle: int


def default_settle(eq: EquationSpec) -> int:
    return eq.preamble_end + 4 * eq.structure_period


def detect_oscillation(trace: Trace, settle: int) -> OscillationReport:
    """Classify the trace beyond the settle index.  Evidence, never proof."""
    if trace.end <= settle:
        raise SimulationError(f"trace ends at {trace.end}, settle index {settle} leaves no tail")
    tail_values = [trace.value_at(n) for n in range(max(settle, trace.start), trace.end + 1)]
    if all(v == 0 for v in trace.values):
        return OscillationReport(OscillationEvidence.DEGENERATE, (), None, 0, settle)
    changes = tuple(n for n in trace.sign_change_indices() if n > settle)
    suffix_start, suffix_sign = trace.constant_sign_suffix()
    if changes:
        return OscillationReport(OscillationEvidence.OSCILLATING, changes,
                                 suffix_start, suffix_sign, settle)
    if all(v > 0 for v in tail_values) or all(v < 0 for v in tail_values):
        return OscillationReport(OscillationEvidence.NONOSCILLATING, (),
                                 suffix_start, suffix_sign, settle)
    # Mixed zeros without a strict flip in the tail: not eventually signed.
    return OscillationReport(OscillationEvidence.OSCILLATING, changes,
                             suffix_start, suffix_sign, settle)


# -- periodic-solution certificates ----------------------------------------------


@dataclass(frozen=True)
class PeriodicSolutionCertificate:
    """Claimed eventually periodic solution: preamble, repeating block, start."""

    preamble: tuple[Fraction, ...]
    period: tuple[Fraction, ...]
    start: int = 0

    def __post_init__(self) -> None:
        if not self.period:
            raise SimulationError("certificate period must be nonempty")

    @property
    def lowest_index(self) -> int:
        return self.start - len(self.preamble)

    def value_at(self, n: int) -> Fraction:
        if n < self.lowest_index:
            raise SimulationError(f"certificate undefined at {n}")
        if n < self.start:
            return self.preamble[n - self.lowest_index]
        return self.period[(n - self.start) % len(self.period)]


@dataclass(frozen=True)
class VerificationResult:
    verified: bool
    failing_index: Optional[int]
    constant_sign: int          # +1 / -1 when every period value shares it, else 0
    degenerate: bool            # identically zero period
    checked_through: int
    reason: str

    def __bool__(self) -> bool:
        return self.verified


class _CertificateView:
    """Mapping view over a certificate for residual evaluation."""

    def __init__(self, cert: PeriodicSolutionCertificate):
        self.cert = cert

    def __getitem__(self, n: int) -> Fraction:
        return self.cert.value_at(n)


def verify_periodic_solution(
    eq: EquationSpec, cert: PeriodicSolutionCertificate
) -> VerificationResult:
    """Exact residual check over one full compatibility block.

    Residuals are verified for every index from the first applicable one up
    through a full lcm block of the solution period and the equation's own
    structural period, taken past all preambles and overrides.  Beyond that
    point both the claimed values and the equation data repeat, so the
    residuals repeat as well and the check constitutes a proof.
    """
    period_len = len(cert.period)
    block = math.lcm(period_len, eq.structure_period)
    first = 0 if eq.direction is Direction.RETARDED else 1
    # Past this index every referenced value comes from the repeating block
    # and the equation patterns have stabilized.
    stable = max(
        cert.start + eq.max_deviation + 1,
        eq.preamble_end + 1,
        first,
    )
    check_through = stable + block - 1

    view = _CertificateView(cert)
    lowest = cert.lowest_index
    for n in range(first, check_through + 1):
        refs = [eq.arg_unchecked(i, n) for i in range(eq.m)]
        needed = min([n - 1 if eq.direction is Direction.ADVANCED else n, *refs])
        if needed < lowest:
            return VerificationResult(
                False, None, 0, False, n - 1,
                f"recurrence at n={n} references x({needed}) below the certificate domain",
            )
        if residual(eq, view, n) != 0:
            return VerificationResult(
                False, n, 0, False, n - 1, f"nonzero residual at n={n}"
            )

    if all(v == 0 for v in cert.period):
        sign, degenerate = 0, True
    else:
        positive = all(v > 0 for v in cert.period)
        negative = all(v < 0 for v in cert.period)
        sign = 1 if positive else (-1 if negative else 0)
        degenerate = False
    return VerificationResult(True, None, sign, degenerate, check_through, "verified")


# -- file formats -----------------------------------------------------------------

TRACE_CSV_HEADER = ["n", "value_rational", "value_decimal", "sign"]


def write_trace_csv(trace: Trace, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_CSV_HEADER)
        for offset, value in enumerate(trace.values):
            n = trace.start + offset
            sign = (value > 0) - (value < 0)
            writer.writerow([n, format_rational(value), decimal_str(value), sign])


def read_trace_csv(path: Union[str, Path]) -> Trace:
    rows = []
    if not Path(path).exists():
        raise SimulationError(f"cannot read {path}: no such file")
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[:2] != TRACE_CSV_HEADER[:2]:
            raise SimulationError(f"{path}: not a trace CSV (missing header)")
        for row in reader:
            if len(row) < 2:
                raise SimulationError(f"{path}: malformed row {row!r}")
            rows.append((int(row[0]), parse_rational(row[1])))
    if not rows:
        raise SimulationError(f"{path}: empty trace")
    rows.sort()
    start = rows[0][0]
    if [n for n, _ in rows] != list(range(start, start + len(rows))):
        raise SimulationError(f"{path}: trace indices are not contiguous")
    return Trace(start, tuple(v for _, v in rows))


def certificate_to_json(cert: PeriodicSolutionCertificate) -> dict:
    return {
        "preamble": [format_rational(v) for v in cert.preamble],
        "period": [format_rational(v) for v in cert.period],
        "start": cert.start,
    }


def certificate_from_json(doc: dict) -> PeriodicSolutionCertificate:
    if not isinstance(doc, dict):
        raise SimulationError("certificate must be a JSON object")
    unknown = set(doc) - {"preamble", "period", "start"}
    if unknown:
        raise SimulationError(f"certificate: unknown fields {sorted(unknown)}")
    preamble = tuple(parse_rational(v) for v in doc.get("preamble", []))
    period = tuple(parse_rational(v) for v in doc.get("period", []))
    start = doc.get("start", 0)
    if not isinstance(start, int) or isinstance(start, bool):
        raise SimulationError("certificate start must be an integer")
    return PeriodicSolutionCertificate(preamble, period, start)


def load_certificate(path: Union[str, Path]) -> PeriodicSolutionCertificate:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SimulationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SimulationError(f"{path} is not valid JSON: {exc}") from None
    return certificate_from_json(doc)


def verify_trace(eq: EquationSpec, trace: Trace) -> VerificationResult:
    """Residual check of a finite trace window (evidence for the window only)."""
    values = {trace.start + k: v for k, v in enumerate(trace.values)}
    if eq.direction is Direction.RETARDED:
        candidates = range(max(0, trace.start), trace.end)
    else:
        candidates = range(max(1, trace.start + 1), trace.end + 1)
    checked = -1
    for n in candidates:
        refs = [eq.arg_unchecked(i, n) for i in range(eq.m)]
        window = [n, n + 1 if eq.direction is Direction.RETARDED else n - 1, *refs]
        if min(window) < trace.start or max(window) > trace.end:
            continue
        if residual(eq, values, n) != 0:
            return VerificationResult(False, n, 0, False, checked, f"nonzero residual at n={n}")
        checked = n
    if checked < 0:
        return VerificationResult(False, None, 0, False, -1,
                                  "trace too short to check any recurrence index")
    return VerificationResult(True, None, 0, False, checked, "all in-window residuals vanish")
