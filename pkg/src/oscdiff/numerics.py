"""Exact rational arithmetic and adaptive-precision interval enclosures.

All criterion quantities are exact ``fractions.Fraction`` values.  Strict
comparisons against irrational thresholds (1/e, square-root expressions) are
adjudicated through nested outward-rounded interval enclosures whose
endpoints are themselves exact rationals, so a verdict is never an artifact
of floating-point rounding.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import isqrt
from typing import Callable, Union

Rational = Fraction

DEFAULT_MAX_PRECISION_BITS = 4096
_START_PRECISION_BITS = 64


class NumericsError(ValueError):
    """Domain or representation error in exact numeric input."""


def parse_rational(text: Union[str, int]) -> Fraction:
    """Parse "p", "p/q" or an exact decimal literal into a Fraction."""
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise NumericsError(f"rational must be a string or integer, got {type(text).__name__}")
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise NumericsError(f"cannot parse rational {text!r}: {exc}") from None
    return value


def format_rational(value: Fraction) -> str:
    """Serialize as "p/q", or "p" when the denominator is 1."""
    return str(value)


def decimal_str(value: Fraction, significant_digits: int = 9) -> str:
    """Deterministic decimal rendering with exactly the given significant digits."""
    if value == 0:
        return "0"
    ctx = decimal.Context(prec=significant_digits + 2, rounding=decimal.ROUND_HALF_EVEN)
    quotient = ctx.divide(decimal.Decimal(value.numerator), decimal.Decimal(value.denominator))
    target_exponent = quotient.adjusted() - (significant_digits - 1)
    quantum = decimal.Decimal((0, (1,), target_exponent))
    rounded = quotient.quantize(quantum, rounding=decimal.ROUND_HALF_EVEN, context=ctx)
    return format(rounded, "f")


class ComparisonOutcome(Enum):
    LESS = "less"
    GREATER = "greater"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ComparisonVerdict:
    outcome: ComparisonOutcome
    precision_used: int

    @property
    def is_greater(self) -> bool:
        return self.outcome is ComparisonOutcome.GREATER

    @property
    def is_less(self) -> bool:
        return self.outcome is ComparisonOutcome.LESS


@dataclass(frozen=True)
class RealInterval:
    """Closed interval [lower, upper] guaranteed to contain the exact value.

    Endpoints are exact rationals (dyadic after rounding steps), so interval
    arithmetic with rational operands needs no further rounding.
    """

    lower: Fraction
    upper: Fraction
    precision_bits: int

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise NumericsError(f"empty interval: [{self.lower}, {self.upper}]")
        if self.precision_bits <= 0:
            raise NumericsError("precision_bits must be positive")

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, value: Fraction) -> bool:
        return self.lower <= value <= self.upper

    def intersect(self, other: "RealInterval") -> "RealInterval":
        return RealInterval(
            max(self.lower, other.lower),
            min(self.upper, other.upper),
            max(self.precision_bits, other.precision_bits),
        )

    # Arithmetic with exact rational operands and other intervals; endpoints
    # stay exact, so containment is preserved without extra rounding.
    def __add__(self, other):
        if isinstance(other, RealInterval):
            return RealInterval(self.lower + other.lower, self.upper + other.upper,
                                min(self.precision_bits, other.precision_bits))
        q = Fraction(other)
        return RealInterval(self.lower + q, self.upper + q, self.precision_bits)

    __radd__ = __add__

    def __neg__(self):
        return RealInterval(-self.upper, -self.lower, self.precision_bits)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RealInterval) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + Fraction(other)

    def __mul__(self, other):
        if isinstance(other, RealInterval):
            products = [a * b for a in (self.lower, self.upper) for b in (other.lower, other.upper)]
            return RealInterval(min(products), max(products),
                                min(self.precision_bits, other.precision_bits))
        q = Fraction(other)
        if q >= 0:
            return RealInterval(self.lower * q, self.upper * q, self.precision_bits)
        return RealInterval(self.upper * q, self.lower * q, self.precision_bits)

    __rmul__ = __mul__

    def __truediv__(self, other):
        q = Fraction(other)
        if q == 0:
            raise ZeroDivisionError("interval divided by zero rational")
        return self * (Fraction(1) / q)


def _round_down(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(value.numerator * scale // value.denominator, scale)


def _round_up(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(-((-value.numerator) * scale // value.denominator), scale)


def interval_inv_e(precision_bits: int) -> RealInterval:
    """Certified enclosure of 1/e with width at most 2**(2 - precision_bits).

    Uses the alternating factorial series: consecutive partial sums bracket
    the limit, and the bracket is tightened until narrower than the target,
    then rounded outward onto a dyadic grid.
    """
    if precision_bits < 16:
        raise NumericsError("precision_bits must be at least 16")
    tolerance = Fraction(1, 1 << (precision_bits + 1))
    term = Fraction(1)
    partial = Fraction(1)
    k = 0
    previous = partial
    while term > tolerance:
        k += 1
        term /= k
        previous = partial
        partial += term if k % 2 == 0 else -term
    lower, upper = sorted((previous, partial))
    return RealInterval(
        _round_down(lower, precision_bits + 2),
        _round_up(upper, precision_bits + 2),
        precision_bits,
    )


def interval_sqrt(x: Fraction, precision_bits: int) -> RealInterval:
    """Certified enclosure of sqrt(x) for x >= 0 via integer square roots.

    Perfect squares of rationals collapse to exact point intervals; otherwise
    the width is below 2**(1 - precision_bits).
    """
    if precision_bits <= 0:
        raise NumericsError("precision_bits must be positive")
    x = Fraction(x)
    if x < 0:
        raise NumericsError(f"square root of negative rational {x}")
    if x == 0:
        return RealInterval(Fraction(0), Fraction(0), precision_bits)
    num_root = isqrt(x.numerator)
    den_root = isqrt(x.denominator)
    if num_root * num_root == x.numerator and den_root * den_root == x.denominator:
        exact = Fraction(num_root, den_root)
        return RealInterval(exact, exact, precision_bits)
    scale = 1 << precision_bits
    scaled = x.numerator * scale * scale // x.denominator
    lower = Fraction(isqrt(scaled), scale)
    upper = Fraction(isqrt(scaled + 1) + 1, scale)
    return RealInterval(lower, upper, precision_bits)


IntervalThunk = Callable[[int], RealInterval]


def compare(
    value: Fraction,
    threshold: Union[Fraction, int, IntervalThunk],
    max_precision_bits: int = DEFAULT_MAX_PRECISION_BITS,
) -> ComparisonVerdict:
    """Adjudicate the strict comparison of an exact value against a threshold.

    Rational thresholds are compared exactly (equality counts as LESS, i.e.
    "not strictly greater").  Interval-producing thunks are evaluated at
    doubling precision, intersecting successive enclosures, until the value
    clears an endpoint or the precision budget is exhausted.
    """
    if isinstance(threshold, (Fraction, int)):
        exact = Fraction(threshold)
        if value > exact:
            return ComparisonVerdict(ComparisonOutcome.GREATER, 0)
        return ComparisonVerdict(ComparisonOutcome.LESS, 0)

    bits = min(_START_PRECISION_BITS, max_precision_bits)
    enclosure = None
    while True:
        current = threshold(bits)
        enclosure = current if enclosure is None else enclosure.intersect(current)
        if value > enclosure.upper:
            return ComparisonVerdict(ComparisonOutcome.GREATER, bits)
        if value < enclosure.lower:
            return ComparisonVerdict(ComparisonOutcome.LESS, bits)
        if bits >= max_precision_bits:
            return ComparisonVerdict(ComparisonOutcome.INDETERMINATE, bits)
        bits = min(bits * 2, max_precision_bits)
