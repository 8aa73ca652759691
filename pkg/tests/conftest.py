from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest

from oscdiff.equations import (
    ArgCase,
    ArgumentRule,
    CaseKind,
    Direction,
    EquationSpec,
    PeriodicSequence,
    Term,
)

EQUATIONS_DIR = Path(__file__).resolve().parent.parent / "equations"


def periodic(*values, preamble=()):
    return PeriodicSequence(
        tuple(Fraction(v) for v in preamble),
        tuple(Fraction(v) for v in values),
    )


def offset_rule(*ds):
    return ArgumentRule(len(ds), tuple(ArgCase(CaseKind.OFFSET, d) for d in ds))


@pytest.fixture
def eq21():
    """Single term, constant coefficient 1/4, unit delay."""
    return EquationSpec(
        Direction.RETARDED, (Term(periodic("1/4"), offset_rule(1)),), horizon=80
    )


@pytest.fixture
def eq22():
    """Coefficient 1/2 on one residue class, 3/10 elsewhere; argument pinned
    at -1 on the 1/2 class."""
    rule = ArgumentRule(3, (
        ArgCase(CaseKind.CONSTANT, -1),
        ArgCase(CaseKind.OFFSET, 1),
        ArgCase(CaseKind.OFFSET, 1),
    ))
    return EquationSpec(
        Direction.RETARDED,
        (Term(periodic("1/2", "3/10", "3/10"), rule),),
        horizon=60,
    )


@pytest.fixture
def eq42():
    """Two terms 1/8 and 1/12 with parity-dependent delays 3/1 and 4/1."""
    return EquationSpec(
        Direction.RETARDED,
        (
            Term(periodic("1/8"), offset_rule(3, 1)),
            Term(periodic("1/12"), offset_rule(4, 1)),
        ),
        horizon=120,
    )


@pytest.fixture
def eq43():
    """Two terms with parity-periodic first coefficient."""
    return EquationSpec(
        Direction.RETARDED,
        (
            Term(periodic("3/125", "37/125"), offset_rule(1, 2)),
            Term(periodic("1/125"), offset_rule(2, 3)),
        ),
        horizon=100,
    )


def make_eq41(p, horizon=70):
    """One-parameter family: constant coefficient, delays 1/2/4 by residue mod 3."""
    return EquationSpec(
        Direction.RETARDED,
        (Term(periodic(Fraction(p)), offset_rule(1, 2, 4)),),
        horizon=horizon,
    )


@pytest.fixture
def eq41_factory():
    return make_eq41


@pytest.fixture
def eq_adv_unit():
    """Advanced: sigma(n) = n+1, coefficient 1/4."""
    return EquationSpec(
        Direction.ADVANCED, (Term(periodic("1/4"), offset_rule(1)),), horizon=60
    )


# -- randomized spec generation (seeded, deterministic) -------------------------


def random_offset_spec(rng: random.Random, direction=Direction.RETARDED,
                       max_terms=2, max_period=6, max_dev=5, horizon=None) -> EquationSpec:
    """Random offset-only spec with coefficient sums strictly below 1."""
    m = rng.randint(1, max_terms)
    terms = []
    # Budget the coefficient mass so the total at any index stays below 1.
    budgets = [Fraction(rng.randint(1, 8), 10 * m) for _ in range(m)]
    for t in range(m):
        period_len = rng.randint(1, max_period)
        values = tuple(
            budgets[t] * Fraction(rng.randint(0, 4), 4) for _ in range(period_len)
        )
        modulus = rng.randint(1, max_period)
        cases = tuple(
            ArgCase(CaseKind.OFFSET, rng.randint(1, max_dev)) for _ in range(modulus)
        )
        terms.append(Term(PeriodicSequence((), values), ArgumentRule(modulus, cases)))
    if horizon is None:
        # Large enough for two full combined periods past the stable regime
        # even when the period lengths and moduli have a big lcm.
        horizon = 400
    return EquationSpec(direction, tuple(terms), horizon=horizon)


# -- independent oracles ---------------------------------------------------------


def reverse_retarded(eq: EquationSpec, pivot: int) -> EquationSpec:
    """Advanced equation obtained by reading a retarded one backwards from
    the pivot index: coefficients q(n) = p(pivot - n), advances
    sigma(n) = pivot - tau(pivot - n).  Requires offset-only rules and
    preamble-free coefficients so the reversal stays residue-periodic."""
    terms = []
    for term in eq.terms:
        if term.coeff.preamble or term.arg.overrides or term.arg.has_constant_case:
            raise ValueError("reversal oracle needs preamble-free offset-only terms")
        period = term.coeff.period
        length = len(period)
        reversed_period = tuple(period[(pivot - j) % length] for j in range(length))
        modulus = term.arg.modulus
        cases = tuple(
            ArgCase(CaseKind.OFFSET, term.arg.cases[(pivot - j) % modulus].value)
            for j in range(modulus)
        )
        terms.append(Term(PeriodicSequence((), reversed_period),
                          ArgumentRule(modulus, cases)))
    return EquationSpec(Direction.ADVANCED, tuple(terms), horizon=eq.horizon)


def product_form_window_sum(eq: EquationSpec, phi_combined, n: int) -> Fraction:
    """Depth-1 window sum evaluated directly in product form, bypassing the
    factor tables: sum over the window of p_i(j) / prod (1 - sum_l p_l(i))."""
    base = phi_combined[n]
    total = Fraction(0)
    for j in range(base, n + 1):
        for i in range(eq.m):
            coeff = eq.coeff_unchecked(i, j)
            if coeff == 0:
                continue
            t = eq.arg_unchecked(i, j)
            prod = Fraction(1)
            for idx in range(t, base):
                prod *= 1 - eq.coeff_sum(idx)
            total += coeff / prod
    return total
