"""Kernel tests: canonical arithmetic, powers, square relations,
exp/log atoms, differentiation, substitution, and the parser round-trip.
"""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chlax.expr import (
    ONE,
    ZERO,
    FunctionSymbol,
    add,
    as_fraction,
    atoms_of,
    collect_linear,
    diff,
    diff_multi,
    ediv,
    epow,
    equal,
    grade_by_base,
    is_zero,
    jet,
    jet_atoms,
    make_exp,
    make_log,
    mul,
    neg,
    par,
    rat,
    scale,
    sub,
    substitute,
    sym_ref,
    var,
)
from chlax.parser import SymbolTable, parse, render

x, y, t = var("x"), var("y"), var("t")
a, b = par("a"), par("b")


# ---------------------------------------------------------------------------
# canonical arithmetic
# ---------------------------------------------------------------------------

def test_rational_folding():
    assert render(add(rat(1, 2), rat(1, 3))) == "5/6"
    assert render(mul(rat(2, 3), rat(9, 4))) == "3/2"
    assert is_zero(sub(rat(7, 3), ediv(rat(7), rat(3))))


def test_sum_canonical_order_is_stable():
    e1 = add(mul(a, x), rat(5), epow(x, 3))
    e2 = add(epow(x, 3), mul(a, x), rat(5))
    assert e1 is e2 or e1 == e2
    assert render(e1) == render(e2)


def test_subtraction_cancels_exactly():
    e = add(mul(rat(3, 7), epow(x, 2), y), neg(mul(y, epow(x, 2), rat(3, 7))))
    assert e == ZERO
    assert is_zero(e)


def test_scale_and_neg():
    e = add(x, y)
    assert equal(scale(e, F(-1)), neg(e))
    assert is_zero(add(e, neg(e)))


def test_multiplication_expands_products_of_sums():
    e = mul(add(x, y), sub(x, y))
    assert equal(e, sub(epow(x, 2), epow(y, 2)))


# ---------------------------------------------------------------------------
# powers
# ---------------------------------------------------------------------------

def test_integer_powers_merge_exponents():
    e = mul(epow(x, 2), epow(x, 3))
    assert render(e) == "x^5"
    assert equal(mul(epow(x, 2), epow(x, -2)), ONE)


def test_rational_roots_of_perfect_powers_fold():
    assert render(epow(rat(4), F(1, 2))) == "2"
    assert render(epow(rat(27, 8), F(1, 3))) == "3/2"


def test_irrational_rational_roots_become_exp_log():
    assert render(epow(rat(2), F(1, 2))) == "exp(1/2*log(2))"


def test_compound_fractional_power_becomes_exp_log():
    e = epow(add(x, mul(rat(2), y)), F(1, 2))
    assert render(e) == "exp(1/2*log(x + 2*y))"
    # squaring recovers the base exactly
    assert equal(mul(e, e), add(x, mul(rat(2), y)))


def test_compound_inverse_cancels_multiterm_base():
    e = add(epow(x, 2), rat(3))
    assert equal(mul(e, epow(e, -1)), ONE)


def test_compound_inverse_cancels_with_atomic_denominators():
    # bases that themselves carry negative atomic powers and rational
    # content must invert consistently
    e = sub(mul(rat(3, 2), epow(x, -2)), mul(y, epow(add(x, y), -1)))
    assert is_zero(sub(mul(e, epow(e, -1)), ONE))


def test_inverse_of_scaled_sum_strips_content():
    e = scale(add(x, y), F(6, 5))
    assert is_zero(sub(mul(e, epow(e, -1)), ONE))


# ---------------------------------------------------------------------------
# square relations on function symbols
# ---------------------------------------------------------------------------

def _sym_with_square():
    E = FunctionSymbol("E", ("x",))
    A = FunctionSymbol("A", ("x",))
    E.set_square(sub(epow(sym_ref(A), 2), rat(4)))
    return E, A


def test_even_powers_rewrite_through_square_relation():
    E, A = _sym_with_square()
    got = epow(sym_ref(E), 2)
    want = sub(epow(sym_ref(A), 2), rat(4))
    assert equal(got, want)


def test_odd_powers_keep_one_factor():
    E, A = _sym_with_square()
    got = epow(sym_ref(E), 3)
    want = mul(sym_ref(E), sub(epow(sym_ref(A), 2), rat(4)))
    assert equal(got, want)


def test_negative_power_uses_square_relation():
    E, A = _sym_with_square()
    got = epow(sym_ref(E), -1)
    # E^(-1) == E / E^2 == E * (A^2 - 4)^(-1)
    want = mul(sym_ref(E), epow(sub(epow(sym_ref(A), 2), rat(4)), -1))
    assert equal(got, want)
    assert is_zero(sub(mul(sym_ref(E), got), ONE))


# ---------------------------------------------------------------------------
# exp / log atoms
# ---------------------------------------------------------------------------

def test_exp_of_zero_is_one():
    assert make_exp(ZERO) == ONE


def test_exp_is_multiplicative():
    e1, e2 = make_exp(x), make_exp(y)
    assert equal(mul(e1, e2), make_exp(add(x, y)))


def test_exp_log_cancellation_on_integer_multiples():
    u = add(epow(x, 2), rat(3))
    assert equal(make_exp(scale(make_log(u), 2)), mul(u, u))
    assert equal(make_exp(neg(make_log(u))), epow(u, -1))


def test_fractional_log_multiples_stay_symbolic():
    u = add(x, y)
    e = make_exp(scale(make_log(u), F(3, 2)))
    # one whole power is extracted and distributed, the half stays under exp
    assert render(e) == "x*exp(1/2*log(x + y)) + y*exp(1/2*log(x + y))"
    # squaring recovers u^3 exactly
    assert is_zero(sub(mul(e, e), mul(u, u, u)))


def test_log_of_one_is_zero():
    assert make_log(ONE) == ZERO


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

def test_polynomial_derivative():
    e = add(epow(x, 3), mul(rat(-2), x, y))
    assert equal(diff(e, "x"), add(mul(rat(3), epow(x, 2)), mul(rat(-2), y)))


def test_product_rule():
    M = FunctionSymbol("M", ("x", "t"))
    U = FunctionSymbol("U", ("x", "t"))
    e = mul(sym_ref(M), sym_ref(U))
    want = add(mul(jet(M, {"x": 1}), sym_ref(U)), mul(sym_ref(M), jet(U, {"x": 1})))
    assert equal(diff(e, "x"), want)


def test_chain_rule_through_negative_powers():
    M = FunctionSymbol("M", ("x",))
    e = epow(sym_ref(M), -1)
    want = neg(mul(jet(M, {"x": 1}), epow(sym_ref(M), -2)))
    assert equal(diff(e, "x"), want)


def test_exp_log_derivatives():
    M = FunctionSymbol("M", ("x",))
    m = sym_ref(M)
    e = make_exp(scale(make_log(m), F(1, 2)))
    got = diff(e, "x")
    want = mul(rat(1, 2), jet(M, {"x": 1}), epow(m, -1), e)
    assert is_zero(sub(got, want))


def test_one_directional_rules_fire_only_in_their_direction():
    lam = FunctionSymbol("lam", ("y", "t"))
    lam.set_rule("y", mul(sym_ref(lam), jet(lam, {"t": 1})))
    ly = diff(sym_ref(lam), "y")
    assert equal(ly, mul(sym_ref(lam), jet(lam, {"t": 1})))
    # the t-direction has no rule: a plain jet appears
    assert equal(diff(sym_ref(lam), "t"), jet(lam, {"t": 1}))


def test_mixed_partials_commute():
    M = FunctionSymbol("M", ("x", "y"))
    e = mul(epow(sym_ref(M), 2), x, y)
    assert is_zero(sub(diff(diff(e, "x"), "y"), diff(diff(e, "y"), "x")))


def test_diff_multi_matches_iterated_diff():
    M = FunctionSymbol("M", ("x", "t"))
    e = mul(sym_ref(M), epow(x, 2))
    assert is_zero(sub(diff_multi(e, {"x": 2, "t": 1}),
                       diff(diff(diff(e, "x"), "x"), "t")))


# ---------------------------------------------------------------------------
# substitution and structure queries
# ---------------------------------------------------------------------------

def test_substitute_atoms_and_fields():
    M = FunctionSymbol("M", ("x", "t"))
    mx_atom = next(iter(jet_atoms(jet(M, {"x": 1}))))
    e = add(jet(M, {"x": 1}), epow(sym_ref(M), 2))
    out = substitute(e, atoms={mx_atom: mul(rat(2), x)})
    assert equal(out, add(mul(rat(2), x), epow(sym_ref(M), 2)))
    # replacing the whole symbol pushes through to the jets
    out = substitute(e, fields={M: epow(x, 2)})
    assert equal(out, add(mul(rat(2), x), epow(x, 4)))


def test_substitute_rename_direction():
    M = FunctionSymbol("M", ("x", "y"))
    e = jet(M, {"x": 1, "y": 2})
    out = substitute(e, rename={"y": "x"})
    assert equal(out, jet(M, {"x": 3}))


def test_atoms_and_jet_atoms():
    M = FunctionSymbol("M", ("x", "t"))
    U = FunctionSymbol("U", ("x", "t"))
    e = add(jet(M, {"x": 2}), mul(sym_ref(U), a))
    assert len(jet_atoms(e)) == 2
    assert len(jet_atoms(e, M)) == 1
    assert len(atoms_of(e)) == 3


def test_grade_by_base_splits_homogeneous_parts():
    lam = FunctionSymbol("lam", ("y",))
    l0 = sym_ref(lam)
    e = add(mul(a, l0), mul(b, epow(l0, 2)), rat(1))
    lam_atom = next(iter(jet_atoms(l0)))
    grades = grade_by_base(e, lam_atom)
    assert set(grades) == {F(0), F(1), F(2)}
    # each grade holds the coefficient with the base factor removed
    assert equal(grades[F(1)], a)
    assert equal(grades[F(2)], b)
    # regrouping the grades recovers the expression
    back = add(*(mul(coeff, epow(l0, k)) for k, coeff in grades.items()))
    assert is_zero(sub(back, e))


def test_collect_linear_extracts_coefficients():
    M = FunctionSymbol("M", ("x",))
    mx = jet(M, {"x": 1})
    key = next(iter(jet_atoms(mx)))
    e = add(mul(a, mx), mul(b, x))
    coeffs = collect_linear(e, [key])
    assert equal(coeffs[key], a)
    assert equal(coeffs[None], mul(b, x))


def test_as_fraction_reconstructs():
    M = FunctionSymbol("M", ("x",))
    m = sym_ref(M)
    e = add(mul(rat(3, 2), epow(m, -2)), mul(x, epow(add(m, x), -1)))
    num, den = as_fraction(e, clear_atoms=True)
    back = num
    for base, ex in den:
        back = mul(back, epow(_wrap(base), ex))
    assert is_zero(sub(back, e))


def _wrap(base):
    from chlax.expr import Expr, atom_expr, _Atom  # noqa: PLC0415

    if isinstance(base, Expr):
        return base
    return atom_expr(base)


# ---------------------------------------------------------------------------
# parser round-trip
# ---------------------------------------------------------------------------

def _table():
    tb = SymbolTable()
    tb.add_vars("x", "y", "t")
    tb.add_params("a", "b")
    M = FunctionSymbol("M", ("x", "y", "t"))
    U = FunctionSymbol("U", ("x", "y", "t"))
    tb.add_symbol(M)
    tb.add_symbol(U)
    return tb, M, U


@pytest.mark.parametrize("text", [
    "0",
    "1",
    "-5/6",
    "x + 2*y",
    "M_xxt - 2*M*U_x - M_x*U",
    "a*M^2 - b*x^(-3)",
    "exp(1/2*log(M + x))",
    "(M + x)^(-1)*M_x",
    "3/4*M_xt^2*exp(-x)",
])
def test_parse_render_round_trip(text):
    tb, _M, _U = _table()
    e = parse(text, tb)
    assert equal(parse(render(e), tb), e)


def test_render_parse_fixed_point():
    tb, M, U = _table()
    e = sub(jet(M, {"t": 1}), add(mul(rat(2), sym_ref(M), jet(U, {"x": 1})),
                                  mul(jet(M, {"x": 1}), sym_ref(U))))
    assert render(parse(render(e), tb)) == render(e)


# ---------------------------------------------------------------------------
# hypothesis properties
# ---------------------------------------------------------------------------

_coeff = st.fractions(min_value=-4, max_value=4, max_denominator=6)
_atom = st.sampled_from([x, y, a, b])


@st.composite
def _poly(draw, max_terms=4):
    n = draw(st.integers(1, max_terms))
    parts = []
    for _ in range(n):
        c = draw(_coeff)
        base = draw(_atom)
        k = draw(st.integers(0, 3))
        parts.append(scale(epow(base, k), c))
    return add(*parts)


@settings(max_examples=60, deadline=None)
@given(_poly(), _poly())
def test_addition_commutes(e1, e2):
    assert equal(add(e1, e2), add(e2, e1))


@settings(max_examples=60, deadline=None)
@given(_poly(), _poly(), _poly())
def test_multiplication_distributes(e1, e2, e3):
    assert is_zero(sub(mul(e1, add(e2, e3)), add(mul(e1, e2), mul(e1, e3))))


@settings(max_examples=60, deadline=None)
@given(_poly(), _poly())
def test_derivative_is_linear_and_leibniz(e1, e2):
    assert is_zero(sub(diff(add(e1, e2), "x"), add(diff(e1, "x"), diff(e2, "x"))))
    assert is_zero(sub(diff(mul(e1, e2), "x"),
                       add(mul(diff(e1, "x"), e2), mul(e1, diff(e2, "x")))))


@settings(max_examples=40, deadline=None)
@given(_poly())
def test_render_round_trip_random(e):
    tb = SymbolTable()
    tb.add_vars("x", "y")
    tb.add_params("a", "b")
    assert equal(parse(render(e), tb), e)
