"""Linear-pair tests: the compatibility closure for orders 1..3 matches
the frozen systems exactly, is schedule independent, regenerates through
the recursion operators, and collapses to the expected 1+1 flows.
"""

import time

import pytest

from chlax.equations import Equation, PDESystem
from chlax.expr import (
    diff,
    diff_multi,
    epow,
    equal,
    is_zero,
    jet,
    jet_atoms,
    mul,
    rat,
    sub,
    sym_ref,
)
from chlax.lax import (
    apply_J,
    apply_K,
    build_ch_lax,
    check_recursion_form,
    compatibility,
    eliminate,
    hierarchy_from_pair,
    solve_for_jet,
    specialize_flow,
)
from chlax.numeric import ZeroOracle
from chlax.parser import parse, render

EXPECTED = {
    1: [
        "M_t - 2*M*U1_x - M_x*U1",
        "M_y - U1_x + U1_xxx",
        "lam_y - lam*lam_t",
    ],
    2: [
        "M_t - 2*M*U1_x - M_x*U1",
        "M_y - U2_x + U2_xxx",
        "U1_x - U1_xxx - 2*M*U2_x - M_x*U2",
        "lam_y - lam^2*lam_t",
    ],
    3: [
        "M_t - 2*M*U1_x - M_x*U1",
        "M_y - U3_x + U3_xxx",
        "U1_x - U1_xxx - 2*M*U2_x - M_x*U2",
        "U2_x - U2_xxx - 2*M*U3_x - M_x*U3",
        "lam_y - lam^3*lam_t",
    ],
}


def _expected_system(pair, n):
    return PDESystem([Equation.make(parse(s, pair.table)) for s in EXPECTED[n]])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_compatibility_matches_frozen_system_exactly(n):
    t0 = time.perf_counter()
    pair = build_ch_lax(n)
    got = compatibility(pair)
    want = _expected_system(pair, n)
    # exact symbolic match as normalized sets: every generator pairs off
    matched = set()
    for eq in got:
        hits = [i for i, w in enumerate(want) if i not in matched and equal(eq.lhs, w.lhs)]
        assert hits, f"unexpected generator {render(eq.lhs)}"
        matched.add(hits[0])
    assert len(matched) == len(EXPECTED[n])
    assert time.perf_counter() - t0 < 5.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_compatibility_is_schedule_independent(n):
    pair = build_ch_lax(n)
    first = compatibility(pair, schedule="spatial_first")
    second = compatibility(pair, schedule="temporal_first")
    assert first.same_ideal_generators(second)


def test_unknown_schedule_is_rejected():
    with pytest.raises(ValueError):
        compatibility(build_ch_lax(1), schedule="sideways")


@pytest.mark.parametrize("n", [1, 2, 3])
def test_parameter_flow_is_filtered_from_the_hierarchy(n):
    pair = build_ch_lax(n)
    h = hierarchy_from_pair(pair)
    assert len(h.equations) == len(EXPECTED[n]) - 1
    for eq in h.equations:
        assert not jet_atoms(eq.lhs, pair.param_sym)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_recursion_operators_regenerate_the_hierarchy(n):
    h = hierarchy_from_pair(build_ch_lax(n))
    assert check_recursion_form(h)


def test_recursion_check_rejects_wrong_operator():
    # mutate the hierarchy: flip the third-derivative sign in one equation
    h = hierarchy_from_pair(build_ch_lax(1))
    pair_u = h.U[0]
    wrong = [
        Equation.make(sub(jet(h.M, {h.y: 1}),
                          sub(diff(sym_ref(pair_u), h.x),
                              mul(rat(-1), diff_multi(sym_ref(pair_u), {h.x: 3})))))
        if jet_atoms(eq.lhs, h.M) and jet_atoms(eq.lhs, pair_u) and len(eq.lhs.terms) == 3
        else eq
        for eq in h.equations
    ]
    mutated = type(h)(n=h.n, equations=PDESystem(wrong), M=h.M, U=h.U,
                      x=h.x, y=h.y, t=h.t)
    assert not check_recursion_form(mutated)
    # and the mutated generator really differs at a sample point
    for eq, weq in zip(h.equations, wrong):
        if not equal(eq.lhs, weq.lhs):
            assert ZeroOracle().check_nonzero(sub(eq.lhs, weq.lhs))


def test_operator_forms():
    pair = build_ch_lax(1)
    u = sym_ref(pair.fields[1])
    m = sym_ref(pair.fields[0])
    assert equal(apply_J(u), sub(diff(u, "x"), diff_multi(u, {"x": 3})))
    assert is_zero(sub(apply_K(u, m),
                       sub(diff(mul(m, u), "x"), mul(rat(-1), m, diff(u, "x")))))


def test_flow_specializations():
    h = hierarchy_from_pair(build_ch_lax(1))
    pos = specialize_flow(h, "y->x")
    neg = specialize_flow(h, "y->t")
    assert sorted(render(eq.lhs) for eq in pos) == [
        "M_t - 2*M*U1_x - M_x*U1",
        "M_x - U1_x + U1_xxx",
    ]
    assert sorted(render(eq.lhs) for eq in neg) == [
        "M_t - 2*M*U1_x - M_x*U1",
        "M_t - U1_x + U1_xxx",
    ]
    with pytest.raises(ValueError):
        specialize_flow(h, "x->y")


def test_solve_for_jet_inverts_linear_coefficient():
    pair = build_ch_lax(1)
    M, U1 = pair.fields[0], pair.fields[1]
    lhs = parse("M_t - 2*M*U1_x - M_x*U1", pair.table)
    atom, rhs = solve_for_jet(lhs, M, {"t": 1})
    assert atom == next(iter(jet_atoms(jet(M, {"t": 1}))))
    assert not is_zero(sub(jet(M, {"t": 1}), rhs))
    # substituting the solution annihilates the equation
    from chlax.expr import substitute
    assert is_zero(substitute(lhs, atoms={atom: rhs}))


def test_eliminate_reaches_fixed_point():
    pair = build_ch_lax(1)
    M, U1 = pair.fields[0], pair.fields[1]
    lhs = parse("M_t - 2*M*U1_x - M_x*U1", pair.table)
    _atom, rhs = solve_for_jet(lhs, M, {"t": 1})
    rules = [(M, (("t", 1),), rhs)]
    # M_tx reduces through the rule's x-derivative
    out = eliminate(jet(M, {"t": 1, "x": 1}), rules)
    assert not jet_atoms(out, M) & jet_atoms(jet(M, {"t": 1, "x": 1}))
    assert is_zero(sub(out, diff(rhs, "x")))
