"""Symmetry tests: the three transversal families verify (the spatial
one only together with its stationarity constraints), classical
translations form a linear space, and mutated candidates are rejected
with residuals the oracle can exhibit as nonzero.
"""

import dataclasses
import time

import pytest

from chlax.expr import ONE, ZERO, atoms_of, JetVar, scale, sub
from chlax.lax import build_ch_lax, rule_constraints
from chlax.numeric import ZeroOracle
from chlax.symmetry import (
    MODE_CLASSICAL,
    candidate_scale,
    candidate_sum,
    t_mode_family,
    verify_symmetry,
    x_mode_family,
    y_mode_family,
    zero_candidate,
)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("family", [t_mode_family, y_mode_family])
def test_transversal_families_verify(family, n):
    t0 = time.perf_counter()
    rep = verify_symmetry(family(n))
    assert rep.passed, rep.render()
    assert rep.certificates
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("family", [t_mode_family, y_mode_family])
def test_amplitude_functions_stay_opaque(family, n):
    # the flow amplitudes are arbitrary differentiable functions: no
    # derivative rules and no algebraic relations are attached to them
    cand = family(n)
    exprs = (cand.xi1, cand.xi2, cand.xi3, cand.phi1, cand.theta0, *cand.thetas)
    syms = {
        a.sym.name: a.sym
        for e in exprs
        for a in atoms_of(e)
        if isinstance(a, JetVar)
    }
    for name in ("A1", "B1", "C1"):
        assert name in syms
        assert not syms[name].rules
        assert syms[name].square is None


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("sign", [1, -1])
def test_spatial_family_needs_stationarity(sign, n):
    t0 = time.perf_counter()
    free = verify_symmetry(x_mode_family(n, sign=sign, constrained=False))
    assert not free.passed
    assert len(free.residuals) >= 1
    pinned_cand = x_mode_family(n, sign=sign, constrained=True)
    pinned = verify_symmetry(pinned_cand)
    assert pinned.passed, pinned.render()
    # the constrained candidate declares the stationarity rules it used
    keys = {tuple(k) for _s, k, _r in pinned_cand.side_constraints}
    assert (("t", 1),) in keys and (("y", 1),) in keys
    assert time.perf_counter() - t0 < 30.0


def test_spatial_obstruction_is_numerically_nonzero():
    cand = x_mode_family(1, sign=1, constrained=False)
    rep = verify_symmetry(cand)
    assert not rep.passed
    oracle = ZeroOracle()
    hits = [
        eq for eq in rep.residuals
        if oracle.check_nonzero(eq.lhs, cand.oracle_constraints)
    ]
    assert hits, "every surviving residual evaluated to zero numerically"


def test_classical_translations_form_a_linear_space():
    pair = build_ch_lax(1)
    z = zero_candidate(pair)
    cx = dataclasses.replace(z, xi1=ONE, label="x-translation")
    ct = dataclasses.replace(z, xi3=ONE, label="t-translation")
    assert verify_symmetry(z).passed
    assert verify_symmetry(cx).passed
    assert verify_symmetry(ct).passed
    assert verify_symmetry(candidate_sum(cx, ct)).passed
    assert verify_symmetry(candidate_scale(cx, -7)).passed


def test_candidate_algebra_is_restricted_to_classical_mode():
    pair = build_ch_lax(1)
    with pytest.raises(ValueError):
        candidate_sum(t_mode_family(1), t_mode_family(1))
    with pytest.raises(ValueError):
        candidate_scale(t_mode_family(1), 2)
    z = zero_candidate(pair)
    with pytest.raises(ValueError):
        dataclasses.replace(z, mode="sideways")


def test_eigenfunction_shift_is_not_a_symmetry():
    pair = build_ch_lax(1)
    bad = dataclasses.replace(zero_candidate(pair), phi1=ONE, label="shift")
    rep = verify_symmetry(bad)
    assert not rep.passed
    oracle = ZeroOracle()
    assert any(oracle.check_nonzero(eq.lhs) for eq in rep.residuals)


@pytest.mark.parametrize("family", [t_mode_family, y_mode_family])
def test_mutated_density_coefficient_is_rejected(family):
    cand = family(1)
    mutated = dataclasses.replace(
        cand, theta0=scale(cand.theta0, 2), label=cand.label + " (mutated)"
    )
    rep = verify_symmetry(mutated)
    assert not rep.passed
    oracle = ZeroOracle()
    assert any(
        oracle.check_nonzero(eq.lhs, mutated.oracle_constraints)
        for eq in rep.residuals
    )


def test_certificates_replay_through_the_oracle():
    oracle = ZeroOracle(samples=100)
    for n in (1, 2):
        for family in (t_mode_family, y_mode_family):
            rep = verify_symmetry(family(n))
            assert rep.passed
            for cert in rep.certificates:
                oracle.check_cert(cert)


def test_spatial_certificates_replay_for_both_branches():
    oracle = ZeroOracle(samples=100)
    for sign in (1, -1):
        rep = verify_symmetry(x_mode_family(1, sign=sign, constrained=True))
        assert rep.passed
        for cert in rep.certificates:
            oracle.check_cert(cert)
