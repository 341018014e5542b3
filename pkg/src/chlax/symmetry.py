"""Lie-point and conditional symmetry verification for the linear pair.

A ``SymmetryCandidate`` packages the infinitesimals of a vector field

    X = xi1 d/dx + xi2 d/dy + xi3 d/dt
        + phi1 d/dpsi + phi2 d/dlam + Theta0 d/dM + sum_j Thetaj d/dU[j]

together with a transversality mode.  ``verify_symmetry`` prolongs the
field, applies it to the target system (spatial, temporal, parameter
evolution), and reduces the result modulo the target equations, the
invariant-surface conditions of the mode, and any declared side
constraints, iterated to a fixed point.  The candidate generates a
symmetry exactly when every reduced residual vanishes identically.

Modes
-----
``classical``
    no invariant-surface conditions; reduction uses the target system only.
``nonclassical-t``
    xi3 normalized to 1; the surface conditions eliminate t-derivatives.
``nonclassical-y``
    xi3 = 0, xi2 = 1; the surface conditions eliminate y-derivatives.
``nonclassical-x``
    xi3 = xi2 = 0, xi1 = 1; the surface conditions eliminate x-derivatives.

The three built-in families are ``t_mode_family`` (linear coefficient
functions S1(x,t), S2(y), S3(t) with arbitrary A1, B1, C1), ``y_mode_family``
(S1, S2 as above), and ``x_mode_family`` (the square-relation family in
rho = sqrt(2*lam*M), which verifies only under the side constraints
M_t = M_y = 0).
"""

from __future__ import annotations

from dataclasses import dataclass

from .equations import Equation, PDESystem
from .expr import (
    Expr,
    FunctionSymbol,
    JetVar,
    ONE,
    Q,
    ZERO,
    add,
    collect_linear,
    diff,
    diff_multi,
    epow,
    equal,
    explicit_partial,
    is_zero,
    jet,
    jet_atoms,
    make_exp,
    mul,
    neg,
    par,
    partial_atom,
    rat,
    scale,
    sub,
    sym_ref,
    var,
)
from .lax import LaxPair, build_ch_lax, eliminate, rule_constraints, solve_for_jet
from .numeric import GaussQ, ZeroCert
from .parser import render

__all__ = [
    "MODE_CLASSICAL",
    "MODE_T",
    "MODE_Y",
    "MODE_X",
    "SymmetryCandidate",
    "SymmetryReport",
    "Prolongation",
    "prolong",
    "apply_vector_field",
    "target_exprs",
    "target_system",
    "invariant_surface_conditions",
    "manifold_rules",
    "determining_residuals",
    "verify_symmetry",
    "zero_candidate",
    "candidate_sum",
    "candidate_scale",
    "t_mode_family",
    "y_mode_family",
    "x_mode_family",
]

MODE_CLASSICAL = "classical"
MODE_T = "nonclassical-t"
MODE_Y = "nonclassical-y"
MODE_X = "nonclassical-x"
_MODES = (MODE_CLASSICAL, MODE_T, MODE_Y, MODE_X)


@dataclass
class SymmetryCandidate:
    """Infinitesimals of a vector field acting on the pair's fields.

    ``thetas`` lists the coefficients for U[1]..U[n] in order.  Side
    constraints are solved jet rules (symbol, multi-index key, rhs) that
    are appended to the reduction with lowest priority.  Oracle
    constraints are (atom, definition) pairs forwarded to the numeric
    sampler so relation symbols evaluate consistently.
    """

    pair: LaxPair
    mode: str
    xi1: Expr
    xi2: Expr
    xi3: Expr
    phi1: Expr
    phi2: Expr
    theta0: Expr
    thetas: tuple
    side_constraints: tuple = ()
    assumptions: tuple = ()
    oracle_constraints: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown symmetry mode {self.mode!r}")
        if len(self.thetas) != self.pair.n:
            raise ValueError("one Theta coefficient is required per hierarchy field")
        if self.mode == MODE_T and not equal(self.xi3, ONE):
            raise ValueError("the t-transversal mode normalizes xi3 to 1")
        if self.mode == MODE_Y and not (equal(self.xi3, ZERO) and equal(self.xi2, ONE)):
            raise ValueError("the y-transversal mode requires xi3 = 0 and xi2 = 1")
        if self.mode == MODE_X and not (
            equal(self.xi3, ZERO) and equal(self.xi2, ZERO) and equal(self.xi1, ONE)
        ):
            raise ValueError("the x-transversal mode requires xi3 = xi2 = 0 and xi1 = 1")

    def variable_images(self) -> dict:
        """Infinitesimals keyed by independent-variable name."""
        p = self.pair
        out = {p.spatial_var: self.xi1, p.secondary_var: self.xi2}
        if p.flow_var is not None:
            out[p.flow_var] = self.xi3
        return out

    def field_images(self) -> dict:
        """Infinitesimals keyed by transformed field symbol."""
        p = self.pair
        out = {p.psi: self.phi1}
        if p.param_sym is not None:
            out[p.param_sym] = self.phi2
        out[p.fields[0]] = self.theta0
        for sym, th in zip(p.fields[1:], self.thetas):
            out[sym] = th
        return out


def _canon_midx(sym: FunctionSymbol, counts: dict) -> tuple:
    return tuple((d, counts[d]) for d in sym.deps if counts.get(d))


def _midx_counts(midx: tuple) -> dict:
    return {d: k for d, k in midx}


def _bump(sym: FunctionSymbol, midx: tuple, direction: str) -> tuple:
    counts = _midx_counts(midx)
    counts[direction] = counts.get(direction, 0) + 1
    return _canon_midx(sym, counts)


class Prolongation:
    """Prolonged coefficient table phi^J for one candidate.

    ``coeff`` follows the recursion phi^{J,i} = D_i(phi^J) - sum_k
    D_i(xi_k) u_{J,k}; ``coeff_direct`` expands the equivalent
    characteristic form D_J(phi - sum_k xi_k u_k) + sum_k xi_k u_{J,k}.
    Both skip directions a field does not depend on.
    """

    def __init__(self, cand: SymmetryCandidate):
        self.cand = cand
        self.xi = cand.variable_images()
        self.base = cand.field_images()
        self._memo: dict = {}

    def coeff(self, a: JetVar) -> Expr:
        if not a.midx:
            return self.base[a.sym]
        got = self._memo.get(a)
        if got is not None:
            return got
        d, k = a.midx[-1]
        lower = a.midx[:-1] + (((d, k - 1),) if k > 1 else ())
        out = diff(self.coeff(JetVar(a.sym, lower)), d)
        for v, xe in self.xi.items():
            if v in a.sym.deps and xe.terms:
                out = sub(out, mul(diff(xe, d), jet(a.sym, _midx_counts(_bump(a.sym, lower, v)))))
        self._memo[a] = out
        return out

    def coeff_direct(self, a: JetVar) -> Expr:
        char = self.base[a.sym]
        for v, xe in self.xi.items():
            if v in a.sym.deps and xe.terms:
                char = sub(char, mul(xe, jet(a.sym, {v: 1})))
        out = diff_multi(char, _midx_counts(a.midx))
        for v, xe in self.xi.items():
            if v in a.sym.deps and xe.terms:
                out = add(out, mul(xe, jet(a.sym, _midx_counts(_bump(a.sym, a.midx, v)))))
        return out


def _multi_indices(sym: FunctionSymbol, order: int):
    def rec(i: int, budget: int, acc: dict):
        if i == len(sym.deps):
            yield _canon_midx(sym, acc)
            return
        d = sym.deps[i]
        for k in range(budget + 1):
            if k:
                acc[d] = k
            yield from rec(i + 1, budget - k, acc)
            acc.pop(d, None)

    yield from rec(0, order, {})


def prolong(cand: SymmetryCandidate, order: int) -> dict:
    """Every prolonged coefficient up to the given jet order."""
    pro = Prolongation(cand)
    return {
        JetVar(sym, midx): pro.coeff(JetVar(sym, midx))
        for sym in pro.base
        for midx in _multi_indices(sym, order)
    }


def apply_vector_field(cand: SymmetryCandidate, e: Expr) -> Expr:
    """Action of the prolonged field on an expression."""
    pro = Prolongation(cand)
    out = ZERO
    for v, xe in pro.xi.items():
        if xe.terms:
            p = explicit_partial(e, v)
            if p.terms:
                out = add(out, mul(xe, p))
    for a in sorted(jet_atoms(e), key=lambda j: j.sort_key()):
        if a.sym in pro.base:
            out = add(out, mul(pro.coeff(a), partial_atom(e, a)))
    return out


def _advection(pair: LaxPair) -> Expr:
    lam0 = sym_ref(pair.param_sym)
    return add(
        *[
            mul(epow(lam0, pair.n - j + 1), sym_ref(u))
            for j, u in enumerate(pair.fields[1:], start=1)
        ]
    )


def target_exprs(pair: LaxPair) -> tuple:
    """Raw left-hand sides of the symmetry target system."""
    if pair.param_sym is None:
        raise ValueError("symmetry targets need a jet-valued spectral parameter")
    lam = pair.param_sym
    niso = sub(
        jet(lam, {pair.secondary_var: 1}),
        mul(epow(sym_ref(lam), pair.n), jet(lam, {pair.flow_var: 1})),
    )
    return pair.spatial_expr, pair.temporal_expr, niso


_TARGET_LABELS = ("spatial", "temporal", "parameter evolution")


def target_system(pair: LaxPair) -> PDESystem:
    return PDESystem(
        [
            Equation.make(e, provenance=p, generic=pair.generic)
            for p, e in zip(_TARGET_LABELS, target_exprs(pair))
        ]
    )


def invariant_surface_conditions(cand: SymmetryCandidate) -> tuple:
    """The transversal derivative of each field solved from its surface
    condition: (symbol, key multi-index, rhs) triples."""
    if cand.mode == MODE_CLASSICAL:
        raise ValueError("the classical mode carries no invariant-surface conditions")
    pair = cand.pair
    trans = {
        MODE_T: pair.flow_var,
        MODE_Y: pair.secondary_var,
        MODE_X: pair.spatial_var,
    }[cand.mode]
    lower = {
        MODE_T: ((pair.spatial_var, cand.xi1), (pair.secondary_var, cand.xi2)),
        MODE_Y: ((pair.spatial_var, cand.xi1),),
        MODE_X: (),
    }[cand.mode]
    base = cand.field_images()
    out = []
    for sym in _ordered_fields(pair):
        if trans not in sym.deps:
            continue
        rhs = base[sym]
        for v, xe in lower:
            if v in sym.deps and xe.terms:
                rhs = sub(rhs, mul(xe, jet(sym, {v: 1})))
        out.append((sym, ((trans, 1),), rhs))
    return tuple(out)


def _ordered_fields(pair: LaxPair):
    syms = [pair.psi]
    if pair.param_sym is not None:
        syms.append(pair.param_sym)
    syms.extend(pair.fields)
    return syms


def manifold_rules(cand: SymmetryCandidate) -> tuple:
    """Solved jet rules for the joint manifold of the target system, the
    mode's invariant-surface conditions, and the side constraints.

    The transversal derivatives of psi and lam are solved jointly with
    the temporal and parameter-evolution equations, so every right-hand
    side is free of the jets being eliminated and the rewrite terminates.
    """
    pair = cand.pair
    x, y, t = pair.spatial_var, pair.secondary_var, pair.flow_var
    psi, lam = pair.psi, pair.param_sym
    psi0, psi_x = sym_ref(psi), jet(psi, {x: 1})
    lamn = epow(sym_ref(lam), pair.n)
    ahat = _advection(pair)
    ahat_x = diff(ahat, x)
    _satom, s_rhs = solve_for_jet(pair.spatial_expr, psi, {x: 2})
    base = cand.field_images()
    bulk = [pair.fields[0], *pair.fields[1:]]

    rules: list = []
    if cand.mode == MODE_CLASSICAL:
        _tatom, t_rhs = solve_for_jet(pair.temporal_expr, psi, {y: 1})
        rules = [
            (psi, ((x, 2),), s_rhs),
            (psi, ((y, 1),), t_rhs),
            (lam, ((y, 1),), mul(lamn, jet(lam, {t: 1}))),
        ]
    elif cand.mode == MODE_T:
        dinv = epow(add(ONE, mul(lamn, cand.xi2)), -1)
        r_psi_y = mul(
            add(
                mul(lamn, cand.phi1),
                neg(mul(add(mul(lamn, cand.xi1), ahat), psi_x)),
                scale(mul(ahat_x, psi0), Q(1, 2)),
            ),
            dinv,
        )
        r_psi_t = sub(cand.phi1, add(mul(cand.xi1, psi_x), mul(cand.xi2, r_psi_y)))
        r_lam_y = mul(lamn, cand.phi2, dinv)
        r_lam_t = sub(cand.phi2, mul(cand.xi2, r_lam_y))
        rules = [
            (psi, ((x, 2),), s_rhs),
            (psi, ((y, 1),), r_psi_y),
            (psi, ((t, 1),), r_psi_t),
            (lam, ((y, 1),), r_lam_y),
            (lam, ((t, 1),), r_lam_t),
        ]
        for sym in bulk:
            rhs = sub(
                base[sym],
                add(mul(cand.xi1, jet(sym, {x: 1})), mul(cand.xi2, jet(sym, {y: 1}))),
            )
            rules.append((sym, ((t, 1),), rhs))
    elif cand.mode == MODE_Y:
        r_psi_y = sub(cand.phi1, mul(cand.xi1, psi_x))
        r_psi_t = mul(
            epow(sym_ref(lam), -pair.n),
            add(r_psi_y, mul(ahat, psi_x), neg(scale(mul(ahat_x, psi0), Q(1, 2)))),
        )
        rules = [
            (psi, ((x, 2),), s_rhs),
            (psi, ((y, 1),), r_psi_y),
            (psi, ((t, 1),), r_psi_t),
            (lam, ((y, 1),), cand.phi2),
            (lam, ((t, 1),), mul(epow(sym_ref(lam), -pair.n), cand.phi2)),
        ]
        for sym in bulk:
            rules.append((sym, ((y, 1),), sub(base[sym], mul(cand.xi1, jet(sym, {x: 1})))))
    elif cand.mode == MODE_X:
        r_psi_y = add(
            mul(lamn, jet(psi, {t: 1})),
            neg(mul(ahat, psi_x)),
            scale(mul(ahat_x, psi0), Q(1, 2)),
        )
        rules = [
            (psi, ((y, 1),), r_psi_y),
            (lam, ((y, 1),), mul(lamn, jet(lam, {t: 1}))),
            (psi, ((x, 1),), cand.phi1),
        ]
        for sym in bulk:
            rules.append((sym, ((x, 1),), base[sym]))
    rules.extend(cand.side_constraints)
    return tuple(rules)


def _residual_data(cand: SymmetryCandidate):
    rules = manifold_rules(cand)
    data = []
    for label, F in zip(_TARGET_LABELS, target_exprs(cand.pair)):
        raw = apply_vector_field(cand, F)
        data.append((label, raw, eliminate(raw, rules, max_iter=800)))
    return rules, data


def _split_residual(pair: LaxPair, red: Expr) -> dict:
    keys = sorted(jet_atoms(red, pair.psi), key=lambda j: j.sort_key())
    if not keys:
        return {None: red}
    try:
        return collect_linear(red, keys)
    except ValueError:
        return {None: red}


def _residual_system(cand: SymmetryCandidate, data) -> PDESystem:
    eqs = []
    for label, _raw, red in data:
        if is_zero(red):
            continue
        parts = _split_residual(cand.pair, red)
        for a in sorted(
            parts, key=lambda k: (k is None, k.sort_key() if k is not None else ())
        ):
            coeff = parts[a]
            if not coeff.terms or is_zero(coeff):
                continue
            tag = f"prolonged {label} condition"
            if a is not None:
                tag += f", coefficient of {a!r}"
            eqs.append(Equation.make(coeff, provenance=tag, generic=cand.pair.generic))
    return PDESystem(eqs)


def determining_residuals(cand: SymmetryCandidate) -> PDESystem:
    """Residual equations of the symmetry condition; empty iff the
    candidate generates a symmetry of the target system."""
    _rules, data = _residual_data(cand)
    return _residual_system(cand, data)


@dataclass
class SymmetryReport:
    label: str
    mode: str
    n: int
    passed: bool
    residuals: PDESystem
    assumptions: tuple
    certificates: tuple

    def render(self) -> str:
        head = f"{self.label}: {'pass' if self.passed else 'FAIL'}"
        lines = [head]
        for a in self.assumptions:
            lines.append(f"  assuming {a}")
        if not self.passed:
            for eq in self.residuals:
                lines.append(f"  residual [{eq.provenance}] {eq.render()}")
        return "\n".join(lines)


def _constraint_text(sym: FunctionSymbol, key: tuple, rhs: Expr) -> str:
    suffix = "".join(d * k for d, k in key)
    return f"{sym.name}_{suffix} = {render(rhs)}"


def verify_symmetry(cand: SymmetryCandidate) -> SymmetryReport:
    """Full verification of one candidate, with numeric certificates
    for the zeros established on a pass."""
    rules, data = _residual_data(cand)
    residuals = _residual_system(cand, data)
    passed = all(is_zero(red) for _label, _raw, red in data)
    assumptions = tuple(cand.assumptions) + tuple(
        f"side constraint {_constraint_text(*sc)}" for sc in cand.side_constraints
    )
    certificates = ()
    if passed:
        certificates = tuple(
            ZeroCert(
                expr=raw,
                constraints=tuple(cand.oracle_constraints) + rule_constraints([raw], rules),
                label=f"{cand.label}: prolonged action on the {label} equation",
            )
            for label, raw, _red in data
        )
    return SymmetryReport(
        label=cand.label,
        mode=cand.mode,
        n=cand.pair.n,
        passed=passed,
        residuals=residuals,
        assumptions=assumptions,
        certificates=certificates,
    )


# ---------------------------------------------------------------------------
# candidate algebra (used by the linearity property of the classical mode)
# ---------------------------------------------------------------------------

def zero_candidate(pair: LaxPair) -> SymmetryCandidate:
    z = ZERO
    return SymmetryCandidate(
        pair=pair,
        mode=MODE_CLASSICAL,
        xi1=z,
        xi2=z,
        xi3=z,
        phi1=z,
        phi2=z,
        theta0=z,
        thetas=(z,) * pair.n,
        label="zero field",
    )


def candidate_sum(a: SymmetryCandidate, b: SymmetryCandidate) -> SymmetryCandidate:
    if a.pair is not b.pair or a.mode != MODE_CLASSICAL or b.mode != MODE_CLASSICAL:
        raise ValueError("candidate sums are defined for classical fields on one pair")
    return SymmetryCandidate(
        pair=a.pair,
        mode=MODE_CLASSICAL,
        xi1=add(a.xi1, b.xi1),
        xi2=add(a.xi2, b.xi2),
        xi3=add(a.xi3, b.xi3),
        phi1=add(a.phi1, b.phi1),
        phi2=add(a.phi2, b.phi2),
        theta0=add(a.theta0, b.theta0),
        thetas=tuple(add(u, v) for u, v in zip(a.thetas, b.thetas)),
        label=f"{a.label} + {b.label}",
    )


def candidate_scale(c: SymmetryCandidate, k) -> SymmetryCandidate:
    if c.mode != MODE_CLASSICAL:
        raise ValueError("candidate scaling is defined for classical fields")
    k = Q(k)
    return SymmetryCandidate(
        pair=c.pair,
        mode=MODE_CLASSICAL,
        xi1=scale(c.xi1, k),
        xi2=scale(c.xi2, k),
        xi3=scale(c.xi3, k),
        phi1=scale(c.phi1, k),
        phi2=scale(c.phi2, k),
        theta0=scale(c.theta0, k),
        thetas=tuple(scale(u, k) for u in c.thetas),
        label=f"{k} * ({c.label})",
    )


# ---------------------------------------------------------------------------
# the three built-in families
# ---------------------------------------------------------------------------

def _linear_coefficient_functions(pair: LaxPair, want_s2: bool, want_s3: bool):
    """S1 explicit in opaque A1, B1, C1; S2, S3 as ruled symbols whose
    declared derivatives are the constants a2, a3."""
    tb = pair.table
    tb.add_params("a0", "a2", "a3")
    t = pair.flow_var
    A1 = tb.function("A1", (t,))
    B1 = tb.function("B1", (t,))
    C1 = tb.function("C1", (t,))
    x = var(pair.spatial_var)
    S1 = add(
        sym_ref(A1),
        mul(sym_ref(B1), make_exp(x)),
        mul(sym_ref(C1), make_exp(neg(x))),
    )
    S2 = S3 = None
    if want_s2:
        S2 = tb.function("S2", (pair.secondary_var,))
        S2.set_rule(pair.secondary_var, par("a2"))
    if want_s3:
        S3 = tb.function("S3", (t,))
        S3.set_rule(t, par("a3"))
    return S1, S2, S3


def t_mode_family(n: int) -> SymmetryCandidate:
    """The t-transversal family: xi = (S1/S3, S2/S3, 1) with linear
    weights in the field coefficients."""
    pair = build_ch_lax(n)
    S1, S2, S3 = _linear_coefficient_functions(pair, want_s2=True, want_s3=True)
    x, t = pair.spatial_var, pair.flow_var
    s1x, s1t = diff(S1, x), diff(S1, t)
    s3i = epow(sym_ref(S3), -1)
    a0, a2, a3 = par("a0"), par("a2"), par("a3")
    psi0 = sym_ref(pair.psi)
    lam0 = sym_ref(pair.param_sym)
    m0 = sym_ref(pair.fields[0])
    us = pair.fields[1:]

    thetas = [mul(s3i, sub(mul(sym_ref(us[0]), sub(s1x, a3)), s1t))]
    for j in range(2, n + 1):
        w = add(s1x, scale(a2, Q(-(j - 1), n)), scale(a3, Q(-(n - j + 1), n)))
        thetas.append(mul(s3i, w, sym_ref(us[j - 1])))

    return SymmetryCandidate(
        pair=pair,
        mode=MODE_T,
        xi1=mul(S1, s3i),
        xi2=mul(sym_ref(S2), s3i),
        xi3=ONE,
        phi1=mul(s3i, add(scale(s1x, Q(1, 2)), a0), psi0),
        phi2=mul(s3i, scale(sub(a3, a2), Q(1, n)), lam0),
        theta0=mul(s3i, add(scale(s1x, Q(-2)), scale(sub(a2, a3), Q(1, n))), m0),
        thetas=tuple(thetas),
        assumptions=(
            "S3 is nonvanishing on the domain (its two defining constants are not both zero)",
            "S2_y = a2 and S3_t = a3 define the linear coefficient functions",
            "A1, B1, C1 are arbitrary differentiable functions of t",
            "1 + lam^n S2/S3 is generically nonzero",
        ),
        label=f"t-transversal family (n={n})",
    )


def y_mode_family(n: int) -> SymmetryCandidate:
    """The y-transversal family: xi = (S1/S2, 1, 0)."""
    pair = build_ch_lax(n)
    S1, S2, _ = _linear_coefficient_functions(pair, want_s2=True, want_s3=False)
    x, t = pair.spatial_var, pair.flow_var
    s1x, s1t = diff(S1, x), diff(S1, t)
    s2i = epow(sym_ref(S2), -1)
    a0, a2 = par("a0"), par("a2")
    psi0 = sym_ref(pair.psi)
    lam0 = sym_ref(pair.param_sym)
    m0 = sym_ref(pair.fields[0])
    us = pair.fields[1:]

    thetas = [mul(s2i, sub(mul(sym_ref(us[0]), s1x), s1t))]
    for j in range(2, n + 1):
        thetas.append(mul(s2i, add(s1x, scale(a2, Q(-(j - 1), n))), sym_ref(us[j - 1])))

    return SymmetryCandidate(
        pair=pair,
        mode=MODE_Y,
        xi1=mul(S1, s2i),
        xi2=ONE,
        xi3=ZERO,
        phi1=mul(s2i, add(scale(s1x, Q(1, 2)), a0), psi0),
        phi2=mul(s2i, scale(a2, Q(-1, n)), lam0),
        theta0=mul(s2i, add(scale(s1x, Q(-2)), scale(a2, Q(1, n))), m0),
        thetas=tuple(thetas),
        assumptions=(
            "S2 is nonvanishing on the domain (its two defining constants are not both zero)",
            "S2_y = a2 defines the linear coefficient function",
            "A1, B1, C1 are arbitrary differentiable functions of t",
        ),
        label=f"y-transversal family (n={n})",
    )


def x_mode_family(n: int, sign: int = 1, constrained: bool = True) -> SymmetryCandidate:
    """The x-transversal family built on rho = sqrt(2 lam M).

    The candidate verifies only together with the side constraints
    M_t = M_y = 0; pass ``constrained=False`` to reproduce the failure.
    """
    if sign not in (1, -1):
        raise ValueError("sign selects one of the two square-root branches")
    pair = build_ch_lax(n)
    tb = pair.table
    x, y, t = pair.spatial_var, pair.secondary_var, pair.flow_var
    lam, M = pair.param_sym, pair.fields[0]
    lam0, m0 = sym_ref(lam), sym_ref(M)

    rho = tb.function("rho", (x, y, t))
    rho.set_square(mul(rat(2), lam0, m0))
    rho_i = epow(sym_ref(rho), -1)
    rho.set_rule(x, mul(lam0, jet(M, {x: 1}), rho_i))
    rho.set_rule(
        y, mul(add(mul(jet(lam, {y: 1}), m0), mul(lam0, jet(M, {y: 1}))), rho_i)
    )
    rho.set_rule(
        t, mul(add(mul(jet(lam, {t: 1}), m0), mul(lam0, jet(M, {t: 1}))), rho_i)
    )
    ii = tb.function("ii", ())
    ii.set_square(rat(-1))

    side = ()
    if constrained:
        side = ((M, ((t, 1),), ZERO), (M, ((y, 1),), ZERO))

    lam_atom = JetVar(lam, ())
    m_atom = JetVar(M, ())
    rho_atom = JetVar(rho, ())

    def _solve_square(values):
        return values[rho_atom] ** 2 / (2 * values[lam_atom])

    branch = "+" if sign == 1 else "-"
    return SymmetryCandidate(
        pair=pair,
        mode=MODE_X,
        xi1=ONE,
        xi2=ZERO,
        xi3=ZERO,
        phi1=scale(mul(add(ONE, scale(mul(sym_ref(ii), sym_ref(rho)), Q(sign))), sym_ref(pair.psi)), Q(1, 2)),
        phi2=ZERO,
        theta0=scale(m0, Q(-2)),
        thetas=tuple(sym_ref(u) for u in pair.fields[1:]),
        side_constraints=side,
        assumptions=(
            "rho satisfies the square relation rho^2 = 2 lam M",
            "ii is the imaginary unit (ii^2 = -1)",
        ),
        oracle_constraints=(
            (JetVar(ii, ()), GaussQ(0, 1)),
            (m_atom, _solve_square),
        ),
        label=f"x-transversal family ({branch} branch, n={n})",
    )
