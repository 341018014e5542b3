"""Nonisospectral Camassa-Holm 2+1 Lax pair model and compatibility engine.

``build_ch_lax(n)`` constructs the linear pair

    spatial:   psi_xx - (1/4 - lam/2 M) psi = 0
    temporal:  psi_y - lam^n psi_t + A psi_x - (A_x/2) psi = 0,
               A = sum_{j=1..n} lam^(n-j+1) U[j]

with lam = lam(y, t) so lam_x = 0 holds structurally.  ``compatibility``
equates the cross derivatives (d/dx)^2 of the temporal side with d/dy of
the spatial side, eliminates the reducible psi-jets through the pair
itself, extracts the nonisospectral condition lam_y - lam^n lam_t from
the lam-jet part, and splits the remainder by the surviving psi-jets and
by powers of the spectral parameter (treated as transcendental).  The
same engine, parameterized by the variable pair and the parameter atom,
serves the reduced (z1, z2) pairs, where the parameter ODE is substituted
instead of extracted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .equations import Equation, PDESystem
from .expr import (
    Expr,
    FunctionSymbol,
    JetVar,
    Q,
    add,
    as_fraction,
    atom_expr,
    collect_linear,
    diff,
    diff_multi,
    epow,
    grade_by_base,
    jet,
    jet_atoms,
    mul,
    neg,
    partial_atom,
    rat,
    scale,
    sub,
    substitute,
    sym_ref,
)
from .parser import SymbolTable

__all__ = [
    "LaxPair",
    "Hierarchy",
    "build_ch_lax",
    "compatibility",
    "solve_for_jet",
    "eliminate",
    "rule_constraints",
    "apply_J",
    "apply_K",
    "check_recursion_form",
    "specialize_flow",
]


@dataclass
class LaxPair:
    """A linear pair in two roles: the 2+1 pair and the reduced pairs.

    ``spatial_expr``/``temporal_expr`` are the raw left-hand sides; the
    ``spatial``/``temporal`` Equations are their normal forms.  The
    parameter is either a jet field (``param_sym`` with its own evolution,
    extracted by compatibility) or an atom with an attached solved ODE
    ``param_solved`` mapping the first-derivative jet to a closed form
    (or a plain constant, in which case both are None).
    """

    n: int
    table: SymbolTable
    psi: FunctionSymbol
    spatial_var: str
    secondary_var: str
    flow_var: Optional[str]
    spatial_expr: Expr
    temporal_expr: Expr
    param_base: object  # the atom used for parameter grading
    param_sym: Optional[FunctionSymbol] = None
    param_solved: Optional[tuple] = None  # (JetVar atom, rhs Expr)
    fields: tuple = ()
    generic: frozenset = frozenset()

    @property
    def spatial(self) -> Equation:
        return Equation.make(self.spatial_expr, provenance="spatial", generic=self.generic)

    @property
    def temporal(self) -> Equation:
        return Equation.make(self.temporal_expr, provenance="temporal", generic=self.generic)


def build_ch_lax(n: int) -> LaxPair:
    if n < 1:
        raise ValueError("n must be a positive integer")
    table = SymbolTable().add_vars("x", "y", "t")
    psi = table.function("psi", ("x", "y", "t"))
    lam = table.function("lam", ("y", "t"))
    M = table.function("M", ("x", "y", "t"))
    U = [table.function(f"U{j}", ("x", "y", "t")) for j in range(1, n + 1)]

    lam0 = sym_ref(lam)
    ahat = add(*[mul(epow(lam0, n - j + 1), sym_ref(U[j - 1])) for j in range(1, n + 1)])
    ahat_x = diff(ahat, "x")

    spatial = sub(
        jet(psi, {"x": 2}),
        mul(sub(rat(1, 4), scale(mul(lam0, sym_ref(M)), Q(1, 2))), sym_ref(psi)),
    )
    temporal = add(
        jet(psi, {"y": 1}),
        neg(mul(epow(lam0, n), jet(psi, {"t": 1}))),
        mul(ahat, jet(psi, {"x": 1})),
        neg(scale(mul(ahat_x, sym_ref(psi)), Q(1, 2))),
    )
    lam_atom = JetVar(lam, ())
    m_atom = JetVar(M, ())
    psi_atom = JetVar(psi, ())
    return LaxPair(
        n=n,
        table=table,
        psi=psi,
        spatial_var="x",
        secondary_var="y",
        flow_var="t",
        spatial_expr=spatial,
        temporal_expr=temporal,
        param_base=lam_atom,
        param_sym=lam,
        fields=(M, *U),
        generic=frozenset({lam_atom, m_atom, psi_atom}),
    )


# ---------------------------------------------------------------------------
# elimination machinery
# ---------------------------------------------------------------------------

def _dominates(midx, key) -> bool:
    have = dict(midx)
    return all(have.get(d, 0) >= k for d, k in key)


def _midx_minus(midx, key):
    have = dict(midx)
    for d, k in key:
        have[d] -= k
    return {d: k for d, k in have.items() if k}


def solve_for_jet(lhs: Expr, sym: FunctionSymbol, midx: dict) -> tuple:
    """Solve a jet-linear equation ``lhs == 0`` for one jet.

    Returns (atom, rhs) with ``atom == rhs`` equivalent to the equation.
    The pivot coefficient must be nonzero (it is inverted exactly).
    """
    atom = next(iter(jet_atoms(jet(sym, midx))))
    c = partial_atom(lhs, atom)
    if not c.terms:
        raise ValueError(f"equation does not contain the pivot jet {atom!r}")
    rest = sub(lhs, mul(c, atom_expr(atom)))
    if atom in jet_atoms(rest):
        raise ValueError(f"equation is not linear in the pivot jet {atom!r}")
    return atom, mul(neg(rest), epow(c, -1))


def eliminate(e: Expr, rules: Sequence[tuple], max_iter: int = 300) -> Expr:
    """Rewrite jets that match solved rules until a fixed point.

    ``rules`` is a priority list of (symbol, key multi-index, rhs); a jet
    atom whose multi-index dominates a key is replaced by the derivative
    of the rhs in the leftover directions.  The rule systems used here
    strictly reduce a termination order, so the iteration cap is a guard
    against misconfiguration rather than a tuning knob.
    """
    for _ in range(max_iter):
        target = None
        for a in sorted(jet_atoms(e), key=lambda j: j.sort_key()):
            for sym, key, rhs in rules:
                if a.sym is sym and _dominates(a.midx, key):
                    target = (a, diff_multi(rhs, _midx_minus(a.midx, key)))
                    break
            if target:
                break
        if target is None:
            return e
        e = substitute(e, atoms={target[0]: target[1]})
    raise RuntimeError("jet elimination did not reach a fixed point")


def rule_constraints(exprs: Sequence[Expr], rules: Sequence[tuple]) -> tuple:
    """Numeric constraints that place a sample on a rule system's manifold.

    Every jet atom in ``exprs`` that the solved rules dominate is paired
    with its fully reduced value, so a random draw of the remaining free
    atoms extends to a consistent point of the solution manifold.  The
    reduced values contain no dominated atoms, hence the pairs may be
    solved in any order after the free draw.
    """
    pinned = set()
    for e in exprs:
        for a in jet_atoms(e):
            if any(a.sym is sym and _dominates(a.midx, key) for sym, key, _r in rules):
                pinned.add(a)
    return tuple(
        (a, eliminate(atom_expr(a), rules))
        for a in sorted(pinned, key=lambda j: j.sort_key())
    )


def compatibility(lp: LaxPair, schedule: str = "spatial_first") -> PDESystem:
    """Cross-derivative compatibility of the pair as a PDESystem.

    The returned system contains the parameter-evolution constraint (for
    a jet-valued parameter) followed by the graded field equations.
    """
    v1, v2 = lp.spatial_var, lp.secondary_var
    s_atom, s_rhs = solve_for_jet(lp.spatial_expr, lp.psi, {v1: 2})
    t_atom, t_rhs = solve_for_jet(lp.temporal_expr, lp.psi, {v2: 1})
    spatial_rule = (lp.psi, ((v1, 2),), s_rhs)
    temporal_rule = (lp.psi, ((v2, 1),), t_rhs)
    if schedule == "spatial_first":
        rules = [spatial_rule, temporal_rule]
    elif schedule == "temporal_first":
        rules = [temporal_rule, spatial_rule]
    else:
        raise ValueError(f"unknown schedule {schedule!r}")

    R = sub(
        diff_multi(lp.temporal_expr, {v1: 2}),
        diff(lp.spatial_expr, v2),
    )
    R = eliminate(R, rules)

    out = []
    if lp.param_sym is not None:
        lam = lp.param_sym
        lam_y = next(iter(jet_atoms(jet(lam, {v2: 1}))))
        niso = sub(jet(lam, {v2: 1}), mul(epow(sym_ref(lam), lp.n), jet(lam, {lp.flow_var: 1})))
        c = partial_atom(R, lam_y)
        if not c.terms:
            raise RuntimeError("compatibility lost the parameter-evolution part")
        R = sub(R, mul(c, niso))
        if lam_y in jet_atoms(R):
            raise RuntimeError("residual is nonlinear in the parameter evolution jet")
        out.append(
            Equation.make(mul(c, niso), provenance="parameter evolution", generic=lp.generic)
        )
    elif lp.param_solved is not None:
        atom, rhs = lp.param_solved
        while atom in jet_atoms(R):
            R = substitute(R, atoms={atom: rhs})

    surviving = sorted(jet_atoms(R, lp.psi), key=lambda j: j.sort_key())
    allowed = {
        (): True,
        ((v1, 1),): True,
    }
    if lp.flow_var is not None:
        allowed[((lp.flow_var, 1),)] = True
    for a in surviving:
        if a.midx not in allowed:
            raise RuntimeError(f"unexpected surviving jet {a!r} after elimination")
    lin = collect_linear(R, surviving)
    if None in lin and lin[None].terms:
        raise RuntimeError("compatibility residual has a part free of the wave function")

    for a in surviving:
        coeff = lin.get(a)
        if coeff is None or not coeff.terms:
            continue
        num, _ = as_fraction(coeff, clear_atoms=True)
        graded = grade_by_base(num, lp.param_base)
        for k in sorted(graded):
            eq = Equation.make(
                graded[k],
                provenance=f"coefficient of {a!r} at parameter power {k}",
                generic=lp.generic,
            )
            out.append(eq)
    return PDESystem(out)


# ---------------------------------------------------------------------------
# hierarchy, operators, flow specialization
# ---------------------------------------------------------------------------

@dataclass
class Hierarchy:
    """The field equations produced by compatibility (parameter
    constraint excluded), plus what is needed to rebuild them through the
    operators J and K."""

    n: int
    equations: PDESystem
    M: FunctionSymbol
    U: tuple
    x: str = "x"
    y: str = "y"
    t: str = "t"


def hierarchy_from_pair(lp: LaxPair, system: Optional[PDESystem] = None) -> Hierarchy:
    if system is None:
        system = compatibility(lp)
    eqs = [
        eq
        for eq in system
        if not (lp.param_sym is not None and jet_atoms(eq.lhs, lp.param_sym))
    ]
    return Hierarchy(
        n=lp.n,
        equations=PDESystem(eqs),
        M=lp.fields[0],
        U=tuple(lp.fields[1:]),
        x=lp.spatial_var,
        y=lp.secondary_var,
        t=lp.flow_var,
    )


def apply_J(f: Expr, x: str = "x") -> Expr:
    return sub(diff(f, x), diff_multi(f, {x: 3}))


def apply_K(f: Expr, m: Expr, x: str = "x") -> Expr:
    return add(diff(mul(m, f), x), mul(m, diff(f, x)))


def check_recursion_form(h: Hierarchy) -> bool:
    """The chained operator statements regenerate the hierarchy verbatim."""
    m = sym_ref(h.M)
    u = [sym_ref(s) for s in h.U]
    eqs = [
        Equation.make(sub(jet(h.M, {h.y: 1}), apply_J(u[-1], h.x))),
        Equation.make(sub(jet(h.M, {h.t: 1}), apply_K(u[0], m, h.x))),
    ]
    for j in range(1, h.n):
        eqs.append(Equation.make(sub(apply_K(u[j], m, h.x), apply_J(u[j - 1], h.x))))
    return PDESystem(eqs).same_ideal_generators(h.equations)


def specialize_flow(h: Hierarchy, direction: str) -> PDESystem:
    """Collapse the auxiliary direction: ``y->x`` gives the positive-flow
    form, ``y->t`` the negative-flow form."""
    if direction not in ("y->x", "y->t"):
        raise ValueError(f"unknown flow specialization {direction!r}")
    new = h.x if direction == "y->x" else h.t
    out = []
    for eq in h.equations:
        out.append(
            Equation.make(
                substitute(eq.lhs, rename={h.y: new}),
                provenance=f"{eq.provenance} [{direction}]",
            )
        )
    return PDESystem(out)
