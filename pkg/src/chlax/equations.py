"""Normalized polynomial equations and systems of them.

An ``Equation`` stores a canonical left-hand side of ``lhs == 0``:
denominators cleared against the least common denominator (the compound
bases are generically nonzero), the rational content divided out, and the
sign fixed so the leading canonical term is positive.  Two equations are
the same object of study iff their normalized sides coincide, so set
comparison of systems is exact.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .expr import (
    Expr,
    Q,
    ZERO,
    _acc_mono,
    _from_acc,
    _mono_key,
    as_fraction,
    divide_monomial_content,
    emul2,
    epow,
    is_zero,
    monomial_content,
    sub,
)
from .parser import render, render_latex

__all__ = ["Equation", "PDESystem"]


class Equation:
    """``lhs == 0`` with the left side in normal form."""

    __slots__ = ("lhs", "provenance", "raw")

    def __init__(self, lhs: Expr, provenance: str = "", raw: Optional[Expr] = None):
        self.lhs = lhs
        self.provenance = provenance
        self.raw = raw

    @classmethod
    def make(cls, e: Expr, provenance: str = "", generic=None) -> "Equation":
        """Normalize an expression into an equation.

        Denominators are cleared, the common monomial factor over
        ``generic`` bases (exponential units always count) is divided out,
        then the rational content and the overall sign are fixed.
        """
        raw = e
        num, _den = as_fraction(e, clear_atoms=True)
        num = divide_monomial_content(num, allowed=generic if generic is not None else ())
        if num.terms:
            from math import gcd

            g = 0
            lcm = 1
            for _m, c in num.terms:
                g = gcd(g, abs(c.numerator))
                lcm = lcm * c.denominator // gcd(lcm, c.denominator)
            content = Q(g, lcm)
            if num.terms[0][1] < 0:
                content = -content
            num = Expr(tuple((m, c / content) for m, c in num.terms))
        return cls(num, provenance, raw)

    def is_trivial(self) -> bool:
        return not self.lhs.terms

    def key(self):
        return self.lhs.sort_key()

    def __eq__(self, other):
        return isinstance(other, Equation) and self.lhs == other.lhs

    def __hash__(self):
        return hash(self.lhs)

    def render(self) -> str:
        return f"{render(self.lhs)} = 0"

    def render_latex(self) -> str:
        return f"{render_latex(self.lhs)} = 0"

    def __repr__(self):
        tag = f" [{self.provenance}]" if self.provenance else ""
        return f"<Equation {self.render()}{tag}>"


class PDESystem:
    """A finite set of equations in canonical order."""

    __slots__ = ("equations",)

    def __init__(self, equations: Iterable[Equation]):
        seen = {}
        for eq in equations:
            if eq.is_trivial():
                continue
            if eq.lhs not in seen:
                seen[eq.lhs] = eq
        self.equations = tuple(sorted(seen.values(), key=Equation.key))

    def __iter__(self):
        return iter(self.equations)

    def __len__(self):
        return len(self.equations)

    def __eq__(self, other):
        if not isinstance(other, PDESystem):
            return NotImplemented
        return [e.lhs for e in self.equations] == [e.lhs for e in other.equations]

    def __hash__(self):
        return hash(tuple(e.lhs for e in self.equations))

    def same_ideal_generators(self, other: "PDESystem") -> bool:
        """Set equality of the normalized left-hand sides."""
        return {e.lhs for e in self} == {e.lhs for e in other}

    def same_linear_span(self, other: "PDESystem", coefficients=None) -> bool:
        """Equality of the linear spans of the generators.

        Grading a compatibility function by spectral-parameter powers can
        emit redundant coefficients (sums of one another) when the flow
        multiplier mixes grades; two generator sets describe the same system
        exactly when each generator lies in the span of the other set.

        Without ``coefficients`` the span is over the rationals.  With
        ``coefficients`` (a predicate on bases), monomial factors satisfying
        the predicate are treated as known coefficient functions and the
        span is over their rational-function field: elimination divides by
        pivot coefficients, which is the same genericity the normal form
        already assumes of the generic bases.
        """
        if coefficients is None:
            mine = [dict(eq.lhs.terms) for eq in self]
            theirs = [dict(eq.lhs.terms) for eq in other]
            return _span_contains(mine, theirs) and _span_contains(theirs, mine)
        mine = [_function_row(eq.lhs, coefficients) for eq in self]
        theirs = [_function_row(eq.lhs, coefficients) for eq in other]
        return _span_contains_fn(mine, theirs) and _span_contains_fn(theirs, mine)

    def render(self) -> str:
        return "\n".join(eq.render() for eq in self.equations)

    def render_latex(self) -> str:
        lines = " \\\\\n".join(eq.render_latex() for eq in self.equations)
        return "\\begin{gather*}\n" + lines + "\n\\end{gather*}"

    def __repr__(self):
        return f"<PDESystem of {len(self.equations)}>"


def _subtract_scaled(row: dict, c: Q, other: dict) -> None:
    """row -= c * other, dropping cancelled entries (exact arithmetic)."""
    for mono, bc in other.items():
        nc = row.get(mono, Q(0)) - c * bc
        if nc:
            row[mono] = nc
        else:
            row.pop(mono, None)


def _reduce_against(row: dict, basis: dict) -> dict:
    """Eliminate every basis pivot from ``row``.

    The basis is kept fully reduced (no row contains another row's pivot),
    so one pass over the pivots suffices in any order.
    """
    for pivot, brow in basis.items():
        c = row.get(pivot)
        if c:
            _subtract_scaled(row, c, brow)
    return row


def _span_contains(container: list, members: list) -> bool:
    """Do all of ``members`` lie in the rational span of ``container``?

    Rows are mono -> coefficient mappings over the shared canonical
    monomial basis; elimination is exact.
    """
    basis: dict = {}
    for row in container:
        row = _reduce_against(dict(row), basis)
        if not row:
            continue
        pivot = min(row, key=lambda m: _mono_key(m, Q(1)))
        inv = Q(1) / row[pivot]
        new = {m: c * inv for m, c in row.items()}
        for brow in basis.values():
            c = brow.get(pivot)
            if c:
                _subtract_scaled(brow, c, new)
        basis[pivot] = new
    return all(not _reduce_against(dict(row), basis) for row in members)


def _function_row(lhs: Expr, coefficients) -> dict:
    """Split a generator into unknown-monomial -> coefficient-Expr."""
    acc: dict = {}
    for mono, c in lhs.terms:
        unknown = tuple((b, e) for b, e in mono if not coefficients(b))
        parts: dict = {}
        for b, e in mono:
            if coefficients(b):
                parts[b] = e
        _acc_mono(acc.setdefault(unknown, {}), parts, c)
    out = {}
    for m, a in acc.items():
        e = _from_acc(a)
        if e.terms:
            out[m] = e
    return out


def _subtract_scaled_fn(row: dict, c: Expr, other: dict) -> None:
    """row -= c * other with rational-function entries, dropping zeros."""
    for mono, bc in other.items():
        nc = sub(row.get(mono, ZERO), emul2(c, bc))
        if is_zero(nc):
            row.pop(mono, None)
        else:
            row[mono] = nc


def _reduce_against_fn(row: dict, basis: dict) -> dict:
    for pivot, brow in basis.items():
        c = row.get(pivot)
        if c is not None:
            _subtract_scaled_fn(row, c, brow)
    return row


def _span_contains_fn(container: list, members: list) -> bool:
    """Span containment over the rational-function coefficient field."""
    basis: dict = {}
    for row in container:
        row = _reduce_against_fn(dict(row), basis)
        if not row:
            continue
        pivot = min(row, key=lambda m: _mono_key(m, Q(1)))
        inv = epow(row[pivot], -1)
        new = {m: emul2(c, inv) for m, c in row.items()}
        for brow in basis.values():
            c = brow.get(pivot)
            if c is not None:
                _subtract_scaled_fn(brow, c, new)
        basis[pivot] = new
    return all(not _reduce_against_fn(dict(row), basis) for row in members)
