"""Plain-text grammar for expressions, plus renderers (text and LaTeX).

Grammar (whitespace-insensitive)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := primary ('^' exponent)?
    exponent := INT | '(' '-'? INT ('/' INT)? ')'
    primary  := INT | NAME | NAME '_' SUFFIX
              | 'exp' '(' expr ')' | 'log' '(' expr ')' | '(' expr ')'

Identifiers are ``[A-Za-z][A-Za-z0-9]*``; a derivative suffix is matched
greedily against the symbol's declared dependency names (longest first),
so ``H_z1z2`` and ``psi_xxt`` both resolve.  Rendering emits the same
grammar and ``parse(render(e)) == e`` for every canonical expression.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .expr import (
    Expr,
    ExpAtom,
    FunctionSymbol,
    IndepVar,
    JetVar,
    LogAtom,
    Parameter,
    Q,
    ZERO,
    add,
    ediv,
    epow,
    jet,
    make_exp,
    make_log,
    mul,
    neg,
    par,
    rat,
    var,
)

__all__ = ["SymbolTable", "ParseError", "parse", "render", "render_latex"]


class ParseError(ValueError):
    pass


@dataclass
class SymbolTable:
    """Name resolution for parsing: variables, parameters, function symbols."""

    variables: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    symbols: dict = field(default_factory=dict)

    def add_vars(self, *names: str) -> "SymbolTable":
        for n in names:
            self.variables[n] = IndepVar(n)
        return self

    def add_params(self, *names: str) -> "SymbolTable":
        for n in names:
            self.parameters[n] = Parameter(n)
        return self

    def add_symbol(self, sym: FunctionSymbol) -> FunctionSymbol:
        self.symbols[sym.name] = sym
        return sym

    def function(self, name: str, deps=()) -> FunctionSymbol:
        return self.add_symbol(FunctionSymbol(name, deps))


_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z][A-Za-z0-9]*)|(?P<op>[_+\-*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos and not text[pos:].strip():
            break
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} at {pos}")
        pos = m.end()
        if m.group("int"):
            out.append(("int", m.group("int")))
        elif m.group("name"):
            out.append(("name", m.group("name")))
        elif m.group("op"):
            out.append(("op", m.group("op")))
    rest = text[pos:].strip()
    if rest:
        raise ParseError(f"unexpected character {rest[0]!r} at {pos}")
    out.append(("end", ""))
    return out


class _Parser:
    def __init__(self, tokens, table: SymbolTable):
        self.toks = tokens
        self.i = 0
        self.table = table

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, op: str):
        kind, val = self.next()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, got {val!r}")

    # expr := term (('+'|'-') term)*
    def expr(self) -> Expr:
        out = self.term()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                t = self.term()
                out = add(out, t if val == "+" else neg(t))
            else:
                return out

    def term(self) -> Expr:
        out = self.unary()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                u = self.unary()
                out = mul(out, u) if val == "*" else ediv(out, u)
            else:
                return out

    def unary(self) -> Expr:
        kind, val = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.next()
            return epow(base, self.exponent())
        return base

    def exponent(self) -> Q:
        kind, val = self.peek()
        if kind == "int":
            self.next()
            return Q(int(val))
        if kind == "op" and val == "(":
            self.next()
            sign = 1
            kind, val = self.peek()
            if kind == "op" and val == "-":
                self.next()
                sign = -1
            kind, val = self.next()
            if kind != "int":
                raise ParseError("expected integer in exponent")
            num = int(val)
            den = 1
            kind, val = self.peek()
            if kind == "op" and val == "/":
                self.next()
                kind, val = self.next()
                if kind != "int":
                    raise ParseError("expected integer denominator in exponent")
                den = int(val)
            self.expect_op(")")
            return Q(sign * num, den)
        raise ParseError(f"expected exponent, got {val!r}")

    def primary(self) -> Expr:
        kind, val = self.next()
        if kind == "int":
            return rat(int(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind != "name":
            raise ParseError(f"unexpected token {val!r}")
        if val in ("exp", "log"):
            self.expect_op("(")
            arg = self.expr()
            self.expect_op(")")
            return make_exp(arg) if val == "exp" else make_log(arg)
        kind2, val2 = self.peek()
        if kind2 == "op" and val2 == "_":
            self.next()
            kind3, suffix = self.next()
            if kind3 not in ("name", "int"):
                raise ParseError(f"expected derivative suffix after {val}_")
            # suffix may continue with digits glued to a name token
            sym = self.table.symbols.get(val)
            if sym is None:
                raise ParseError(f"unknown function symbol {val!r}")
            return jet(sym, self._parse_suffix(sym, suffix))
        return self._resolve_name(val)

    def _parse_suffix(self, sym: FunctionSymbol, suffix: str):
        deps = sorted(sym.deps, key=len, reverse=True)
        counts: dict[str, int] = {}
        rest = suffix
        while rest:
            for d in deps:
                if rest.startswith(d):
                    counts[d] = counts.get(d, 0) + 1
                    rest = rest[len(d):]
                    break
            else:
                raise ParseError(
                    f"{sym.name}: cannot read derivative direction from {rest!r}"
                )
        return counts

    def _resolve_name(self, name: str) -> Expr:
        v = self.table.variables.get(name)
        if v is not None:
            return var(name)
        p = self.table.parameters.get(name)
        if p is not None:
            return par(name)
        s = self.table.symbols.get(name)
        if s is not None:
            return jet(s, ())
        raise ParseError(f"unknown name {name!r}")


def parse(text: str, table: SymbolTable) -> Expr:
    p = _Parser(_tokenize(text), table)
    e = p.expr()
    kind, val = p.peek()
    if kind != "end":
        raise ParseError(f"trailing input at {val!r}")
    return e


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _render_exponent(e: Q) -> str:
    if e.denominator == 1 and e >= 0:
        return str(e.numerator)
    if e.denominator == 1:
        return f"({e.numerator})"
    return f"({e.numerator}/{e.denominator})"


def _render_base(b, latex: bool) -> str:
    if isinstance(b, (IndepVar, Parameter)):
        return _name(b.name, latex)
    if isinstance(b, JetVar):
        nm = _name(b.sym.name, latex)
        if not b.midx:
            return nm
        suffix = "".join(d * k for d, k in b.midx)
        if latex:
            return f"{nm}_{{{suffix}}}"
        return f"{b.sym.name}_{suffix}"
    if isinstance(b, ExpAtom):
        inner = render_latex(b.arg) if latex else render(b.arg)
        return f"e^{{{inner}}}" if latex else f"exp({inner})"
    if isinstance(b, LogAtom):
        inner = render_latex(b.arg) if latex else render(b.arg)
        return f"\\ln\\!\\left({inner}\\right)" if latex else f"log({inner})"
    if isinstance(b, Expr):
        inner = render_latex(b) if latex else render(b)
        return f"\\left({inner}\\right)" if latex else f"({inner})"
    raise TypeError(f"cannot render base {b!r}")


def _render_mono(mono, coeff: Q, latex: bool) -> str:
    parts = []
    c = abs(coeff)
    if not mono or c != 1:
        if latex and c.denominator != 1:
            parts.append(f"\\tfrac{{{c.numerator}}}{{{c.denominator}}}")
        elif c.denominator != 1:
            parts.append(f"{c.numerator}/{c.denominator}")
        else:
            parts.append(str(c.numerator))
    for b, e in mono:
        s = _render_base(b, latex)
        if e != 1:
            if latex:
                es = str(e.numerator) if e.denominator == 1 else f"{e.numerator}/{e.denominator}"
                s += f"^{{{es}}}"
            else:
                s += f"^{_render_exponent(e)}"
        parts.append(s)
    return " \\, ".join(parts) if latex else "*".join(parts)


def render(e: Expr) -> str:
    """Deterministic plain-text form; ``parse`` inverts it."""
    if not e.terms:
        return "0"
    out = []
    for i, (mono, c) in enumerate(e.terms):
        s = _render_mono(mono, c, latex=False)
        if i == 0:
            out.append(("-" if c < 0 else "") + s)
        else:
            out.append((" - " if c < 0 else " + ") + s)
    return "".join(out)


_LATEX_NAMES = {
    "lam": r"\lambda",
    "lam0": r"\lambda_0",
    "Lam": r"\Lambda",
    "psi": r"\psi",
    "Phi": r"\Phi",
    "rho": r"\rho",
    "ii": r"\mathrm{i}",
    "theta": r"\theta",
}
_SUBSCRIPTED = re.compile(r"^([A-Za-z]+)(\d+)$")


def _name(name: str, latex: bool) -> str:
    if not latex:
        return name
    if name in _LATEX_NAMES:
        return _LATEX_NAMES[name]
    m = _SUBSCRIPTED.match(name)
    if m and m.group(1) in ("U", "V"):
        return f"{m.group(1)}^{{[{m.group(2)}]}}"
    if m:
        return f"{m.group(1)}_{{{m.group(2)}}}"
    return name


def render_latex(e: Expr) -> str:
    if not e.terms:
        return "0"
    out = []
    for i, (mono, c) in enumerate(e.terms):
        s = _render_mono(mono, c, latex=True)
        if i == 0:
            out.append(("-" if c < 0 else "") + s)
        else:
            out.append((" - " if c < 0 else " + ") + s)
    return "".join(out)
