"""Exact symbolic expression kernel over jet variables.

The expression domain is rational functions (with exact rational
coefficients) in a fixed alphabet of atoms:

* independent variables (``IndepVar``),
* named constants (``Parameter``),
* jet variables (``JetVar``): a function symbol together with an unordered
  derivative multi-index; mixed partials are identified,
* exponential atoms ``ExpAtom(arg)`` and logarithm atoms ``LogAtom(arg)``
  whose arguments are expressions.

Every ``Expr`` is kept in a canonical form at all times: a sum of
monomials, each monomial a rational coefficient times a product of
``base ** exponent`` factors with exact rational exponents, sorted by a
fixed structural total order.  Compound (sum) bases occur only with
negative integer exponents and are themselves canonical: expanded,
content-free and sign-fixed.  The canonical constructors enforce:

* no nested sums/products, rational constants folded, no exponent-1
  powers, at most one exponential factor per monomial
  (``exp(a)*exp(b) -> exp(a+b)``, ``exp(a)**q -> exp(q*a)``),
* ``exp(0) = 1``, ``exp(k*log(u) + r) = u**floor(k) * exp(frac(k)*log(u) + r)``
  for rational ``k``, ``log(exp(a)) = a``, ``log(1) = 0``,
* positive integer powers of sums are expanded; fractional powers of sums
  are rewritten through ``exp(q*log(s))`` so ``Power`` exponents on
  compound bases are always negative integers,
* function symbols may declare one-directional derivative rules
  (e.g. an antiderivative atom ``P`` with ``dP/dt = A``); any multi-index
  containing a ruled direction is rewritten eagerly, so stored jet
  variables are irreducible,
* function symbols may declare a square relation (``E**2 = rhs``); even
  powers of such symbols are rewritten confluently at construction.

``is_zero`` clears denominators over the least common denominator of the
compound bases (which are generically nonzero by construction) and tests
the expanded numerator, so it is sound and complete on this class.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

Q = Fraction

QLike = Union[int, Fraction]

__all__ = [
    "Q",
    "FunctionSymbol",
    "IndepVar",
    "Parameter",
    "JetVar",
    "ExpAtom",
    "LogAtom",
    "Expr",
    "ZERO",
    "ONE",
    "rat",
    "var",
    "par",
    "atom_expr",
    "sym_ref",
    "jet",
    "add",
    "sub",
    "neg",
    "mul",
    "scale",
    "ediv",
    "epow",
    "make_exp",
    "make_log",
    "normalize",
    "is_zero",
    "equal",
    "diff",
    "diff_multi",
    "derive",
    "partial_atom",
    "explicit_partial",
    "substitute",
    "as_fraction",
    "atoms_of",
    "jet_atoms",
    "grade_by_base",
    "collect_linear",
    "monomial_content",
    "divide_monomial_content",
]


# ---------------------------------------------------------------------------
# symbols and atoms
# ---------------------------------------------------------------------------

class FunctionSymbol:
    """A named function of declared independent variables.

    ``rules`` maps a direction name to a closed-form Expr for the first
    derivative in that direction; the rule is one-directional (never used
    backwards).  ``square`` optionally gives the right-hand side of the
    relation ``f**2 == square`` used as a confluent rewrite on even powers
    (the rhs must not mention ``f`` itself).

    Symbols compare by name; a single computation must never mix two
    distinct symbols of the same name.
    """

    __slots__ = ("name", "deps", "rules", "square")

    def __init__(self, name: str, deps: Sequence[str] = ()):
        self.name = name
        self.deps = tuple(deps)
        self.rules: dict[str, "Expr"] = {}
        self.square: Optional["Expr"] = None

    def set_rule(self, direction: str, rhs: "Expr") -> "FunctionSymbol":
        if direction not in self.deps:
            raise ValueError(f"{self.name}: rule direction {direction!r} not a dependency")
        self.rules[direction] = rhs
        return self

    def set_square(self, rhs: "Expr") -> "FunctionSymbol":
        self.square = rhs
        return self

    def __repr__(self):
        return f"FunctionSymbol({self.name!r}, deps={self.deps})"


class _Atom:
    """Common base for atomic factors; orders by a structural key."""

    __slots__ = ("_key", "_hash")

    def sort_key(self):
        return self._key

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other or (type(self) is type(other) and self._key == other._key)

    def __lt__(self, other):
        return _base_key(self) < _base_key(other)


class IndepVar(_Atom):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._key = (0, name)
        self._hash = hash(self._key)

    def __repr__(self):
        return f"IndepVar({self.name!r})"


class Parameter(_Atom):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._key = (1, name)
        self._hash = hash(self._key)

    def __repr__(self):
        return f"Parameter({self.name!r})"


class JetVar(_Atom):
    """A derivative coordinate of a function symbol.

    ``midx`` is a tuple of (direction, order) pairs in the symbol's
    dependency order; the empty tuple is the symbol value itself.
    """

    __slots__ = ("sym", "midx")

    def __init__(self, sym: FunctionSymbol, midx: tuple):
        self.sym = sym
        self.midx = midx
        self._key = (2, sym.name, midx)
        self._hash = hash(self._key)

    @property
    def order(self) -> int:
        return sum(k for _, k in self.midx)

    def __repr__(self):
        return f"JetVar({self.sym.name}, {dict(self.midx)})"


class ExpAtom(_Atom):
    __slots__ = ("arg",)

    def __init__(self, arg: "Expr"):
        self.arg = arg
        self._key = (3,) + arg.sort_key()
        self._hash = hash(self._key)

    def __repr__(self):
        return f"ExpAtom({self.arg!r})"


class LogAtom(_Atom):
    __slots__ = ("arg",)

    def __init__(self, arg: "Expr"):
        self.arg = arg
        self._key = (4,) + arg.sort_key()
        self._hash = hash(self._key)

    def __repr__(self):
        return f"LogAtom({self.arg!r})"


Base = Union[_Atom, "Expr"]  # compound (sum) bases are Exprs


def _base_key(b: Base):
    if isinstance(b, Expr):
        return (5,) + b.sort_key()
    return b.sort_key()


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

# A monomial is a tuple of (base, exponent) pairs sorted by base key.
Mono = tuple


def _mono_key(mono: Mono, coeff: Q):
    deg = sum((e for _, e in mono), Q(0))
    return (deg, tuple((_base_key(b), e) for b, e in mono), coeff)


class Expr:
    """Canonical expression: sorted tuple of (monomial, coefficient)."""

    __slots__ = ("terms", "_hash", "_skey")

    def __init__(self, terms: tuple):
        self.terms = terms
        self._hash = None
        self._skey = None

    # -- identity ----------------------------------------------------------
    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.terms)
        return self._hash

    def __eq__(self, other):
        return self is other or (isinstance(other, Expr) and self.terms == other.terms)

    def sort_key(self):
        if self._skey is None:
            self._skey = tuple(
                (tuple((_base_key(b), e) for b, e in mono), c) for mono, c in self.terms
            )
        return self._skey

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    # -- inspection --------------------------------------------------------
    def is_rational(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0] == ())

    def rational_value(self) -> Q:
        if not self.terms:
            return Q(0)
        if self.terms[0][0] == ():
            return self.terms[0][1]
        raise ValueError("not a rational constant")

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        from .parser import render
        return f"<Expr {render(self)}>"

    # -- operator sugar (used heavily by the model builders) ---------------
    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ediv(self, _coerce(other))

    def __rtruediv__(self, other):
        return ediv(_coerce(other), self)

    def __pow__(self, q):
        return epow(self, Q(q))

    def __neg__(self):
        return neg(self)


ZERO = Expr(())
ONE = Expr((((), Q(1)),))


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return rat(x)
    raise TypeError(f"cannot coerce {x!r} to Expr")


def rat(p: QLike, q: QLike = 1) -> Expr:
    v = Q(p, q) if q != 1 else Q(p)
    if v == 0:
        return ZERO
    return Expr((((), v),))


def _atom_expr(a: _Atom) -> Expr:
    return Expr(((((a, Q(1)),), Q(1)),))


def atom_expr(a: _Atom) -> Expr:
    """Wrap a single atom as an expression."""
    return _atom_expr(a)


def var(name: str) -> Expr:
    return _atom_expr(IndepVar(name))


def par(name: str) -> Expr:
    return _atom_expr(Parameter(name))


def sym_ref(sym: FunctionSymbol) -> Expr:
    """The order-0 jet of a function symbol (the symbol value atom)."""
    return jet(sym, ())


def _from_acc(acc: dict) -> Expr:
    items = [(m, c) for m, c in acc.items() if c != 0]
    items.sort(key=lambda mc: _mono_key(mc[0], mc[1]))
    return Expr(tuple(items)) if items else ZERO


# ---------------------------------------------------------------------------
# canonical monomial assembly (the rewrite hub)
# ---------------------------------------------------------------------------

def _acc_mono(acc: dict, factors: Mapping[Base, Q], coeff: Q) -> None:
    """Accumulate coeff * prod(base**exp) into acc, canonicalizing.

    Rewrites triggered here: exponential merging and integer-log
    extraction, square relations, expansion of positive integer powers of
    sums, exp/log form for fractional powers of sums.
    """
    if coeff == 0:
        return
    pend: list[Expr] = []
    clean: dict[Base, Q] = {}
    exp_parts: list[tuple[Expr, Q]] = []
    for b, e in factors.items():
        if e == 0:
            continue
        if isinstance(b, ExpAtom):
            exp_parts.append((b.arg, e))
            continue
        if isinstance(b, JetVar) and b.midx == () and b.sym.square is not None:
            if e.denominator != 1:
                raise ValueError(f"fractional power of relation symbol {b.sym.name}")
            k, r = divmod(int(e), 2)  # e == 2*k + r with r in {0, 1}
            if k:
                pend.append(epow(b.sym.square, Q(k)))
            if r:
                clean[b] = clean.get(b, Q(0)) + 1
            continue
        if isinstance(b, Expr):
            if e.denominator != 1:
                pend.append(make_exp(mul(rat(e), make_log(b))))
                continue
            k = int(e)
            if k > 0:
                pend.append(epow(b, Q(k)))
                continue
            clean[b] = clean.get(b, Q(0)) + e
            continue
        clean[b] = clean.get(b, Q(0)) + e
    if exp_parts:
        arg_acc: dict = {}
        for a, e in exp_parts:
            for m, c in a.terms:
                arg_acc[m] = arg_acc.get(m, Q(0)) + c * e
        ex = make_exp(_from_acc(arg_acc))
        if ex is not ONE:
            pend.append(ex)
    clean = {b: e for b, e in clean.items() if e != 0}
    if not pend:
        mono = tuple(sorted(clean.items(), key=lambda be: _base_key(be[0])))
        acc[mono] = acc.get(mono, Q(0)) + coeff
        return
    prod = Expr((((tuple(sorted(clean.items(), key=lambda be: _base_key(be[0])))), coeff),))
    for p in pend:
        prod = emul2(prod, p)
    for m, c in prod.terms:
        acc[m] = acc.get(m, Q(0)) + c


def emul2(a: Expr, b: Expr) -> Expr:
    if not a.terms or not b.terms:
        return ZERO
    if a is ONE:
        return b
    if b is ONE:
        return a
    acc: dict = {}
    for m1, c1 in a.terms:
        for m2, c2 in b.terms:
            factors: dict[Base, Q] = dict(m1)
            merged = False
            for base, e in m2:
                if base in factors:
                    merged = True
                    factors[base] = factors[base] + e
                else:
                    factors[base] = e
            if not merged and not _needs_rewrite(m1, m2):
                mono = tuple(sorted(factors.items(), key=lambda be: _base_key(be[0])))
                acc[mono] = acc.get(mono, Q(0)) + c1 * c2
            else:
                _acc_mono(acc, factors, c1 * c2)
    return _from_acc(acc)


def _needs_rewrite(m1: Mono, m2: Mono) -> bool:
    n_exp = 0
    for m in (m1, m2):
        for b, e in m:
            if isinstance(b, ExpAtom):
                n_exp += 1
                if e != 1:
                    return True
    return n_exp > 1


def add(*exprs) -> Expr:
    acc: dict = {}
    for e in exprs:
        e = _coerce(e)
        for m, c in e.terms:
            acc[m] = acc.get(m, Q(0)) + c
    return _from_acc(acc)


def neg(e: Expr) -> Expr:
    return Expr(tuple((m, -c) for m, c in e.terms))


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(_coerce(b)))


def mul(*exprs) -> Expr:
    out = ONE
    for e in exprs:
        out = emul2(out, _coerce(e))
        if not out.terms:
            return ZERO
    return out


def scale(e: Expr, c: QLike) -> Expr:
    c = Q(c)
    if c == 0:
        return ZERO
    if c == 1:
        return e
    return Expr(tuple((m, c * k) for m, k in e.terms))


def ediv(a: Expr, b: Expr) -> Expr:
    return emul2(_coerce(a), epow(_coerce(b), Q(-1)))


def _rat_root(c: Q, q: Q) -> Optional[Q]:
    """Exact value of c**q for rational c, or None if not rational."""
    if q.denominator == 1:
        if c == 0 and q < 0:
            raise ZeroDivisionError("0 ** negative")
        return c ** int(q)
    if c < 0:
        return None
    r = q.denominator

    def iroot(n: int) -> Optional[int]:
        if n in (0, 1):
            return n
        lo, hi = 1, 1 << ((n.bit_length() + r - 1) // r + 1)
        while lo < hi:
            mid = (lo + hi) // 2
            if mid ** r < n:
                lo = mid + 1
            else:
                hi = mid
        return lo if lo ** r == n else None

    pn = iroot(c.numerator)
    pd = iroot(c.denominator)
    if pn is None or pd is None:
        return None
    return Q(pn, pd) ** q.numerator


def epow(e: Expr, q: QLike) -> Expr:
    q = Q(q)
    if q == 0:
        return ONE
    if q == 1:
        return e
    if not e.terms:
        if q > 0:
            return ZERO
        raise ZeroDivisionError("zero to a negative power")
    if len(e.terms) == 1:
        mono, c = e.terms[0]
        factors = {b: ex * q for b, ex in mono}
        cv = _rat_root(c, q)
        acc: dict = {}
        if cv is None:
            _acc_mono(acc, factors, Q(1))
            out = _from_acc(acc)
            return emul2(out, make_exp(mul(rat(q), _atom_expr(LogAtom(rat(c))))))
        _acc_mono(acc, factors, cv)
        return _from_acc(acc)
    if q.denominator == 1:
        k = int(q)
        if k > 0:
            out = ONE
            base = e
            while k:
                if k & 1:
                    out = emul2(out, base)
                k >>= 1
                if k:
                    base = emul2(base, base)
            return out
        num, den_mono = as_fraction(e, clear_atoms=True)
        prim, content = _primitive(num)
        acc = {}
        factors = {prim: Q(k)}
        for b, ex in den_mono:
            factors[b] = factors.get(b, Q(0)) + ex * k
        _acc_mono(acc, factors, content ** k)
        return _from_acc(acc)
    return make_exp(mul(rat(q), make_log(e)))


def _primitive(e: Expr) -> tuple[Expr, Q]:
    """Split a (multi-term, denominator-free) sum into primitive * content.

    The primitive part has coprime integer coefficients and a positive
    leading coefficient; it is the canonical compound base.
    """
    if len(e.terms) < 2:
        raise ValueError("primitive part of a non-sum")
    from math import gcd

    g = 0
    lcm = 1
    for _, c in e.terms:
        g = gcd(g, abs(c.numerator))
        lcm = lcm * c.denominator // gcd(lcm, c.denominator)
    content = Q(g, lcm)
    if e.terms[0][1] < 0:
        content = -content
    prim = Expr(tuple((m, c / content) for m, c in e.terms))
    return prim, content


# ---------------------------------------------------------------------------
# exponential / logarithm canonicalization
# ---------------------------------------------------------------------------

def make_exp(arg: Expr) -> Expr:
    arg = _coerce(arg)
    if not arg.terms:
        return ONE
    prefix = ONE
    residual: dict = {}
    for mono, c in arg.terms:
        if len(mono) == 1 and isinstance(mono[0][0], LogAtom) and mono[0][1] == 1:
            m = c.numerator // c.denominator  # floor
            r = c - m
            u = mono[0][0].arg
            if m:
                prefix = emul2(prefix, epow(u, Q(m)))
            if r:
                residual[mono] = residual.get(mono, Q(0)) + r
        else:
            residual[mono] = residual.get(mono, Q(0)) + c
    res = _from_acc(residual)
    if not res.terms:
        return prefix
    return emul2(prefix, _atom_expr(ExpAtom(res)))


def make_log(u: Expr) -> Expr:
    u = _coerce(u)
    if not u.terms:
        raise ValueError("log of zero")
    if u is ONE:
        return ZERO
    if len(u.terms) == 1:
        mono, c = u.terms[0]
        if c < 0:
            return _atom_expr(LogAtom(u))
        parts = []
        if c != 1:
            parts.append(_atom_expr(LogAtom(rat(c))))
        for b, e in mono:
            if isinstance(b, ExpAtom):
                parts.append(scale(b.arg, e))
            elif isinstance(b, Expr):
                parts.append(scale(_atom_expr(LogAtom(b)), e))
            else:
                parts.append(scale(_atom_expr(LogAtom(_atom_expr(b))), e))
        return add(*parts) if parts else ZERO
    return _atom_expr(LogAtom(u))


# ---------------------------------------------------------------------------
# fractions and the zero test
# ---------------------------------------------------------------------------

def as_fraction(e: Expr, clear_atoms: bool = False) -> tuple[Expr, Mono]:
    """Write e as numerator * prod(denominator factors) ** -1.

    Clears compound bases (always) and negative/fractional-negative atomic
    powers (when ``clear_atoms``).  Returns (numerator, denominator
    monomial); the denominator factors are generically nonzero.
    """
    dens: dict[Base, Q] = {}
    for mono, _c in e.terms:
        for b, ex in mono:
            if ex < 0 and (isinstance(b, Expr) or clear_atoms):
                need = -ex
                if need > dens.get(b, Q(0)):
                    dens[b] = need
    if not dens:
        return e, ()
    acc: dict = {}
    for mono, c in e.terms:
        extra = ONE
        kept: dict[Base, Q] = {}
        present = dict(mono)
        for b, ex in mono:
            if b not in dens:
                kept[b] = ex
        for b, need in dens.items():
            lift = need + present.get(b, Q(0))
            if lift:
                if isinstance(b, Expr):
                    extra = emul2(extra, epow(b, lift))
                else:
                    kept[b] = kept.get(b, Q(0)) + lift
        if extra is ONE:
            _acc_mono(acc, kept, c)
        else:
            for m2, c2 in extra.terms:
                factors = dict(kept)
                for b, ex in m2:
                    factors[b] = factors.get(b, Q(0)) + ex
                _acc_mono(acc, factors, c * c2)
    den_mono = tuple(sorted(((b, -k) for b, k in dens.items()), key=lambda be: _base_key(be[0])))
    return _from_acc(acc), den_mono


def normalize(e: Expr) -> Expr:
    """Identity on this representation (construction is canonicalizing)."""
    return _coerce(e)


def is_zero(e: Expr) -> bool:
    e = _coerce(e)
    if not e.terms:
        return True
    if not any(isinstance(b, Expr) and ex < 0 for mono, _ in e.terms for b, ex in mono):
        return False
    num, _ = as_fraction(e)
    return not num.terms


def equal(a: Expr, b: Expr) -> bool:
    return is_zero(sub(a, b))


# ---------------------------------------------------------------------------
# jets and differentiation
# ---------------------------------------------------------------------------

def _midx_tuple(sym: FunctionSymbol, midx) -> tuple:
    if isinstance(midx, dict):
        items = midx.items()
    else:
        items = midx
    counts: dict[str, int] = {}
    for d, k in items:
        if k:
            counts[d] = counts.get(d, 0) + int(k)
    for d in counts:
        if d not in sym.deps:
            raise ValueError(f"{sym.name}: derivative in undeclared direction {d!r}")
    return tuple((d, counts[d]) for d in sym.deps if d in counts)


def jet(sym: FunctionSymbol, midx=()) -> Expr:
    """The jet of ``sym`` at multi-index ``midx`` with eager rule rewriting."""
    mt = _midx_tuple(sym, midx)
    if sym.rules:
        for d, k in mt:
            if d in sym.rules:
                rest = [(dd, kk) for dd, kk in mt if dd != d]
                if k > 1:
                    rest.append((d, k - 1))
                out = sym.rules[d]
                for dd, kk in rest:
                    for _ in range(kk):
                        out = diff(out, dd)
                return out
    return _atom_expr(JetVar(sym, mt))


def _jet_raise(a: JetVar, direction: str) -> Expr:
    counts = dict(a.midx)
    counts[direction] = counts.get(direction, 0) + 1
    return jet(a.sym, counts)


def derive(
    e: Expr,
    var_images: Mapping[str, Expr],
    jet_overrides: Optional[Mapping[_Atom, Expr]] = None,
    jets_chain: bool = True,
    memo: Optional[dict] = None,
) -> Expr:
    """Generic derivation: extend base images by the Leibniz/chain rules.

    ``var_images`` maps independent-variable names to their images (the
    image of an unnamed variable is zero).  For jet atoms, the default is
    the chain over the symbol's dependencies (using ``var_images`` for the
    directional weights); ``jet_overrides`` pins images of specific atoms,
    and ``jets_chain=False`` freezes all non-overridden jets instead.
    """
    if memo is None:
        memo = {}
    return _derive(e, var_images, jet_overrides or {}, jets_chain, memo)


def _derive(e: Expr, vimg, jov, jchain, memo) -> Expr:
    got = memo.get(e)
    if got is not None:
        return got
    total: list[Expr] = []
    base_memo_key = ("b",)
    for mono, c in e.terms:
        for i, (b, ex) in enumerate(mono):
            db = memo.get((base_memo_key, b))
            if db is None:
                db = _derive_base(b, vimg, jov, jchain, memo)
                memo[(base_memo_key, b)] = db
            if not db.terms:
                continue
            rest: dict[Base, Q] = {}
            for j, (b2, e2) in enumerate(mono):
                rest[b2] = e2 if j != i else e2 - 1
            acc: dict = {}
            _acc_mono(acc, rest, c * ex)
            total.append(emul2(_from_acc(acc), db))
    out = add(*total) if total else ZERO
    memo[e] = out
    return out


def _derive_base(b: Base, vimg, jov, jchain, memo) -> Expr:
    if isinstance(b, IndepVar):
        return vimg.get(b.name, ZERO)
    if isinstance(b, Parameter):
        return ZERO
    if isinstance(b, JetVar):
        if b in jov:
            return jov[b]
        if not jchain:
            return ZERO
        parts = []
        for w in b.sym.deps:
            img = vimg.get(w)
            if img is not None and img.terms:
                parts.append(emul2(img, _jet_raise(b, w)))
        return add(*parts) if parts else ZERO
    if isinstance(b, ExpAtom):
        da = _derive(b.arg, vimg, jov, jchain, memo)
        return emul2(da, _atom_expr(b)) if da.terms else ZERO
    if isinstance(b, LogAtom):
        da = _derive(b.arg, vimg, jov, jchain, memo)
        return emul2(da, epow(b.arg, Q(-1))) if da.terms else ZERO
    if isinstance(b, Expr):
        return _derive(b, vimg, jov, jchain, memo)
    raise TypeError(f"unknown base {b!r}")


Chain = Mapping[str, Mapping[str, Expr]]


def diff(e: Expr, direction: str, chain: Optional[Chain] = None, memo: Optional[dict] = None) -> Expr:
    """Total derivative in ``direction``.

    ``chain`` attaches dependent-variable rows: for each chained variable
    ``z``, ``chain[z][direction]`` is the image of ``z`` (its partial with
    respect to the direction), used both for explicit occurrences of ``z``
    and through the chain rule for jets of symbols depending on ``z``.
    """
    vimg: dict[str, Expr] = {direction: ONE}
    if chain:
        for zname, row in chain.items():
            img = row.get(direction)
            if img is not None and img.terms:
                vimg[zname] = img
    return derive(_coerce(e), vimg, None, True, memo)


def diff_multi(e: Expr, midx, chain: Optional[Chain] = None) -> Expr:
    """Iterated total derivative over a multi-index (dict or pair list)."""
    items = midx.items() if isinstance(midx, dict) else midx
    out = _coerce(e)
    for d, k in items:
        for _ in range(int(k)):
            out = diff(out, d, chain)
    return out


def partial_atom(e: Expr, a: _Atom) -> Expr:
    """Partial derivative with respect to a single atom, all others frozen."""
    return derive(_coerce(e), {}, {a: ONE}, False)


def explicit_partial(e: Expr, direction: str) -> Expr:
    """Partial with respect to explicit occurrences of a variable only."""
    return derive(_coerce(e), {direction: ONE}, None, False)


# ---------------------------------------------------------------------------
# substitution
# ---------------------------------------------------------------------------

def substitute(
    e: Expr,
    fields: Optional[Mapping[FunctionSymbol, Expr]] = None,
    atoms: Optional[Mapping[_Atom, Expr]] = None,
    rename: Optional[Mapping[str, str]] = None,
    chain: Optional[Chain] = None,
) -> Expr:
    """Replace atoms and function symbols throughout an expression.

    ``fields`` replaces whole function symbols: a jet of a replaced symbol
    becomes the corresponding total derivative of the replacement (computed
    with ``chain``, so replacements may live on dependent variables).
    ``atoms`` replaces exact atoms (explicit occurrences only).  ``rename``
    renames independent variables, including inside jet multi-indices.
    """
    memo: dict = {}

    def sub_expr(x: Expr) -> Expr:
        got = memo.get(x)
        if got is not None:
            return got
        acc: dict = {}
        for mono, c in x.terms:
            out = rat(c)
            for b, ex in mono:
                img = sub_base(b)
                out = emul2(out, epow(img, ex))
                if not out.terms:
                    break
            for m2, c2 in out.terms:
                acc[m2] = acc.get(m2, Q(0)) + c2
        r = _from_acc(acc)
        memo[x] = r
        return r

    def sub_base(b: Base) -> Expr:
        if atoms and not isinstance(b, Expr) and b in atoms:
            return atoms[b]
        if isinstance(b, JetVar):
            if fields and b.sym in fields:
                return diff_multi(fields[b.sym], b.midx, chain)
            if rename:
                counts: dict[str, int] = {}
                changed = False
                for d, k in b.midx:
                    nd = rename.get(d, d)
                    changed = changed or nd != d
                    counts[nd] = counts.get(nd, 0) + k
                if changed:
                    return jet(b.sym, counts)
            return _atom_expr(b)
        if isinstance(b, IndepVar):
            if rename and b.name in rename:
                return var(rename[b.name])
            return _atom_expr(b)
        if isinstance(b, Parameter):
            return _atom_expr(b)
        if isinstance(b, ExpAtom):
            return make_exp(sub_expr(b.arg))
        if isinstance(b, LogAtom):
            return make_log(sub_expr(b.arg))
        if isinstance(b, Expr):
            return sub_expr(b)
        raise TypeError(f"unknown base {b!r}")

    return sub_expr(_coerce(e))


# ---------------------------------------------------------------------------
# structural queries and collection helpers
# ---------------------------------------------------------------------------

def atoms_of(e: Expr) -> set:
    """All atoms appearing anywhere, including inside exp/log arguments
    and compound denominators."""
    seen: set = set()

    def walk(x: Expr):
        for mono, _ in x.terms:
            for b, _ex in mono:
                if isinstance(b, Expr):
                    walk(b)
                elif isinstance(b, (ExpAtom, LogAtom)):
                    seen.add(b)
                    walk(b.arg)
                else:
                    seen.add(b)

    walk(_coerce(e))
    return seen


def jet_atoms(e: Expr, sym: Optional[FunctionSymbol] = None) -> set:
    return {
        a
        for a in atoms_of(e)
        if isinstance(a, JetVar) and (sym is None or a.sym is sym)
    }


def grade_by_base(e: Expr, base: _Atom) -> dict:
    """Group top-level terms by the exponent of ``base`` (Laurent grading).

    The graded pieces have the base factor divided out.  The base must not
    occur inside compound denominators or exp/log arguments of ``e``.
    """
    out: dict[Q, dict] = {}
    for mono, c in e.terms:
        k = Q(0)
        rest = []
        for b, ex in mono:
            if b == base:
                k = ex
            else:
                if isinstance(b, Expr) and base in atoms_of(b):
                    raise ValueError("grading base occurs inside a compound factor")
                rest.append((b, ex))
        out.setdefault(k, {})[tuple(rest)] = out.get(k, {}).get(tuple(rest), Q(0)) + c
    return {k: _from_acc(acc) for k, acc in out.items()}


def collect_linear(e: Expr, keys: Iterable[_Atom]) -> dict:
    """Collect an expression linear in ``keys``: {atom: coefficient, ...}.

    The remainder free of all keys is returned under ``None``.  Raises if
    any term contains a key at power != 1 or two keys at once.
    """
    keyset = set(keys)
    out: dict = {}
    for mono, c in e.terms:
        hits = [(b, ex) for b, ex in mono if b in keyset]
        if not hits:
            out.setdefault(None, {})[mono] = out.get(None, {}).get(mono, Q(0)) + c
            continue
        if len(hits) > 1 or hits[0][1] != 1:
            raise ValueError("expression is not linear in the collection atoms")
        b0 = hits[0][0]
        rest = tuple((b, ex) for b, ex in mono if b != b0)
        out.setdefault(b0, {})[rest] = out.get(b0, {}).get(rest, Q(0)) + c
    return {k: _from_acc(acc) for k, acc in out.items()}


def monomial_content(e: Expr, allowed=None) -> Mono:
    """The common monomial factor of all terms (restricted to ``allowed``
    bases when given)."""
    if not e.terms:
        return ()
    common: Optional[dict] = None
    for mono, _ in e.terms:
        d = dict(mono)
        if common is None:
            common = d
        else:
            common = {
                b: min(ex, d[b]) for b, ex in common.items() if b in d
            }
        if not common:
            return ()
    out = {
        b: ex
        for b, ex in common.items()
        if ex != 0 and (allowed is None or b in allowed or isinstance(b, ExpAtom))
    }
    return tuple(sorted(out.items(), key=lambda be: _base_key(be[0])))


def divide_monomial_content(e: Expr, allowed=None) -> Expr:
    content = monomial_content(e, allowed)
    if not content:
        return e
    inv = {b: -ex for b, ex in content}
    acc: dict = {}
    for mono, c in e.terms:
        factors = dict(mono)
        for b, ex in inv.items():
            factors[b] = factors.get(b, Q(0)) + ex
        _acc_mono(acc, factors, c)
    return _from_acc(acc)
