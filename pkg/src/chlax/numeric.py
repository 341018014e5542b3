"""Randomized numeric evaluation used to cross-check symbolic zeros.

Plain atoms (variables, parameters, jet variables, logarithm atoms that
survive canonicalization) receive independent random positive rationals.
Exponential atoms are valued through a multiplicative unit per distinct
argument monomial, which makes the valuation an exact homomorphism:
``exp(a)*exp(b)`` and ``exp(a+b)`` always agree.  A unit whose monomial is
a pure logarithm ``log(u)`` is forced to ``value(u)`` so the extraction
rule ``exp(k*log(u)) == u**k`` is respected; fractional powers of it fall
back to floating point, and expressions touched by such a unit are tested
against a small tolerance instead of exact zero.

Square-relation symbols are handled by *solving* the relation during
sampling (the caller lists constraint atoms with their defining
expressions), and the imaginary unit gets an exact Gaussian-rational
value, so all polynomial identities evaluate exactly.

The inexact fallback runs in extended-precision binary floating point
(``gmpy2.mpfr``): sampled magnitudes can reach 1e10 and beyond, and the
oracle compares against an absolute tolerance, so double precision would
not leave enough headroom between rounding error and a genuine miss.
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import gmpy2

from .expr import (
    Expr,
    ExpAtom,
    IndepVar,
    JetVar,
    LogAtom,
    Parameter,
    Q,
    _rat_root,
    atoms_of,
)

__all__ = ["GaussQ", "OracleError", "Sample", "ZeroCert", "ZeroOracle", "numeric_eval"]


class OracleError(RuntimeError):
    pass


class DomainError(ArithmeticError):
    """A sample point left the domain of a fractional power or logarithm.

    Raised during evaluation when a value-dependent domain condition fails
    (e.g. a negative base under a half-integer exponent).  ``ZeroOracle.draw``
    treats it like a division by zero and redraws the point; structural
    problems keep raising ``OracleError`` so they surface immediately.
    """


_PRECISION_BITS = 240


def _extended_precision(fn):
    """Run an oracle entry point under the extended mpfr context."""

    @functools.wraps(fn)
    def inner(*args, **kwargs):
        with gmpy2.context(precision=_PRECISION_BITS):
            return fn(*args, **kwargs)

    return inner


@dataclass(frozen=True)
class ZeroCert:
    """A zero assertion packaged for numeric cross-checking.

    ``expr`` must vanish at every sample point drawn under ``constraints``
    (see ``ZeroOracle.draw`` for the constraint forms).  Certificates are
    collected by the verification stages and replayed by the oracle pass.
    """

    expr: Expr
    constraints: tuple = ()
    label: str = ""


class GaussQ:
    """Exact Gaussian rational a + b*i."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = Q(re)
        self.im = Q(im)

    def _coerce(self, other):
        if isinstance(other, GaussQ):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussQ(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussQ(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return GaussQ((self.re * o.re + self.im * o.im) / n, (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("GaussQ powers must be integers")
        if k < 0:
            return GaussQ(1) / self.__pow__(-k)
        out = GaussQ(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            base = base * base
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __abs__(self):
        return (float(self.re) ** 2 + float(self.im) ** 2) ** 0.5

    def __repr__(self):
        return f"GaussQ({self.re}, {self.im})"


Value = Union[Fraction, float, GaussQ]


def _vpow(v: Value, e: Q) -> Value:
    """v ** e for exact/float values with exact fast paths."""
    if isinstance(v, GaussQ):
        if e.denominator != 1:
            raise OracleError("fractional power of a Gaussian rational sample")
        return v ** int(e)
    if isinstance(v, Fraction):
        if e.denominator == 1:
            if v == 0 and e < 0:
                raise ZeroDivisionError
            return v ** int(e)
        r = _rat_root(v, e)
        if r is not None:
            return r
        if v < 0:
            raise DomainError("fractional power of a negative sample value")
        return gmpy2.mpfr(gmpy2.mpq(v)) ** gmpy2.mpfr(gmpy2.mpq(e))
    if v < 0 and e.denominator != 1:
        raise DomainError("fractional power of a negative sample value")
    if v == 0 and e < 0:
        raise ZeroDivisionError
    return gmpy2.mpfr(v) ** gmpy2.mpfr(gmpy2.mpq(e))


class Sample:
    """One point: values for plain atoms plus exponential-unit values.

    Carries a memo for evaluated sub-expressions; atom values are only
    ever added (never changed) while a sample is alive, so memoized
    values stay valid for the sample's whole lifetime.
    """

    def __init__(self, values: dict, exp_units: dict):
        self.values = values
        self.exp_units = exp_units
        self.memo: dict = {}

    def __getitem__(self, atom):
        return self.values[atom]


def _eval_exp_atom(a: ExpAtom, sample: Sample) -> Value:
    out: Value = Q(1)
    for mono, c in a.arg.terms:
        if len(mono) == 1 and isinstance(mono[0][0], LogAtom) and mono[0][1] == 1:
            u = _eval(mono[0][0].arg, sample)
            if isinstance(u, GaussQ):
                raise OracleError("logarithm of a non-real sample value")
            out = out * _vpow(u, c)
            continue
        unit = sample.exp_units.get(mono)
        if unit is None:
            raise OracleError(f"no exponential unit sampled for monomial {mono!r}")
        out = out * _vpow(unit, c)
    return out


_MISS = object()


def _eval(e: Expr, sample: Sample) -> Value:
    memo = sample.memo
    hit = memo.get(e, _MISS)
    if hit is not _MISS:
        return hit
    total: Value = Q(0)
    for mono, c in e.terms:
        v: Value = c
        for b, ex in mono:
            if isinstance(b, (Expr, ExpAtom)):
                bv = memo.get(b, _MISS)
                if bv is _MISS:
                    bv = _eval(b, sample) if isinstance(b, Expr) else _eval_exp_atom(b, sample)
                    memo[b] = bv
            else:
                bv = sample.values.get(b)
                if bv is None:
                    raise OracleError(f"no sample value for atom {b!r}")
            if isinstance(bv, Fraction) and bv == 0 and ex < 0:
                raise ZeroDivisionError
            v = v * _vpow(bv, ex)
        total = total + v
    memo[e] = total
    return total


@_extended_precision
def numeric_eval(e: Expr, sample: Sample) -> Value:
    """Evaluate at a sample point.  Exact when no float was needed."""
    return _eval(e, sample)


def _exp_monomials(exprs: Iterable[Expr]):
    """Distinct exponential-argument monomials that need free units."""
    monos = set()
    forced_logs = []
    seen_atoms = set()

    def walk_expr(x: Expr):
        for mono, _c in x.terms:
            for b, _e in mono:
                if isinstance(b, Expr):
                    walk_expr(b)
                elif isinstance(b, ExpAtom):
                    if b not in seen_atoms:
                        seen_atoms.add(b)
                        walk_arg(b.arg)
                elif isinstance(b, LogAtom):
                    walk_expr(b.arg)

    def walk_arg(arg: Expr):
        for mono, _c in arg.terms:
            if len(mono) == 1 and isinstance(mono[0][0], LogAtom) and mono[0][1] == 1:
                forced_logs.append(mono[0][0])
                walk_expr(mono[0][0].arg)
            else:
                monos.add(mono)
                for b, _e in mono:
                    if isinstance(b, LogAtom):
                        walk_expr(b.arg)
                    elif isinstance(b, ExpAtom):
                        walk_arg(b.arg)
                    elif isinstance(b, Expr):
                        walk_expr(b)

    for e in exprs:
        walk_expr(e)
    return monos, forced_logs


# sortable deterministic key for exp-unit monomials
def _mono_sort_key(mono):
    from .expr import _base_key

    return tuple((_base_key(b), e) for b, e in mono)


class ZeroOracle:
    """Randomized check that expressions vanish (or do not).

    ``constraints`` is an ordered list of (atom, definition) pairs; the
    definition is an Expr evaluated on the partially built sample (so it
    may reference previously drawn or previously constrained atoms), a
    ready value such as ``GaussQ(0, 1)`` for the imaginary unit, or a
    callable mapping the partial value dict to a value (needed when the
    defining expression would canonicalize away, e.g. solving a square
    relation for one of its own factors).
    """

    def __init__(self, seed: int = 0, samples: int = 100, tol: float = 1e-9):
        self.seed = seed
        self.samples = samples
        self.tol = tol

    def _draw_fraction(self, rng: random.Random) -> Fraction:
        return Fraction(rng.randint(1, 32), rng.randint(1, 32))

    @_extended_precision
    def draw(self, exprs: Sequence[Expr], constraints=(), attempts: int = 80,
             rng: Optional[random.Random] = None) -> Sample:
        if rng is None:
            rng = random.Random(self.seed)
        constrained = {a for a, _d in constraints}
        needed = set()
        for e in exprs:
            for a in atoms_of(e):
                if isinstance(a, (IndepVar, Parameter, JetVar, LogAtom)):
                    needed.add(a)
        for _a, d in constraints:
            if isinstance(d, Expr):
                for a in atoms_of(d):
                    if isinstance(a, (IndepVar, Parameter, JetVar, LogAtom)):
                        needed.add(a)
        plain = needed - constrained
        order = sorted(plain, key=lambda a: a.sort_key())
        monos, _logs = _exp_monomials(
            [e for e in exprs] + [d for _a, d in constraints if isinstance(d, Expr)]
        )
        mono_order = sorted(monos, key=_mono_sort_key)
        last_err: Optional[Exception] = None
        for _try in range(attempts):
            values = {a: self._draw_fraction(rng) for a in order}
            units = {m: self._draw_fraction(rng) for m in mono_order}
            sample = Sample(values, units)
            try:
                for a, d in constraints:
                    if a not in needed:
                        continue
                    if isinstance(d, Expr):
                        values[a] = _eval(d, sample)
                    elif callable(d):
                        values[a] = d(values)
                    else:
                        values[a] = d
                # force a consistency pass: all expressions must evaluate
                for e in exprs:
                    _eval(e, sample)
            except (ZeroDivisionError, DomainError) as err:
                last_err = err
                continue
            return sample
        raise OracleError(f"could not draw a valid sample after {attempts} tries: {last_err}")

    @_extended_precision
    def check_zero(self, exprs: Sequence[Expr], constraints=()) -> None:
        """Raise OracleError unless every expression vanishes at random
        points (exactly on the rational path, within tol on the float path).
        """
        rng = random.Random(self.seed)
        for k in range(self.samples):
            sample = self.draw(exprs, constraints, rng=rng)
            for e in exprs:
                v = _eval(e, sample)
                if isinstance(v, (Fraction, GaussQ)):
                    if v != 0:
                        raise OracleError(
                            f"sample {k}: exact evaluation is {v!r}, expected 0"
                        )
                elif abs(v) > self.tol:
                    raise OracleError(
                        f"sample {k}: float evaluation is {v!r}, expected ~0"
                    )

    @_extended_precision
    def check_cert(self, cert: ZeroCert) -> None:
        self.check_zero([cert.expr], cert.constraints)

    @_extended_precision
    def check_nonzero(self, e: Expr, constraints=()) -> bool:
        """True if the expression is detectably nonzero at some point."""
        rng = random.Random(self.seed)
        for _k in range(min(self.samples, 12)):
            try:
                sample = self.draw([e], constraints, rng=rng)
                v = _eval(e, sample)
            except (OracleError, ZeroDivisionError):
                continue
            if isinstance(v, (Fraction, GaussQ)):
                if v != 0:
                    return True
            elif abs(v) > self.tol:
                return True
        return False

    @_extended_precision
    def check_nonvanishing(self, e: Expr, constraints=()) -> None:
        """Raise OracleError if the expression vanishes at any sample.

        This is the guard for quantities that must stay invertible on the
        whole sample domain (prefactors, cofactors), not just generically.
        """
        rng = random.Random(self.seed)
        for k in range(self.samples):
            sample = self.draw([e], constraints, rng=rng)
            v = _eval(e, sample)
            if isinstance(v, (Fraction, GaussQ)):
                if v == 0:
                    raise OracleError(f"sample {k}: evaluation is exactly 0")
            elif abs(v) <= self.tol:
                raise OracleError(f"sample {k}: |{v!r}| is below tolerance")
