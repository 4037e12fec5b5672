"""Closed-form sequences in the level index.

The decidable class used throughout the package is built from
*exponential polynomials* ``sum c * n**k * beta**n`` with rational ``c``
and positive rational ``beta``.  Ratios of two such objects (``RatExp``)
cover every parameter the family catalogue accepts.  A ``Seq`` glues
several ratios together periodically, and a ``Hyper`` is an anchored
product ``anchor * prod_{i=start}^{n-1} factor(i)``.

Everything here is exact; ``Fraction`` is the only number type.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd
from typing import Iterable, Union

import sympy

Number = Union[int, Fraction]

_N = sympy.Symbol("n", integer=True)
_M = sympy.Symbol("m", integer=True)


class UnsupportedExpression(ValueError):
    """The expression is outside the rational/exponential class."""


def _frac(x: Number) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class ExpPoly:
    """``sum coef * n**k * base**n`` keyed by ``(base, k)``."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[tuple[Fraction, int], Fraction] | None = None):
        clean: dict[tuple[Fraction, int], Fraction] = {}
        for key, c in (terms or {}).items():
            if c != 0:
                clean[key] = _frac(c)
        self.terms = clean

    @classmethod
    def const(cls, c: Number) -> "ExpPoly":
        return cls({(Fraction(1), 0): _frac(c)})

    @classmethod
    def var(cls) -> "ExpPoly":
        return cls({(Fraction(1), 1): Fraction(1)})

    @classmethod
    def exp(cls, base: Number, coef: Number = 1) -> "ExpPoly":
        base = _frac(base)
        if base <= 0:
            raise UnsupportedExpression(f"exponential base must be positive, got {base}")
        return cls({(base, 0): _frac(coef)})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ExpPoly) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, Fraction(0)) + c
        return ExpPoly(out)

    def __neg__(self) -> "ExpPoly":
        return ExpPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-other)

    def __mul__(self, other: "ExpPoly") -> "ExpPoly":
        out: dict[tuple[Fraction, int], Fraction] = {}
        for (b1, k1), c1 in self.terms.items():
            for (b2, k2), c2 in other.terms.items():
                key = (b1 * b2, k1 + k2)
                out[key] = out.get(key, Fraction(0)) + c1 * c2
        return ExpPoly(out)

    def scale(self, c: Number) -> "ExpPoly":
        return ExpPoly({k: v * c for k, v in self.terms.items()})

    def substitute(self, a: int, b: int) -> "ExpPoly":
        """Return the polynomial in ``m`` obtained from ``n = a*m + b``."""
        out: dict[tuple[Fraction, int], Fraction] = {}
        for (base, k), c in self.terms.items():
            new_base = base ** a
            lead = c * base ** b
            for j in range(k + 1):
                key = (new_base, j)
                out[key] = out.get(key, Fraction(0)) + lead * comb(k, j) * Fraction(a) ** j * Fraction(b) ** (k - j)
        return ExpPoly(out)

    def __call__(self, n: int) -> Fraction:
        total = Fraction(0)
        for (base, k), c in self.terms.items():
            total += c * Fraction(n) ** k * base ** n
        return total

    def leading(self) -> tuple[Fraction, int, Fraction] | None:
        """Dominant term ``(base, k, coef)`` as ``n -> infinity``."""
        if not self.terms:
            return None
        base, k = max(self.terms)
        return base, k, self.terms[(base, k)]

    def to_sympy(self, var: sympy.Symbol = _N) -> sympy.Expr:
        expr = sympy.Integer(0)
        for (base, k), c in sorted(self.terms.items()):
            expr += sympy.Rational(c.numerator, c.denominator) * var**k * sympy.Rational(base.numerator, base.denominator) ** var
        return expr


@dataclass(frozen=True)
class Asymptotic:
    """``coef * n**power * base**n`` up to a factor tending to one."""

    coef: Fraction
    power: int
    base: Fraction

    def regime(self) -> str:
        """Where the quantity goes: ``zero``, ``finite`` or ``infinite``."""
        if self.base < 1 or (self.base == 1 and self.power < 0):
            return "zero"
        if self.base > 1 or self.power > 0:
            return "infinite"
        return "finite"


class RatExp:
    """Quotient of two exponential polynomials."""

    __slots__ = ("num", "den")

    def __init__(self, num: ExpPoly, den: ExpPoly | None = None):
        den = den if den is not None else ExpPoly.const(1)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        self.num = num
        self.den = den

    @classmethod
    def const(cls, c: Number) -> "RatExp":
        return cls(ExpPoly.const(c))

    @classmethod
    def coerce(cls, x: "RatExp | Number") -> "RatExp":
        return x if isinstance(x, RatExp) else cls.const(x)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def same_as(self, other: "RatExp") -> bool:
        return (self.num * other.den - other.num * self.den).is_zero()

    def __add__(self, other: "RatExp | Number") -> "RatExp":
        other = RatExp.coerce(other)
        if self.den == other.den:
            return RatExp(self.num + other.num, self.den)
        return RatExp(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RatExp":
        return RatExp(-self.num, self.den)

    def __sub__(self, other: "RatExp | Number") -> "RatExp":
        return self + (-RatExp.coerce(other))

    def __rsub__(self, other: "RatExp | Number") -> "RatExp":
        return RatExp.coerce(other) - self

    def __mul__(self, other: "RatExp | Number") -> "RatExp":
        other = RatExp.coerce(other)
        return RatExp(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other: "RatExp | Number") -> "RatExp":
        other = RatExp.coerce(other)
        if other.num.is_zero():
            raise ZeroDivisionError("division by the zero sequence")
        return RatExp(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other: "RatExp | Number") -> "RatExp":
        return RatExp.coerce(other) / self

    def substitute(self, a: int, b: int) -> "RatExp":
        return RatExp(self.num.substitute(a, b), self.den.substitute(a, b))

    def __call__(self, n: int) -> Fraction:
        d = self.den(n)
        if d == 0:
            raise ZeroDivisionError(f"denominator vanishes at {n}")
        return self.num(n) / d

    def asymptotic(self) -> Asymptotic | None:
        """Leading behaviour, or ``None`` for the zero sequence."""
        top = self.num.leading()
        if top is None:
            return None
        bottom = self.den.leading()
        assert bottom is not None
        return Asymptotic(top[2] / bottom[2], top[1] - bottom[1], top[0] / bottom[0])

    def eventual_sign(self) -> int:
        a = self.asymptotic()
        if a is None:
            return 0
        return 1 if a.coef > 0 else -1

    def to_sympy(self, var: sympy.Symbol = _N) -> sympy.Expr:
        return self.num.to_sympy(var) / self.den.to_sympy(var)


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


class Seq:
    """Periodically glued ``RatExp`` branches.

    Level ``n`` is written ``n = period*m + j`` with ``0 <= j < period``;
    its value is ``branches[j](m)``.
    """

    __slots__ = ("period", "branches")

    def __init__(self, branches: Iterable[RatExp]):
        self.branches = tuple(branches)
        self.period = len(self.branches)
        if self.period == 0:
            raise ValueError("a sequence needs at least one branch")

    @classmethod
    def const(cls, c: Number) -> "Seq":
        return cls([RatExp.const(c)])

    @classmethod
    def of(cls, x: "Seq | RatExp | Number") -> "Seq":
        if isinstance(x, Seq):
            return x
        return cls([RatExp.coerce(x)])

    def __call__(self, n: int) -> Fraction:
        m, j = divmod(n, self.period)
        return self.branches[j](m)

    def align(self, period: int) -> "Seq":
        if period % self.period:
            raise ValueError("period must be a multiple of the current period")
        ratio = period // self.period
        out = []
        for j in range(period):
            q, r = divmod(j, self.period)
            out.append(self.branches[r].substitute(ratio, q))
        return Seq(out)

    def _pair(self, other: "Seq | RatExp | Number") -> tuple["Seq", "Seq"]:
        other = Seq.of(other)
        p = _lcm(self.period, other.period)
        a = self if self.period == p else self.align(p)
        b = other if other.period == p else other.align(p)
        return a, b

    def _zip(self, other, op) -> "Seq":
        a, b = self._pair(other)
        return Seq(op(x, y) for x, y in zip(a.branches, b.branches))

    def __add__(self, other):
        return self._zip(other, lambda x, y: x + y)

    __radd__ = __add__

    def __sub__(self, other):
        return self._zip(other, lambda x, y: x - y)

    def __rsub__(self, other):
        return Seq.of(other) - self

    def __mul__(self, other):
        return self._zip(other, lambda x, y: x * y)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._zip(other, lambda x, y: x / y)

    def __rtruediv__(self, other):
        return Seq.of(other) / self

    def __neg__(self) -> "Seq":
        return Seq(-b for b in self.branches)

    def shift(self, k: int) -> "Seq":
        """The sequence ``n -> self(n + k)``."""
        out = []
        for j in range(self.period):
            q, r = divmod(j + k, self.period)
            out.append(self.branches[r].substitute(1, q))
        return Seq(out)

    def same_as(self, other: "Seq") -> bool:
        a, b = self._pair(other)
        return all(x.same_as(y) for x, y in zip(a.branches, b.branches))

    def is_zero(self) -> bool:
        return all(b.is_zero() for b in self.branches)

    def eventual_signs(self) -> tuple[int, ...]:
        return tuple(b.eventual_sign() for b in self.branches)

    def eventual_abs(self) -> "Seq":
        return Seq(b if b.eventual_sign() >= 0 else -b for b in self.branches)

    def eventual_max(self, other: "Seq") -> "Seq":
        a, b = self._pair(other)
        return Seq(x if (x - y).eventual_sign() >= 0 else y for x, y in zip(a.branches, b.branches))

    def eventual_min(self, other: "Seq") -> "Seq":
        a, b = self._pair(other)
        return Seq(x if (x - y).eventual_sign() <= 0 else y for x, y in zip(a.branches, b.branches))

    def describe(self) -> list[str]:
        var = _N if self.period == 1 else _M
        return [str(sympy.simplify(b.to_sympy(var))) for b in self.branches]


@dataclass(frozen=True)
class Hyper:
    """``value(n) = anchor * prod_{i=start}^{n-1} factor(i)`` for ``n >= start``."""

    anchor: Fraction
    start: int
    factor: Seq

    def __call__(self, n: int) -> Fraction:
        if n < self.start:
            raise ValueError(f"closed form only valid from level {self.start}")
        value = self.anchor
        for i in range(self.start, n):
            value *= self.factor(i)
        return value

    def moved_to(self, start: int) -> "Hyper":
        if start == self.start:
            return self
        return Hyper(self(start), start, self.factor)

    def __mul__(self, other: "Hyper | Seq | Number") -> "Hyper":
        if isinstance(other, Hyper):
            s = max(self.start, other.start)
            a, b = self.moved_to(s), other.moved_to(s)
            return Hyper(a.anchor * b.anchor, s, a.factor * b.factor)
        if isinstance(other, Seq):
            return self * seq_as_hyper(other, self.start)
        return Hyper(self.anchor * _frac(other), self.start, self.factor)

    __rmul__ = __mul__

    def __truediv__(self, other: "Hyper | Seq") -> "Hyper":
        if isinstance(other, Seq):
            other = seq_as_hyper(other, self.start)
        s = max(self.start, other.start)
        a, b = self.moved_to(s), other.moved_to(s)
        return Hyper(a.anchor / b.anchor, s, a.factor / b.factor)


def seq_as_hyper(seq: Seq, start: int) -> Hyper:
    """Write a nowhere-vanishing sequence as an anchored product."""
    return Hyper(seq(start), start, seq.shift(1) / seq)


# ---------------------------------------------------------------- parsing

def _term_to_exppoly(term: sympy.Expr, var: sympy.Symbol) -> ExpPoly:
    coef = Fraction(1)
    k = 0
    base = Fraction(1)
    for factor in sympy.Mul.make_args(term):
        if factor.is_Rational:
            coef *= Fraction(int(factor.p), int(factor.q))
        elif factor == var:
            k += 1
        elif factor.is_Pow and factor.base == var and factor.exp.is_Integer and factor.exp >= 0:
            k += int(factor.exp)
        elif factor.is_Pow and factor.base.is_Rational and factor.base > 0:
            expo = sympy.Poly(factor.exp, var)
            if expo.degree() > 1:
                raise UnsupportedExpression(f"exponent {factor.exp} is not affine")
            a, b = (expo.all_coeffs() + [0])[:2] if expo.degree() == 1 else (0, expo.all_coeffs()[0])
            if not (sympy.Integer(a) == a and sympy.Integer(b) == b):
                raise UnsupportedExpression(f"exponent {factor.exp} needs integer coefficients")
            rb = Fraction(int(factor.base.p), int(factor.base.q))
            base *= rb ** int(a)
            coef *= rb ** int(b)
        else:
            raise UnsupportedExpression(f"unsupported factor {factor}")
    return ExpPoly({(base, k): coef})


def _to_exppoly(expr: sympy.Expr, var: sympy.Symbol) -> ExpPoly:
    expr = sympy.expand(sympy.powsimp(sympy.expand_power_exp(sympy.expand(expr)), combine="base"))
    expr = sympy.expand(sympy.expand_power_exp(expr))
    total = ExpPoly()
    for term in sympy.Add.make_args(expr):
        total = total + _term_to_exppoly(term, var)
    return total


def parse_ratexp(text: str | int, var: str = "n") -> RatExp:
    """Parse a restricted expression such as ``"n**2 + 1"`` or ``"2**n/2 + 1"``."""
    if isinstance(text, int):
        return RatExp.const(text)
    symbol = _N if var == "n" else _M
    try:
        expr = sympy.sympify(text, locals={var: symbol}, rational=True)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise UnsupportedExpression(f"cannot parse {text!r}: {exc}") from None
    if expr.free_symbols - {symbol}:
        raise UnsupportedExpression(f"unknown symbols in {text!r}")
    num, den = sympy.fraction(sympy.together(expr))
    return RatExp(_to_exppoly(num, symbol), _to_exppoly(den, symbol))
