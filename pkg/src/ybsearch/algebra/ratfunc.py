"""Rational functions as gcd-reduced ``(numerator, denominator)`` pairs."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from sympy.polys.domains import QQ
from sympy.polys.rings import ring

from ybsearch.algebra.poly import ONE, ZERO, Poly, mono_div


@lru_cache(maxsize=256)
def _ring_for(ids: tuple[int, ...]):
    return ring(",".join(f"x{i}" for i in ids) or "x", QQ)[0]


def _to_sympy(p: Poly, ids: tuple[int, ...], R):
    pos = {k: n for n, k in enumerate(ids)}
    width = max(len(ids), 1)
    d = {}
    for m, c in p.terms.items():
        v = [0] * width
        for k, e in m:
            v[pos[k]] = e
        d[tuple(v)] = QQ(c.numerator, c.denominator)
    return R.from_dict(d)


def _from_sympy(sp, ids: tuple[int, ...]) -> Poly:
    terms = {}
    for exps, c in sp.items():
        m = tuple((ids[n], e) for n, e in enumerate(exps) if e and n < len(ids))
        terms[m] = Fraction(int(c.numerator), int(c.denominator))
    return Poly(terms)


def poly_gcd(f: Poly, g: Poly) -> Poly:
    """Greatest common divisor, normalized to leading coefficient 1."""
    if f.is_zero():
        return g.monic() if g else ZERO
    if g.is_zero():
        return f.monic()
    if f.is_constant() or g.is_constant():
        return ONE
    ids = tuple(sorted(f.atoms() | g.atoms()))
    R = _ring_for(ids)
    h = _from_sympy(_to_sympy(f, ids, R).gcd(_to_sympy(g, ids, R)), ids)
    return h.monic()


def exact_div(f: Poly, g: Poly) -> Poly | None:
    """``f / g`` when g divides f exactly, otherwise None."""
    if g.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    if g.is_constant():
        return f / g.constant_value()
    lm, lc = g.leading_term()
    r = f
    q: dict = {}
    while r:
        m, c = r.leading_term()
        t = mono_div(m, lm)
        if t is None:
            return None
        coef = c / lc
        q[t] = coef
        r = r - g.mul_term(t, coef)
    return Poly(q)


class RatFunc:
    """Canonical rational function: gcd(num, den) = 1 and den monic."""

    __slots__ = ("num", "den", "_text")

    def __init__(self, num: Poly, den: Poly = ONE, *, reduced: bool = False):
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            num, den = ZERO, ONE
        elif not reduced:
            if den.is_constant():
                num, den = num / den.constant_value(), ONE
            else:
                g = poly_gcd(num, den)
                if not g.is_constant():
                    num = exact_div(num, g)
                    den = exact_div(den, g)
                lc = den.leading_coeff()
                if lc != 1:
                    num, den = num / lc, den / lc
                if den.is_constant():
                    num, den = num / den.constant_value(), ONE
        self.num = num
        self.den = den
        self._text = None

    @classmethod
    def of(cls, x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, Poly):
            return cls(x, ONE, reduced=True)
        return cls(Poly.const(x), ONE, reduced=True)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.is_constant()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def atoms(self) -> set[int]:
        return self.num.atoms() | self.den.atoms()

    def __add__(self, other) -> "RatFunc":
        o = RatFunc.of(other)
        if self.den == o.den:
            if self.den.is_constant():
                return RatFunc(self.num + o.num, ONE, reduced=True)
            return RatFunc(self.num + o.num, self.den)
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den, reduced=True)

    def __sub__(self, other) -> "RatFunc":
        return self + (-RatFunc.of(other))

    def __rsub__(self, other) -> "RatFunc":
        return RatFunc.of(other) - self

    def __mul__(self, other) -> "RatFunc":
        o = RatFunc.of(other)
        if self.den.is_constant() and o.den.is_constant():
            return RatFunc(self.num * o.num, ONE, reduced=True)
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RatFunc":
        o = RatFunc.of(other)
        if o.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return self * RatFunc(o.den, o.num)

    def __rtruediv__(self, other) -> "RatFunc":
        return RatFunc.of(other) / self

    def __pow__(self, n: int) -> "RatFunc":
        if n >= 0:
            return RatFunc(self.num ** n, self.den ** n, reduced=True)
        return RatFunc(self.den ** -n, self.num ** -n)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Poly)):
            other = RatFunc.of(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def subs(self, mapping) -> "RatFunc":
        return RatFunc(self.num.subs(mapping), self.den.subs(mapping))

    def to_text(self) -> str:
        if self._text is None:
            if self.den.is_constant():
                self._text = self.num.to_text()
            else:
                self._text = f"({self.num.to_text()})/({self.den.to_text()})"
        return self._text

    __str__ = to_text

    def __repr__(self) -> str:
        return f"RatFunc({self.to_text()!r})"
