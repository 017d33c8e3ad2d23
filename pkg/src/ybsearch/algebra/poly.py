"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is a tuple of ``(atom_id, exponent)`` pairs sorted by atom id;
the empty tuple is the unit monomial.  Terms are compared in graded
reverse lexicographic order over the intrinsic atom order of
:mod:`ybsearch.algebra.atoms`.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Mapping

from ybsearch.algebra import atoms


Q = Fraction
Mono = tuple  # tuple[tuple[int, int], ...]

ONE_MONO: Mono = ()


def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for k, e in b:
        d[k] = d.get(k, 0) + e
    return tuple(sorted(d.items()))


def mono_div(a: Mono, b: Mono) -> Mono | None:
    """``a / b`` if ``b`` divides ``a``, else None."""
    if not b:
        return a
    d = dict(a)
    for k, e in b:
        have = d.get(k, 0)
        if have < e:
            return None
        if have == e:
            del d[k]
        else:
            d[k] = have - e
    return tuple(sorted(d.items()))


def mono_divides(b: Mono, a: Mono) -> bool:
    d = dict(a)
    return all(d.get(k, 0) >= e for k, e in b)


def mono_lcm(a: Mono, b: Mono) -> Mono:
    d = dict(a)
    for k, e in b:
        if e > d.get(k, 0):
            d[k] = e
    return tuple(sorted(d.items()))


def mono_gcd(a: Mono, b: Mono) -> Mono:
    db = dict(b)
    return tuple((k, min(e, db[k])) for k, e in a if k in db)


def mono_degree(m: Mono) -> int:
    return sum(e for _, e in m)


def mono_coprime(a: Mono, b: Mono) -> bool:
    db = dict(b)
    return not any(k in db for k, _ in a)


class _Rev:
    """Wraps an order key with reversed comparisons."""

    __slots__ = ("k",)

    def __init__(self, k):
        self.k = k

    def __lt__(self, other):
        return other.k < self.k

    def __gt__(self, other):
        return other.k > self.k

    def __eq__(self, other):
        return self.k == other.k

    def __le__(self, other):
        return other.k <= self.k

    def __ge__(self, other):
        return other.k >= self.k

    def __hash__(self):
        return hash(self.k)


_KEY_CACHE: dict = {}


def mono_key(m: Mono):
    """Sort key: larger key means larger monomial in degrevlex."""
    k = _KEY_CACHE.get(m)
    if k is None:
        pairs = sorted(((atoms.order_key(i), e) for i, e in m), reverse=True)
        k = (mono_degree(m), tuple((_Rev(ok), -e) for ok, e in pairs))
        if len(_KEY_CACHE) > 500_000:
            _KEY_CACHE.clear()
        _KEY_CACHE[m] = k
    return k


def _q(c) -> Fraction:
    return c if type(c) is Fraction else Fraction(c)


class Poly:
    """Immutable sparse polynomial.  ``terms`` maps monomial -> Fraction."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping | None = None):
        if terms:
            self.terms = {m: _q(c) for m, c in terms.items() if c != 0}
        else:
            self.terms = {}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p.terms = terms
        p._hash = None
        return p

    # -- construction -------------------------------------------------
    @classmethod
    def const(cls, c) -> "Poly":
        return cls._raw({ONE_MONO: _q(c)} if c != 0 else {})

    @classmethod
    def var(cls, atom_id: int, exp: int = 1) -> "Poly":
        return cls._raw({((atom_id, exp),): Fraction(1)} if exp else {ONE_MONO: Fraction(1)})

    @classmethod
    def monomial(cls, m: Mono, c=1) -> "Poly":
        return cls._raw({m: _q(c)} if c != 0 else {})

    # -- predicates ---------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and ONE_MONO in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get(ONE_MONO, Fraction(0))

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __len__(self) -> int:
        return len(self.terms)

    def atoms(self) -> set[int]:
        out: set[int] = set()
        for m in self.terms:
            for k, _ in m:
                out.add(k)
        return out

    def has_any(self, ids) -> bool:
        for m in self.terms:
            for k, _ in m:
                if k in ids:
                    return True
        return False

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.const(other)
        if len(self.terms) < len(other.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        out = dict(a)
        for m, c in b.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s += c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.const(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = -c
            else:
                s -= c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly._raw(out)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            c = _q(other)
            if not c:
                return Poly()
            return Poly._raw({m: v * c for m, v in self.terms.items()})
        if not self.terms or not other.terms:
            return Poly()
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                s = out.get(m)
                if s is None:
                    out[m] = c1 * c2
                else:
                    out[m] = s + c1 * c2
        return Poly._raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mul_term(self, m: Mono, c) -> "Poly":
        c = _q(c)
        if not c:
            return Poly()
        return Poly._raw({mono_mul(m0, m): v * c for m0, v in self.terms.items()})

    def __truediv__(self, c) -> "Poly":
        c = _q(c)
        return Poly._raw({m: v / c for m, v in self.terms.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            if isinstance(other, (int, Fraction)):
                return self.is_constant() and self.constant_value() == other
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- order ----------------------------------------------------------
    def sorted_terms(self) -> list[tuple[Mono, Fraction]]:
        """Terms in decreasing monomial order."""
        return sorted(self.terms.items(), key=lambda t: mono_key(t[0]), reverse=True)

    def leading_term(self) -> tuple[Mono, Fraction]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        m = max(self.terms, key=mono_key)
        return m, self.terms[m]

    def leading_mono(self) -> Mono:
        return self.leading_term()[0]

    def leading_coeff(self) -> Fraction:
        return self.leading_term()[1]

    def monic(self) -> "Poly":
        return self / self.leading_coeff()

    # -- degrees and coefficients ----------------------------------------
    def total_degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def degree_in(self, ids) -> int:
        """Maximal total degree in the atoms ``ids`` (an int or a set)."""
        if isinstance(ids, int):
            ids = (ids,)
        ids = set(ids)
        return max((sum(e for k, e in m if k in ids) for m in self.terms), default=0)

    def split(self, ids) -> dict[Mono, "Poly"]:
        """Write self as sum over monomials ``mu`` in ``ids`` of ``mu * coeff``."""
        ids = set(ids)
        out: dict[Mono, dict] = {}
        for m, c in self.terms.items():
            inner = tuple(p for p in m if p[0] in ids)
            outer = tuple(p for p in m if p[0] not in ids)
            out.setdefault(inner, {})[outer] = c
        return {k: Poly._raw(v) for k, v in out.items()}

    def coeffs_in(self, atom_id: int) -> dict[int, "Poly"]:
        """Univariate view: exponent of ``atom_id`` -> coefficient polynomial."""
        out: dict[int, dict] = {}
        for m, c in self.terms.items():
            e = 0
            rest = []
            for k, x in m:
                if k == atom_id:
                    e = x
                else:
                    rest.append((k, x))
            out.setdefault(e, {})[tuple(rest)] = c
        return {k: Poly._raw(v) for k, v in out.items()}

    def diff(self, atom_id: int) -> "Poly":
        out: dict = {}
        for m, c in self.terms.items():
            for idx, (k, e) in enumerate(m):
                if k == atom_id:
                    nm = m[:idx] + (((k, e - 1),) if e > 1 else ()) + m[idx + 1:]
                    out[nm] = out.get(nm, 0) + c * e
                    break
        return Poly._raw({m: c for m, c in out.items() if c})

    # -- substitution ---------------------------------------------------
    def subs(self, mapping: Mapping[int, "Poly"]) -> "Poly":
        """Replace atoms by polynomials."""
        if not mapping or not self.has_any(mapping):
            return self
        powers: dict = {}
        acc: dict = {}
        for m, c in self.terms.items():
            rest = []
            factor = None
            for k, e in m:
                if k in mapping:
                    pw = powers.get((k, e))
                    if pw is None:
                        pw = mapping[k] ** e
                        powers[(k, e)] = pw
                    factor = pw if factor is None else factor * pw
                else:
                    rest.append((k, e))
            rest = tuple(rest)
            if factor is None:
                acc[rest] = acc.get(rest, 0) + c
                continue
            for fm, fc in factor.terms.items():
                nm = mono_mul(fm, rest)
                acc[nm] = acc.get(nm, 0) + fc * c
        return Poly._raw({m: c for m, c in acc.items() if c})

    def subs_frac(self, mapping: Mapping[int, tuple["Poly", "Poly"]]) -> tuple["Poly", "Poly"]:
        """Substitute ``atom -> num/den``; returns ``(P, D)`` with self = P/D.

        ``D`` is the product of ``den_a ** deg_a(self)``; no gcd is taken.
        """
        used = {k: v for k, v in mapping.items() if self.has_any((k,))}
        if not used:
            return self, Poly.const(1)
        degs = {k: self.degree_in(k) for k in used}
        cache: dict = {}

        def piece(k, e):
            key = (k, e)
            r = cache.get(key)
            if r is None:
                num, den = used[k]
                r = (num ** e) * (den ** (degs[k] - e))
                cache[key] = r
            return r

        acc = Poly()
        for m, c in self.terms.items():
            rest = []
            factor = Poly.const(c)
            seen = set()
            for k, e in m:
                if k in used:
                    factor = factor * piece(k, e)
                    seen.add(k)
                else:
                    rest.append((k, e))
            for k in used:
                if k not in seen:
                    factor = factor * piece(k, 0)
            acc = acc + factor.mul_term(tuple(rest), 1)
        den = Poly.const(1)
        for k in used:
            den = den * (used[k][1] ** degs[k])
        return acc, den

    def eval(self, values: Mapping[int, object]):
        """Evaluate with every atom assigned a number."""
        total = 0
        for m, c in self.terms.items():
            t = c
            for k, e in m:
                t = t * values[k] ** e
            total = total + t
        return total

    # -- content ----------------------------------------------------
    def content(self) -> Fraction:
        """Positive rational gcd of the coefficients (0 for the zero poly)."""
        if not self.terms:
            return Fraction(0)
        nums = [abs(c.numerator) for c in self.terms.values()]
        dens = [c.denominator for c in self.terms.values()]
        return Fraction(reduce(gcd, nums), reduce(lcm, dens))

    def monomial_content(self) -> Mono:
        it = iter(self.terms)
        g = next(it)
        for m in it:
            g = mono_gcd(g, m)
            if not g:
                break
        return g

    # -- text -------------------------------------------------------
    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            neg = c < 0
            a = -c if neg else c
            body = mono_text(m)
            if body == "":
                s = _coef_text(a)
            elif a == 1:
                s = body
            else:
                s = f"{_coef_text(a)}*{body}"
            if i == 0:
                parts.append(("-" if neg else "") + s)
            else:
                parts.append((" - " if neg else " + ") + s)
        return "".join(parts)

    __str__ = to_text

    def __repr__(self) -> str:
        return f"Poly({self.to_text()!r})"


def _coef_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def mono_text(m: Mono) -> str:
    pairs = sorted(m, key=lambda p: atoms.order_key(p[0]))
    out = []
    for k, e in pairs:
        t = atoms.atom_of(k).text()
        out.append(t if e == 1 else f"{t}^{e}")
    return "*".join(out)


def poly_sum(items: Iterable[Poly]) -> Poly:
    acc: dict = {}
    for p in items:
        for m, c in p.terms.items():
            acc[m] = acc.get(m, 0) + c
    return Poly._raw({m: c for m, c in acc.items() if c})


ZERO = Poly()
ONE = Poly.const(1)
