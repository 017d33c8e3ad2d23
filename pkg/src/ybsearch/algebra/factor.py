"""Content removal and cheap product splitting.

No general factorization is attempted.  :func:`try_split_product` only
recognizes monomial factors, a polynomial common factor of the
coefficients with respect to one variable, and quadratics whose
discriminant is an exact square (also in a power ``x^d`` of one variable).
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

from ybsearch.algebra import atoms
from ybsearch.algebra.poly import ONE, Poly, mono_div, mono_key
from ybsearch.algebra.ratfunc import exact_div, poly_gcd


class ZeroInput(ValueError):
    pass


def content_primitive(f: Poly) -> tuple[Fraction, Poly, Poly]:
    """Return ``(c, m, g)`` with ``f = c*m*g``.

    ``m`` is the monomial gcd of the terms and ``g`` has coprime integer
    coefficients with positive leading coefficient.
    """
    if f.is_zero():
        raise ZeroInput("content of the zero polynomial")
    c = f.content()
    if f.leading_coeff() < 0:
        c = -c
    m = f.monomial_content()
    g = Poly._raw({mono_div(k, m): v / c for k, v in f.terms.items()})
    return c, Poly.monomial(m), g


def primitive(f: Poly) -> Poly:
    """Rational content stripped, leading coefficient positive."""
    if f.is_zero():
        return f
    c = f.content()
    if f.leading_coeff() < 0:
        c = -c
    return f if c == 1 else f / c


def _rational_sqrt(c: Fraction) -> Fraction | None:
    if c < 0:
        return None
    n, d = isqrt(c.numerator), isqrt(c.denominator)
    if n * n == c.numerator and d * d == c.denominator:
        return Fraction(n, d)
    return None


def poly_sqrt(p: Poly) -> Poly | None:
    """Exact square root with positive leading coefficient, or None."""
    if p.is_zero():
        return p
    lm, lc = p.leading_term()
    if any(e % 2 for _, e in lm):
        return None
    r = _rational_sqrt(lc)
    if r is None:
        return None
    s = Poly.monomial(tuple((k, e // 2) for k, e in lm), r)
    s_lm, s_lc = s.leading_term()
    for _ in range(len(p.terms) + 1):
        rem = p - s * s
        if rem.is_zero():
            return s
        m, c = rem.leading_term()
        q = mono_div(m, s_lm)
        if q is None or mono_key(q) >= mono_key(s_lm):
            return None
        s = s + Poly.monomial(q, c / (2 * s_lc))
    return None


def _split_monomial(f: Poly) -> list[Poly] | None:
    m = f.monomial_content()
    if not m:
        return None
    out = []
    for k, e in m:
        out.extend([Poly.var(k)] * e)
    rest = Poly._raw({mono_div(t, m): c for t, c in f.terms.items()})
    if not rest.is_constant():
        out.append(rest)
    return out


def _split_grouping(f: Poly) -> list[Poly] | None:
    for k in _vars_in_order(f):
        parts = f.coeffs_in(k)
        if len(parts) < 2:
            continue
        g = None
        for coeff in parts.values():
            g = coeff if g is None else poly_gcd(g, coeff)
            if g.is_constant():
                break
        if g is not None and not g.is_constant():
            h = exact_div(f, g)
            if h is not None and not h.is_constant():
                return [g, h]
    return None


def _split_quadratic(f: Poly) -> list[Poly] | None:
    for k in _vars_in_order(f):
        parts = f.coeffs_in(k)
        # quadratic in k^d when the exponents of k are 0, d and 2d
        top = max(parts)
        d = top // 2
        if top % 2 or d == 0 or any(e % d for e in parts):
            continue
        a = parts[2 * d]
        b = parts.get(d, Poly())
        c = parts.get(0, Poly())
        s = poly_sqrt(b * b - a * c * 4)
        if s is None:
            continue
        x = Poly.var(k, d)
        f1 = a * x * 2 + b - s
        f2 = a * x * 2 + b + s
        if a.is_constant():
            return [f1, f2]
        # 4*a*f = f1*f2; move the factor 4a out of the two linear factors
        g = poly_gcd(f1, a)
        h = exact_div(a, g)
        f1r = exact_div(f1, g)
        f2r = exact_div(f2, h) if h is not None else None
        if f1r is not None and f2r is not None:
            return [f1r, f2r]
    return None


def _vars_in_order(f: Poly) -> list[int]:
    return sorted(f.atoms(), key=atoms.order_key)


def try_split_product(f: Poly) -> list[Poly]:
    """Split ``f`` into factors; the product equals ``f`` up to a constant.

    Factors are returned primitive.  Monomial content is tried first,
    then grouping, then a quadratic in one variable; each piece is split
    again recursively.
    """
    if f.is_zero():
        raise ZeroInput("cannot split the zero polynomial")
    work = [primitive(f)]
    done: list[Poly] = []
    while work:
        g = work.pop(0)
        if g.is_constant():
            continue
        pieces = _split_monomial(g) or _split_grouping(g) or _split_quadratic(g)
        if pieces is None or len(pieces) < 2:
            done.append(g)
            continue
        pieces = [primitive(p) for p in pieces]
        if len(pieces) == 1 or all(p == g for p in pieces):
            done.append(g)
            continue
        # monomial pieces are already irreducible
        for p in pieces:
            if len(p) == 1 and p.total_degree() == 1:
                done.append(p)
            else:
                work.append(p)
    return done or [ONE]


def distinct_factors(f: Poly) -> list[Poly]:
    """Factors of :func:`try_split_product` without repetitions, in order."""
    out: list[Poly] = []
    for p in try_split_product(f):
        if p not in out:
            out.append(p)
    return out
