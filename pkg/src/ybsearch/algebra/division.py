"""Multivariate division with remainder in degrevlex."""

from __future__ import annotations

from typing import Sequence

from ybsearch.algebra.poly import Poly, mono_div


def reduce_by_set(f: Poly, G: Sequence[Poly], with_cofactors: bool = False):
    """Normal form of ``f`` modulo ``G``.

    Returns the remainder ``r``; with ``with_cofactors`` also the list
    ``q`` such that ``f = sum(q[i]*G[i]) + r``.
    """
    if not G:
        raise ValueError("reduce_by_set needs a nonempty divisor list")
    leads = [g.leading_term() for g in G]
    cof: list[dict] = [{} for _ in G]
    rem: dict = {}
    p = f
    while p:
        m, c = p.leading_term()
        for i, (lm, lc) in enumerate(leads):
            t = mono_div(m, lm)
            if t is not None:
                q = c / lc
                p = p - G[i].mul_term(t, q)
                if with_cofactors:
                    cof[i][t] = cof[i].get(t, 0) + q
                break
        else:
            rem[m] = c
            p = p - Poly.monomial(m, c)
    r = Poly._raw(rem)
    if with_cofactors:
        return r, [Poly(d) for d in cof]
    return r
