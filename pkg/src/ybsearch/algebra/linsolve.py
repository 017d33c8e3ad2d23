"""Fraction-free elimination for equations linear in designated unknowns.

Every pivot is a polynomial in the remaining (parameter) atoms.  When it
is not known to be nonzero, a complementary branch with ``pivot = 0`` is
emitted as well, up to a cap on the number of such splits along a path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ybsearch.algebra import atoms
from ybsearch.algebra.factor import distinct_factors, primitive
from ybsearch.algebra.poly import Poly
from ybsearch.algebra.ratfunc import RatFunc, exact_div, poly_gcd


class InconsistentSystem(ValueError):
    pass


class NonlinearSystem(ValueError):
    pass


@dataclass
class Branch:
    """One case of a solved linear system.

    ``assignment`` maps unknown atoms to ``RatFunc`` values.
    ``side_conditions`` must be nonzero, ``relations`` must vanish.
    """

    assignment: dict = field(default_factory=dict)
    side_conditions: list = field(default_factory=list)
    relations: list = field(default_factory=list)
    inconsistent: bool = False

    def value(self, atom_id: int) -> RatFunc:
        return self.assignment[atom_id]


def is_known_nonzero(p: Poly, nonzero: Sequence[Poly]) -> bool:
    """True when ``p`` is a constant times a product of known nonzero factors."""
    if p.is_zero():
        return False
    if p.is_constant():
        return True
    rest = primitive(p)
    changed = True
    while changed and not rest.is_constant():
        changed = False
        for q in nonzero:
            if q.is_constant():
                continue
            d = exact_div(rest, q)
            if d is not None:
                rest = primitive(d)
                changed = True
                break
    return rest.is_constant()


def _linear_parts(e: Poly, unknowns: set[int]) -> dict[int, Poly]:
    """Map unknown -> coefficient, with key -1 for the unknown-free part."""
    out: dict[int, dict] = {}
    for m, c in e.terms.items():
        hit = [k for k, _ in m if k in unknowns]
        if not hit:
            key = -1
        else:
            if len(hit) > 1 or dict(m)[hit[0]] > 1:
                raise NonlinearSystem(f"not linear in the unknowns: {e}")
            key = hit[0]
        rest = tuple(p for p in m if p[0] != key)
        out.setdefault(key, {})[rest] = c
    return {k: Poly._raw(v) for k, v in out.items()}


def _pivot_rank(coef: Poly, nonzero) -> tuple:
    if coef.is_constant():
        return (0, 0, "")
    if is_known_nonzero(coef, nonzero):
        return (1, len(coef), coef.to_text())
    return (2, len(coef), coef.to_text())


def _reduce_common(e: Poly, pivot: Poly, nonzero) -> Poly:
    """Divide out a factor shared with a nonzero pivot (Bareiss step)."""
    if e.is_zero() or pivot.is_constant():
        return primitive(e)
    g = poly_gcd(e, pivot)
    if not g.is_constant():
        d = exact_div(e, g)
        if d is not None:
            e = d
    return primitive(e)


def solve_linear(
    eqs: Iterable[Poly],
    unknowns: Iterable[int],
    nonzero: Sequence[Poly] = (),
    branch_depth: int = 6,
) -> list[Branch]:
    """Solve a system that is linear in ``unknowns``.

    Returns every branch, inconsistent ones flagged rather than raised.
    Values are rational functions; denominators appear among the branch
    side conditions.
    """
    unk = set(unknowns)
    order = sorted(unk, key=atoms.order_key)
    rank = {k: i for i, k in enumerate(order)}
    start = [primitive(e) for e in eqs if not e.is_zero()]
    for e in start:
        _linear_parts(e, unk)
    out: list[Branch] = []
    stack = [(start, {}, list(nonzero), [], 0, len(list(nonzero)))]
    while stack:
        pending, assign, side, rels, depth, n_given = stack.pop()
        pending = list(pending)
        while pending:
            e = pending.pop(0)
            if e.is_zero():
                continue
            parts = _linear_parts(e, unk)
            cands = [k for k in parts if k != -1]
            if not cands:
                if e.is_constant() or is_known_nonzero(e, side):
                    out.append(Branch(_finish(assign), side[n_given:], rels, True))
                    break
                rels.append(e)
                continue
            x = min(cands, key=lambda k: (_pivot_rank(parts[k], side), rank[k]))
            a = parts[x]
            b = e - a * Poly.var(x)
            if _pivot_rank(a, side)[0] == 2 and depth < branch_depth:
                # complementary case: pivot vanishes, equation reduces to b
                for fct in reversed(distinct_factors(a)):
                    if is_known_nonzero(fct, side):
                        continue
                    stack.append(([b] + pending, dict(assign), list(side), rels + [fct], depth + 1, n_given))
            if not a.is_constant():
                for f in distinct_factors(a):
                    if not is_known_nonzero(f, side):
                        side.append(f)
            num, den = -b, a
            # back-substitute into earlier values, forward into pending
            for k, v in list(assign.items()):
                if v.num.has_any({x}) or v.den.has_any({x}):
                    n1, d1 = v.num.subs_frac({x: (num, den)})
                    n2, d2 = v.den.subs_frac({x: (num, den)})
                    assign[k] = RatFunc(n1 * d2, n2 * d1)
            new_pending = []
            for p in pending:
                if p.has_any({x}):
                    pn, _ = p.subs_frac({x: (num, den)})
                    p = _reduce_common(pn, a, side)
                if not p.is_zero():
                    new_pending.append(p)
            pending = new_pending
            assign[x] = RatFunc(num, den)
        else:
            out.append(Branch(_finish(assign), side[n_given:], rels, False))
    out.sort(key=lambda br: (br.inconsistent, len(br.relations)))
    return out


def _finish(assign: dict) -> dict:
    return dict(sorted(assign.items(), key=lambda kv: atoms.order_key(kv[0])))


def check_branch(eqs: Iterable[Poly], br: Branch) -> bool:
    """Substitute the branch and test that each equation vanishes modulo
    the branch relations (exactly, when relations are empty)."""
    frac = {k: (v.num, v.den) for k, v in br.assignment.items()}
    for e in eqs:
        n, _ = e.subs_frac(frac)
        if not n.is_zero() and not br.relations:
            return False
    return True

