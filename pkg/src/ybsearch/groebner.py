"""Buchberger's algorithm in degrevlex with deterministic step budgets."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from ybsearch.algebra import atoms
from ybsearch.algebra.factor import distinct_factors, primitive, try_split_product
from ybsearch.algebra.linsolve import Branch, solve_linear
from ybsearch.algebra.poly import (
    ONE,
    ZERO,
    Poly,
    mono_coprime,
    mono_div,
    mono_divides,
    mono_key,
    mono_lcm,
)
from ybsearch.algebra.ratfunc import RatFunc


class Status(str, Enum):
    COMPLETE = "Complete"
    BUDGET_EXCEEDED = "BudgetExceeded"


@dataclass(frozen=True)
class GroebnerConfig:
    pair_budget: int = 20000
    degree_cap: int = 12
    reduce_budget: int = 2_000_000  # total reduction steps per call

    def __post_init__(self):
        if self.pair_budget <= 0 or self.degree_cap <= 0 or self.reduce_budget <= 0:
            raise ValueError("budgets must be positive")


@dataclass
class Basis:
    generators: list
    status: Status = Status.COMPLETE
    cofactors: list | None = None  # cofactors[i][j]: generator i in terms of input j
    pairs_processed: int = 0

    @property
    def complete(self) -> bool:
        return self.status == Status.COMPLETE

    def to_text(self) -> str:
        return "\n".join([self.status.value] + [g.to_text() for g in self.generators])


class _Red:
    """Mutable polynomial used inside reduction loops."""

    __slots__ = ("terms", "heap")

    def __init__(self, p: Poly):
        self.terms = dict(p.terms)
        self.heap = [(_neg_key(m), m) for m in self.terms]
        heapq.heapify(self.heap)

    def lead(self):
        while self.heap:
            _, m = self.heap[0]
            c = self.terms.get(m)
            if c:
                return m, c
            heapq.heappop(self.heap)
        return None

    def add_scaled(self, g: Poly, t, c: Fraction) -> None:
        for m, v in g.terms.items():
            nm = _mul(m, t)
            old = self.terms.get(nm)
            if old is None:
                self.terms[nm] = v * c
                heapq.heappush(self.heap, (_neg_key(nm), nm))
            else:
                s = old + v * c
                if s:
                    self.terms[nm] = s
                else:
                    del self.terms[nm]

    def pop_lead(self):
        m, c = self.lead()
        heapq.heappop(self.heap)
        del self.terms[m]
        return m, c


class _NegKey:
    __slots__ = ("k",)

    def __init__(self, k):
        self.k = k

    def __lt__(self, other):
        return self.k > other.k

    def __eq__(self, other):
        return self.k == other.k


def _neg_key(m):
    return _NegKey(mono_key(m))


def _mul(a, b):
    if not b:
        return a
    if not a:
        return b
    d = dict(a)
    for k, e in b:
        d[k] = d.get(k, 0) + e
    return tuple(sorted(d.items()))


class _OutOfSteps(Exception):
    pass


def _reduce(p: Poly, basis: Sequence[Poly], leads, track=None, steps=None):
    """Full reduction of ``p``; returns (remainder, cofactor deltas or None).

    ``steps`` is a one-element list holding the remaining step budget.
    """
    r = _Red(p)
    rem: dict = {}
    deltas = [dict() for _ in basis] if track is not None else None
    while True:
        lt = r.lead()
        if lt is None:
            break
        m, c = lt
        for i, lm in enumerate(leads):
            t = mono_div(m, lm)
            if t is not None:
                if steps is not None:
                    steps[0] -= 1
                    if steps[0] < 0:
                        raise _OutOfSteps
                q = c / basis[i].terms[lm]
                r.add_scaled(basis[i], t, -q)
                if deltas is not None:
                    deltas[i][t] = deltas[i].get(t, 0) + q
                break
        else:
            r.pop_lead()
            rem[m] = c
    return Poly._raw(rem), deltas


def _combine(cofs, deltas, basis_cofs, sign=-1):
    """cofs + sign * sum_i deltas[i] * basis_cofs[i]."""
    out = list(cofs)
    for i, d in enumerate(deltas):
        if not d:
            continue
        q = Poly(d)
        for j in range(len(out)):
            if basis_cofs[i][j]:
                out[j] = out[j] + q * basis_cofs[i][j] * sign
    return out


def buchberger(gens: Iterable[Poly], cfg: GroebnerConfig | None = None, track: bool = False) -> Basis:
    """Reduced Gröbner basis of ``gens``.

    With ``track`` the result carries cofactors expressing every basis
    element in terms of the inputs.  On budget exhaustion the partial basis
    is returned with status ``BudgetExceeded``.
    """
    cfg = cfg or GroebnerConfig()
    inputs = [g for g in gens if not g.is_zero()]
    if not inputs:
        raise ValueError("buchberger needs at least one nonzero generator")
    n_in = len(inputs)
    G: list[Poly] = []
    C: list[list[Poly]] = []
    leads: list = []
    pairs: list = []
    counter = 0

    def unit_cof(j, scale):
        v = [ZERO] * n_in
        v[j] = Poly.const(scale)
        return v

    def add(g: Poly, cof):
        nonlocal counter
        lc = g.leading_coeff()
        g = g / lc
        if cof is not None:
            cof = [x / lc for x in cof]
        lm = g.leading_mono()
        k = len(G)
        for i, lmi in enumerate(leads):
            if lmi is None:
                continue
            lcmm = mono_lcm(lm, lmi)
            counter += 1
            heapq.heappush(pairs, (mono_key(lcmm), counter, i, k))
        G.append(g)
        C.append(cof)
        leads.append(lm)

    # seed the basis with inter-reduced inputs, in a fixed order
    order = sorted(range(n_in), key=lambda j: (mono_key(inputs[j].leading_mono()), inputs[j].to_text()))
    steps = [cfg.reduce_budget]
    try:
        processed, status = _run(inputs, order, G, C, leads, pairs, add, unit_cof, cfg, track, steps)
    except _OutOfSteps:
        processed, status = 0, Status.BUDGET_EXCEEDED
    gens_out, cofs_out = _interreduce(G, C, leads, track)
    if any(g.is_constant() for g in gens_out):
        idx = next(i for i, g in enumerate(gens_out) if g.is_constant())
        gens_out = [Poly.const(1)]
        cofs_out = [cofs_out[idx]] if track else None
        status = Status.COMPLETE
    return Basis(gens_out, status, cofs_out if track else None, processed)


def _run(inputs, order, G, C, leads, pairs, add, unit_cof, cfg, track, steps):
    """Main Buchberger loop; returns ``(pairs processed, status)``."""
    status = Status.COMPLETE
    for j in order:
        active = [i for i, lm in enumerate(leads) if lm is not None]
        r, deltas = _reduce(inputs[j], [G[i] for i in active], [leads[i] for i in active], track, steps)
        if r.is_zero():
            continue
        cof = None
        if track:
            full = [dict() for _ in G]
            for pos, i in enumerate(active):
                full[i] = deltas[pos]
            cof = _combine(unit_cof(j, 1), full, C)
        add(r, cof)
        if r.is_constant():
            break

    processed = 0
    while pairs and not any(g.is_constant() for g in G):
        if processed >= cfg.pair_budget:
            status = Status.BUDGET_EXCEEDED
            break
        _, _, i, k = heapq.heappop(pairs)
        if leads[i] is None or leads[k] is None:
            continue
        processed += 1
        li, lk = leads[i], leads[k]
        if mono_coprime(li, lk):
            continue
        lcmm = mono_lcm(li, lk)
        if _chain_skip(i, k, lcmm, leads, pairs):
            continue
        ti = mono_div(lcmm, li)
        tk = mono_div(lcmm, lk)
        s = G[i].mul_term(ti, 1) - G[k].mul_term(tk, 1)
        active = [a for a, lm in enumerate(leads) if lm is not None]
        r, deltas = _reduce(s, [G[a] for a in active], [leads[a] for a in active], track, steps)
        if r.is_zero():
            continue
        if r.total_degree() > cfg.degree_cap:
            status = Status.BUDGET_EXCEEDED
            break
        cof = None
        if track:
            base = [x.mul_term(ti, 1) - y.mul_term(tk, 1) for x, y in zip(C[i], C[k])]
            full = [dict() for _ in G]
            for pos, a in enumerate(active):
                full[a] = deltas[pos]
            cof = _combine(base, full, C)
        add(r, cof)
    return processed, status


def _chain_skip(i, k, lcmm, leads, pairs) -> bool:
    """Chain criterion: some third element's lead divides lcm and both
    companion pairs have already been handled."""
    for j, lj in enumerate(leads):
        if j in (i, k) or lj is None or j > max(i, k):
            continue
        if mono_divides(lj, lcmm):
            if not _pair_pending(i, j, pairs) and not _pair_pending(j, k, pairs):
                return True
    return False


def _pair_pending(a, b, pairs) -> bool:
    a, b = min(a, b), max(a, b)
    for *_, x, y in pairs:
        if x == a and y == b:
            return True
    return False


def _interreduce(G, C, leads, track):
    keep = [i for i, lm in enumerate(leads) if lm is not None]
    # drop elements whose lead is divisible by another lead
    minimal = []
    for i in keep:
        if any(j != i and mono_divides(leads[j], leads[i]) and (leads[j] != leads[i] or j < i) for j in keep):
            continue
        minimal.append(i)
    out, cofs = [], []
    for i in minimal:
        others = [j for j in minimal if j != i]
        g = G[i]
        # reduce only non-leading terms
        lm = leads[i]
        tail = g - Poly.monomial(lm, g.terms[lm])
        if others:
            r, deltas = _reduce(tail, [G[j] for j in others], [leads[j] for j in others], track)
        else:
            r, deltas = tail, None
        new = r + Poly.monomial(lm, g.terms[lm])
        out.append(new)
        if track:
            full = [dict() for _ in G]
            if deltas:
                for pos, j in enumerate(others):
                    full[j] = deltas[pos]
            cofs.append(_combine(C[i], full, C))
    idx = sorted(range(len(out)), key=lambda t: mono_key(out[t].leading_mono()))
    return [out[t] for t in idx], ([cofs[t] for t in idx] if track else None)


def reduce(p: Poly, basis: Basis | Sequence[Poly]) -> Poly:
    gs = basis.generators if isinstance(basis, Basis) else list(basis)
    return _reduce(p, gs, [g.leading_mono() for g in gs])[0]


def is_inconsistent(b: Basis) -> bool:
    return any(g.is_constant() and not g.is_zero() for g in b.generators)


def s_polynomial(f: Poly, g: Poly) -> Poly:
    lf, cf_ = f.leading_term()
    lg, cg = g.leading_term()
    lcmm = mono_lcm(lf, lg)
    return f.mul_term(mono_div(lcmm, lf), 1 / cf_) - g.mul_term(mono_div(lcmm, lg), 1 / cg)


def satisfies_criterion(gens: Sequence[Poly]) -> bool:
    """Every S-polynomial reduces to zero modulo ``gens``."""
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            if reduce(s_polynomial(gens[a], gens[b]), gens):
                return False
    return True


# -- turning a basis into solver branches --------------------------------


def triangular_extract(
    b: Basis,
    unknowns: Iterable[int],
    nonzero: Sequence[Poly] = (),
    branch_depth: int = 6,
    generic: bool = False,
) -> list[Branch]:
    """Solve what can be read off a basis.

    Generators linear in one unknown are solved, generators that split
    (including quadratics with a square discriminant) branch per factor,
    and the rest is returned as residual relations.  With ``generic`` the
    non-unknown atoms are treated as generic values, so a branch that
    constrains them alone is inconsistent.
    """
    unk = set(unknowns)
    out: list[Branch] = []
    start = [primitive(g) for g in b.generators]
    stack = [(start, {}, list(nonzero), [], 0)]
    while stack:
        gens, assign, side, rels, depth = stack.pop()
        gens = [g for g in gens if not g.is_zero()]
        if generic:
            gens = [_drop_generic(g, unk) for g in gens]
        if any(g.is_constant() or (generic and not g.has_any(unk)) for g in gens):
            out.append(Branch(dict(assign), side[len(nonzero):], rels, True))
            continue
        pick = _pick_linear(gens, unk)
        if pick is not None:
            g, x = pick
            rest = [h for h in gens if h is not g]
            for br in solve_linear([g], [x], side, branch_depth - depth):
                if br.inconsistent:
                    continue
                sub = dict(assign)
                frac = {k: (v.num, v.den) for k, v in br.assignment.items()}
                for k, v in list(sub.items()):
                    n1, d1 = v.num.subs_frac(frac)
                    n2, d2 = v.den.subs_frac(frac)
                    sub[k] = RatFunc(n1 * d2, n2 * d1)
                sub.update(br.assignment)
                new = [primitive(h.subs_frac(frac)[0]) for h in rest] + list(br.relations)
                stack.append((new, sub, side + br.side_conditions, rels, depth + len(br.relations)))
            continue
        split = None
        for g in gens:
            if not g.has_any(unk):
                continue
            fs = distinct_factors(g)
            if len(fs) > 1:
                split = (g, fs)
                break
        if split is not None:
            g, fs = split
            rest = [h for h in gens if h is not g]
            for f in reversed(fs):
                stack.append(([f] + rest, dict(assign), list(side), list(rels), depth))
            continue
        out.append(Branch(_sorted(assign), side[len(nonzero):], rels + gens, False))
    return out


def _drop_generic(g: Poly, unk) -> Poly:
    """Remove factors free of unknowns (nonzero at a generic point)."""
    if not g.has_any(unk) or len(g) == 1:
        return g
    fs = try_split_product(g)
    if all(f.has_any(unk) for f in fs):
        return g
    out = ONE
    for f in fs:
        if f.has_any(unk):
            out = out * f
    return primitive(out)


def _sorted(assign):
    return dict(sorted(assign.items(), key=lambda kv: atoms.order_key(kv[0])))


def _pick_linear(gens, unk):
    best = None
    for g in gens:
        present = [k for k in g.atoms() if k in unk]
        for x in sorted(present, key=atoms.order_key):
            if g.degree_in(x) != 1:
                continue
            parts = g.coeffs_in(x)
            coeff = parts[1]
            if coeff.has_any(unk):
                continue
            cand = (0 if coeff.is_constant() else 1, len(g), g.to_text())
            if best is None or cand < best[0]:
                best = (cand, g, x)
            break
    if best is None:
        return None
    return best[1], best[2]
