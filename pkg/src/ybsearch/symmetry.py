"""Symmetries of the Yang-Baxter equation and solution deduplication.

Discrete transforms act on Hietarinta indices ``R_ij^kl``:

* P: ``R_ij^kl -> R_kl^ij``
* C: ``R_ij^kl -> R_{i+n, j+n}^{k+n, l+n}`` (indices mod N)
* T: ``R_ij^kl -> R_ji^lk``

Continuous ones are ``R -> g (K x K) R (K x K)^-1`` with
``K = diag(a, 1/a) [[1, 0], [c, 1]] [[1, b], [0, 1]]`` and inversion.

Family comparison works by specialization matching: the parameters and
free functions of one family become unknowns next to ``a, b, c, g``, the
entry equations are solved, and any claimed witness is replayed exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from ybsearch import closedform as cf
from ybsearch.algebra import atoms
from ybsearch.algebra.atoms import Arg, Kind
from ybsearch.algebra.factor import distinct_factors
from ybsearch.algebra.poly import Poly
from ybsearch.algebra.ratfunc import RatFunc
from ybsearch.groebner import GroebnerConfig, buchberger, is_inconsistent, triangular_extract
from ybsearch.matrix import SMat
from ybsearch.relations import RMatrixSymbolic, flat_to_hietarinta, hietarinta_to_flat
from ybsearch import verifier


class SingularK(ValueError):
    pass


class SingularMatrix(ValueError):
    pass


class TKind(str, Enum):
    P = "P"
    C = "C"
    T = "T"
    SIMILARITY = "Similarity"
    INVERSION = "Inversion"


@dataclass(frozen=True)
class Transform:
    kind: TKind
    shift: int = 1  # C only
    a: object = 1
    b: object = 0
    c: object = 0
    g: object = 1
    n_dim: int = 2

    def text(self) -> str:
        if self.kind == TKind.C:
            return f"C{self.shift}" if self.shift != 1 else "C"
        if self.kind == TKind.SIMILARITY:
            vals = [RatFunc.of(x).to_text() for x in (self.a, self.b, self.c, self.g)]
            return "S(" + ", ".join(vals) + ")"
        return self.kind.value


def _mat(R) -> RMatrixSymbolic:
    return R if isinstance(R, RMatrixSymbolic) else RMatrixSymbolic.from_rows(R)


def _index_map(fn, n: int) -> dict:
    """Flat position -> source flat position for an index rule."""
    out = {}
    for r in range(n * n):
        for c in range(n * n):
            i, j, k, l = flat_to_hietarinta(r, c, n)
            src = fn(i, j, k, l)
            out[(r, c)] = hietarinta_to_flat(*src, n)
    return out


def _permute(R: RMatrixSymbolic, fn) -> RMatrixSymbolic:
    n = R.n
    mp = _index_map(fn, n)
    ent = {}
    for pos, src in mp.items():
        v = R.mat.get(*src)
        if v is not None:
            ent[pos] = v
    return RMatrixSymbolic(n, SMat(n * n, ent), R.arg)


def apply_pct(R, t: Transform | str) -> RMatrixSymbolic:
    """Apply P, C or T as an entry permutation."""
    R = _mat(R)
    n = R.n
    if isinstance(t, str):
        t = Transform(TKind(t) if t in ("P", "T") else TKind.C)
    if t.kind == TKind.P:
        return _permute(R, lambda i, j, k, l: (k, l, i, j))
    if t.kind == TKind.T:
        return _permute(R, lambda i, j, k, l: (j, i, l, k))
    if t.kind == TKind.C:
        s = t.shift

        def sh(x):
            return (x - 1 + s) % n + 1

        return _permute(R, lambda i, j, k, l: (sh(i), sh(j), sh(k), sh(l)))
    raise ValueError(f"not a discrete transform: {t.kind}")


def k_matrix(a, b, c) -> list[list[RatFunc]]:
    a, b, c = RatFunc.of(a), RatFunc.of(b), RatFunc.of(c)
    if a.is_zero():
        raise SingularK("a must be nonzero")
    ai = RatFunc.of(1) / a
    return [[a, a * b], [ai * c, ai * (c * b + 1)]]


def _kron(A, B) -> list[list[RatFunc]]:
    n, m = len(A), len(B)
    return [[A[i // m][j // m] * B[i % m][j % m] for j in range(n * m)] for i in range(n * m)]


def _matmul(A, B):
    n = len(A)
    zero = RatFunc.of(0)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = zero
            for k in range(n):
                if not A[i][k].is_zero() and not B[k][j].is_zero():
                    acc = acc + A[i][k] * B[k][j]
            row.append(acc)
        out.append(row)
    return out


def apply_similarity(R, a, b, c, g=1) -> RMatrixSymbolic:
    """``g (K x K) R (K x K)^-1`` with the exact inverse of K (det K = 1)."""
    R = _mat(R)
    K = k_matrix(a, b, c)
    Kinv = [[K[1][1], -K[0][1]], [-K[1][0], K[0][0]]]
    KK = _kron(K, K)
    KKi = _kron(Kinv, Kinv)
    out = _matmul(_matmul(KK, R.rows()), KKi)
    g = RatFunc.of(g)
    return RMatrixSymbolic.from_rows([[cf.normalize(x * g) for x in row] for row in out], R.arg)


def invert_r(R) -> RMatrixSymbolic:
    """Exact inverse by Gauss-Jordan elimination over rational functions."""
    R = _mat(R)
    n = R.dim
    A = [[cf.normalize(x) for x in row] + [RatFunc.of(1 if i == j else 0) for j in range(n)]
         for i, row in enumerate(R.rows())]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not A[r][col].is_zero():
                if piv is None or len(A[r][col].num) < len(A[piv][col].num):
                    piv = r
        if piv is None:
            raise SingularMatrix("matrix is singular")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [cf.normalize(x / p) for x in A[col]]
        for r in range(n):
            if r != col and not A[r][col].is_zero():
                f = A[r][col]
                A[r] = [cf.normalize(A[r][j] - f * A[col][j]) for j in range(2 * n)]
    return RMatrixSymbolic.from_rows([row[n:] for row in A], R.arg)


def apply(R, t: Transform) -> RMatrixSymbolic:
    if t.kind in (TKind.P, TKind.C, TKind.T):
        return apply_pct(R, t)
    if t.kind == TKind.SIMILARITY:
        return apply_similarity(R, t.a, t.b, t.c, t.g)
    return invert_r(R)


def ybe_preserved_under(R, t: Transform) -> bool:
    return verifier.verify(apply(R, t)).passed


# -- canonical forms --------------------------------------------------------


def _orbit_words(n: int = 2) -> list[tuple[str, ...]]:
    """Shortest words reaching each element of the group made by P, C, T."""
    gens = {"P": lambda i, j, k, l: (k, l, i, j),
            "T": lambda i, j, k, l: (j, i, l, k),
            "C": lambda i, j, k, l: tuple((x % n) + 1 for x in (i, j, k, l))}
    ident = tuple(range(n ** 4))

    def perm_of(word):
        # composite map on index tuples
        idx = list(itertools.product(range(1, n + 1), repeat=4))
        pos = {t: p for p, t in enumerate(idx)}
        out = []
        for t in idx:
            s = t
            for w in word:
                s = gens[w](*s)
            out.append(pos[s])
        return tuple(out)

    seen = {ident: ()}
    frontier = [()]
    while frontier:
        nxt = []
        for word in frontier:
            for gname in ("P", "C", "T"):
                w = word + (gname,)
                p = perm_of(w)
                if p not in seen:
                    seen[p] = w
                    nxt.append(w)
        frontier = nxt
    return sorted(seen.values(), key=lambda w: (len(w), w))


def apply_word(R, word: Sequence[str]) -> RMatrixSymbolic:
    R = _mat(R)
    # words act on indices left to right; apply the last letter first
    for w in reversed(word):
        R = apply_pct(R, w)
    return R


def _rename_free(rows: list[list[RatFunc]]) -> list[list[RatFunc]]:
    """Renumber free functions by first appearance in row-major order."""
    order = []
    for row in rows:
        for x in row:
            for k in sorted(x.atoms(), key=atoms.order_key):
                a = atoms.atom_of(k)
                base = a.payload[0] if a.kind == Kind.DERIV else a
                if base.kind == Kind.FREE_FUNC and base.payload[0] not in order:
                    order.append(base.payload[0])
    if order == sorted(order) and order == list(range(1, len(order) + 1)):
        return rows
    mp = {}
    for new, old in enumerate(order, 1):
        for arg in (Arg.U,):
            mp[atoms.free_func(old, arg)] = RatFunc(Poly.var(atoms.free_func(new, arg)))
            mp[atoms.deriv_of(atoms.free_func(old, arg))] = RatFunc(
                Poly.var(atoms.deriv_of(atoms.free_func(new, arg))))
    return [[cf.substitute(x, mp) for x in row] for row in rows]


def gauge_normalize(R) -> RMatrixSymbolic:
    """Divide by the first nonzero entry (row-major)."""
    R = _mat(R)
    rows = [[cf.normalize(x) for x in row] for row in R.rows()]
    lead = next((x for row in rows for x in row if not x.is_zero()), None)
    if lead is None:
        return R
    return RMatrixSymbolic.from_rows([[cf.normalize(x / lead) for x in row] for row in rows], R.arg)


def _serial(R: RMatrixSymbolic) -> str:
    rows = _rename_free(gauge_normalize(R).rows())
    return ";".join(",".join(x.to_text() for x in row) for row in rows)


@dataclass
class Canonical:
    text: str
    matrix: RMatrixSymbolic
    word: tuple  # P/C/T letters taking the input to the canonical form


def canonicalize(R) -> Canonical:
    """Orbit minimum under P, C, T after gauge and free-function
    normalization."""
    R = _mat(R)
    best = None
    for word in _orbit_words(R.n):
        M = apply_word(R, word)
        s = _serial(M)
        if best is None or (len(s), s) < (len(best[0]), best[0]):
            best = (s, M, word)
    s, M, word = best
    rows = _rename_free(gauge_normalize(M).rows())
    return Canonical(s, RMatrixSymbolic.from_rows(rows, R.arg), tuple(word))


# -- specialization matching ------------------------------------------------


class Verdict(str, Enum):
    EQUIVALENT = "Equivalent"
    DISTINCT = "Distinct"
    UNKNOWN = "Unknown"


@dataclass
class Witness:
    """``target = g (K x K) word(source)(values) (K x K)^-1``, optionally
    after inverting the source."""

    word: tuple = ()
    a: RatFunc = field(default_factory=lambda: RatFunc.of(1))
    b: RatFunc = field(default_factory=lambda: RatFunc.of(0))
    c: RatFunc = field(default_factory=lambda: RatFunc.of(0))
    g: RatFunc = field(default_factory=lambda: RatFunc.of(1))
    values: dict = field(default_factory=dict)  # source atom id -> value
    inverted: bool = False
    branches: list = field(default_factory=list)  # (target substitution, Witness)

    def to_doc(self) -> dict:
        if self.branches:
            return {"branches": [{"on": {atoms.atom_of(k).text(): v.to_text() for k, v in
                                         sorted(sub.items(), key=lambda kv: atoms.order_key(kv[0]))},
                                  "witness": w.to_doc()} for sub, w in self.branches]}
        return {
            "word": "".join(self.word),
            "inverted": self.inverted,
            "a": self.a.to_text(), "b": self.b.to_text(), "c": self.c.to_text(), "g": self.g.to_text(),
            "values": {atoms.atom_of(k).text(): v.to_text() for k, v in
                       sorted(self.values.items(), key=lambda kv: atoms.order_key(kv[0]))},
        }


@dataclass
class EquivalenceReport:
    verdict: Verdict
    forward: Witness | None = None  # R1 from R2
    backward: Witness | None = None  # R2 from R1
    certificate: tuple | None = None
    details: str = ""


def replay(source, w: Witness) -> RMatrixSymbolic:
    M = _mat(source)
    if w.inverted:
        M = invert_r(M)
    if w.values:
        M = M.map(lambda x: cf.substitute(x, _expand_values(w.values)))
    M = apply_word(M, w.word)
    return apply_similarity(M, w.a, w.b, w.c, w.g)


def _expand_values(values: dict) -> dict:
    out = {k: v for k, v in values.items() if atoms.atom_of(k).kind != Kind.DERIV}
    for k, v in list(out.items()):
        if atoms.atom_of(k).kind == Kind.FREE_FUNC:
            out[atoms.deriv_of(k)] = cf.differentiate(v)
    return out


def _same(A: RMatrixSymbolic, B: RMatrixSymbolic, relations: Sequence[Poly] = ()) -> bool:
    basis = buchberger(relations) if relations else None
    for ra, rb in zip(A.rows(), B.rows()):
        for x, y in zip(ra, rb):
            d = cf.normalize(x - y)
            if d.is_zero():
                continue
            if basis is None:
                return False
            from ybsearch.groebner import reduce

            if not reduce(d.num, basis).is_zero():
                return False
    return True


_FRESH = itertools.count(1)


def _fresh(tag: str) -> int:
    return atoms.param(f"w_{tag}{next(_FRESH)}")


def _source_unknowns(M: RMatrixSymbolic, fixed: set[int]):
    """Rename parameters, free functions and parameter-dependent
    exponentials of the source into fresh unknown atoms."""
    ren: dict = {}
    back: dict = {}  # fresh atom -> original atom
    exps: dict = {}  # fresh atom -> rate in fresh unknowns
    ids = set(M.atoms())
    for k in list(ids):
        if atoms.atom_of(k).kind == Kind.EXP:
            ids |= cf.rate_of(k).atoms()
    for k in sorted(ids, key=atoms.order_key):
        a = atoms.atom_of(k)
        if a.kind in (Kind.SEED_PARAM, Kind.INIT_DERIV, Kind.INT_CONST) and k not in fixed:
            f = _fresh("t")
            ren[k] = RatFunc(Poly.var(f))
            back[f] = k
        elif k not in fixed and (a.kind == Kind.FREE_FUNC
                                 or (a.kind == Kind.DERIV and a.payload[0].kind == Kind.FREE_FUNC)):
            f = _fresh("f")
            ren[k] = RatFunc(Poly.var(f))
            back[f] = k
    for k in sorted(M.atoms(), key=atoms.order_key):
        a = atoms.atom_of(k)
        if a.kind == Kind.EXP:
            rate = cf.rate_of(k)
            if rate.atoms() & ren.keys():
                f = _fresh("e")
                exps[f] = (cf.substitute(rate, ren), a.arg)
                ren[k] = RatFunc(Poly.var(f))
    return ren, back, exps


@dataclass
class MatchConfig:
    pair_budget: int = 400
    reduce_budget: int = 60_000
    # general K leads to larger systems; they get their own budget
    full_pair_budget: int = 5000
    full_reduce_budget: int = 3_000_000
    similarity: str = "full"  # "none", "diagonal" or "full"

    def budgets(self, mode: str) -> tuple[int, int]:
        if mode == "full":
            return self.full_pair_budget, self.full_reduce_budget
        return self.pair_budget, self.reduce_budget


def _solve_system(eqs, unknowns, nonzero, cfg: MatchConfig, mode: str = "none"):
    eqs = [e for e in eqs if not e.is_zero()]
    if not eqs:
        return [({}, [])]
    pairs, steps = cfg.budgets(mode)
    b = buchberger(eqs, GroebnerConfig(pair_budget=pairs, reduce_budget=steps))
    if not b.complete:
        return None
    if is_inconsistent(b):
        return []
    out = []
    for br in triangular_extract(b, unknowns, nonzero, 4, generic=True):
        if br.inconsistent:
            continue
        out.append((br.assignment, br.relations))
    return out


def _match_fixed(target: RMatrixSymbolic, source: RMatrixSymbolic, word: tuple, cfg: MatchConfig,
                 rels_t: Sequence[Poly], rels_s: Sequence[Poly], mode: str, rigid: bool = False):
    """Try one P/C/T word and one similarity shape; returns a Witness or None.

    ``rigid`` keeps the source parameters and free functions as they are,
    which leaves only the similarity and scale unknowns."""
    S = apply_word(source, word)
    fixed = _all_atoms(S) if rigid else set()
    ren, back, exps = _source_unknowns(S, fixed)
    Sr = S.map(lambda x: cf.substitute(x, ren)) if ren else S
    ga = _fresh("g")
    g = RatFunc(Poly.var(ga))
    unk = {ga} | set(back) | set(exps)
    if mode == "none":
        a, ai, b, c = (RatFunc.of(1), RatFunc.of(1), RatFunc.of(0), RatFunc.of(0))
        extra = []
    else:
        aa, aia = _fresh("a"), _fresh("ai")
        a, ai = RatFunc(Poly.var(aa)), RatFunc(Poly.var(aia))
        unk |= {aa, aia}
        extra = [Poly.var(aa) * Poly.var(aia) - 1]
        if mode == "full":
            ba, ca = _fresh("b"), _fresh("c")
            b, c = RatFunc(Poly.var(ba)), RatFunc(Poly.var(ca))
            unk |= {ba, ca}
        else:
            b, c = RatFunc.of(0), RatFunc.of(0)
    K = [[a, a * b], [ai * c, ai * (c * b + 1)]]
    KK = _kron(K, K)
    lhs = _matmul(KK, Sr.rows())
    rhs = _matmul(target.rows(), KK)
    eqs = list(extra)
    for i in range(len(lhs)):
        for j in range(len(lhs)):
            d = cf.normalize(g * lhs[i][j] - rhs[i][j])
            if not d.is_zero():
                eqs.append(d.num)
    eqs += [cf.substitute(RatFunc(p), ren).num for p in rels_s]
    eqs += list(rels_t)
    nonzero = [Poly.var(ga)]
    sols = _solve_system(eqs, unk, nonzero, cfg, mode)
    if not sols:
        return None
    for assign, residual in sols:
        w = _witness_from(assign, residual, back, exps, ga, mode, word, unk, cfg, eqs, nonzero)
        if w is None:
            continue
        try:
            M = replay(source, w)
        except (SingularK, ZeroDivisionError, ValueError):
            continue
        if _same(M, target, rels_t) and _relations_hold(rels_s, w.values, rels_t):
            return w
    return None


def _relations_hold(rels_s, values, rels_t) -> bool:
    if not rels_s:
        return True
    basis = buchberger(rels_t) if rels_t else None
    from ybsearch.groebner import reduce

    for p in rels_s:
        v = cf.substitute(RatFunc(p), values)
        if v.is_zero():
            continue
        if basis is None or not reduce(v.num, basis).is_zero():
            return False
    return True


def _default_of(k: int) -> RatFunc:
    name = atoms.atom_of(k).payload[0]
    return RatFunc.of(0 if name.startswith(("w_b", "w_c")) else 1)


def _fill_order(k: int) -> tuple:
    # scale factors are solved for last so they absorb the defaults
    name = atoms.atom_of(k).payload[0]
    return (name.startswith(("w_g", "w_ai")), atoms.order_key(k))


def _complete(assign, residual, unk, skip, nonzero, cfg, mode):
    """Extend a partial solution: solve residual relations where possible
    and give the remaining unknowns default values one at a time."""
    assign = dict(assign)
    res = list(residual)
    for _ in range(2 * len(unk) + 2):
        res = [cf.subs_poly(r, assign)[0] for r in res]
        res = [r for r in res if not r.is_zero()]
        if any(not r.has_any(unk) for r in res):
            return None
        open_ = sorted((k for k in unk if k not in assign and k not in skip), key=_fill_order)
        if not open_:
            break
        if res:
            sols = _solve_system(res, set(open_), nonzero, cfg, mode)
            if sols == []:
                return None
            step = next(((a2, r2) for a2, r2 in sols or [] if a2), None)
            if step is not None:
                a2, r2 = step
                assign = {k: cf.substitute(v, a2) for k, v in assign.items()}
                assign.update(a2)
                res = list(r2)
                continue
        x = open_[0]
        d = {x: _default_of(x)}
        assign = {k: cf.substitute(v, d) for k, v in assign.items()}
        assign.update(d)
    return assign


def _witness_from(assign, residual, back, exps, ga, mode, word, unk, cfg, eqs, nonzero, pin=True):
    # exponentials solved as exp(rho*u) pin down their rate
    pinned = []
    for f, (rate, arg) in (exps.items() if pin else ()):
        val = assign.get(f)
        if val is None:
            continue
        rho = _exp_rate(val, arg)
        if rho is not None:
            p = cf.normalize(cf.substitute(rate, assign) - rho).num
            if not p.is_zero():
                pinned.append(cf.normalize(rate - rho).num)
    if pinned:
        sols = _solve_system(eqs + pinned, unk, nonzero, cfg, mode)
        for a2, r2 in sols or []:
            w = _witness_from(a2, r2, back, exps, ga, mode, word, unk, cfg, eqs, nonzero, pin=False)
            if w is not None:
                return w
        return None
    assign = _complete(assign, residual, unk, set(exps), nonzero, cfg, mode)
    if assign is None or ga not in assign:
        return None
    vals = {}
    for f, orig in back.items():
        vals[orig] = cf.normalize(assign[f])
    # the remaining exponentials must follow from the parameter values
    w = Witness(tuple(word), g=cf.normalize(assign[ga]), values=vals)
    for k in unk:
        nm = atoms.atom_of(k).payload[0]
        if nm.startswith("w_ai"):
            continue
        if nm.startswith("w_a"):
            w.a = cf.normalize(assign[k])
        elif nm.startswith("w_b"):
            w.b = cf.normalize(assign[k])
        elif nm.startswith("w_c"):
            w.c = cf.normalize(assign[k])
    if w.a.is_zero():
        return None
    return w


def _exp_rate(val: RatFunc, arg) -> RatFunc | None:
    if not val.is_poly() or not val.num.is_monomial():
        return None
    (m, c), = val.num.terms.items()
    if c != 1:
        return None
    rate = RatFunc.of(0)
    for k, e in m:
        a = atoms.atom_of(k)
        if a.kind != Kind.EXP or a.arg != arg:
            return None
        rate = rate + cf.rate_of(k) * e
    return rate


def match_into(target, source, rels_t: Sequence[Poly] = (), rels_s: Sequence[Poly] = (),
               cfg: MatchConfig | None = None, allow_inverse: bool = True) -> Witness | None:
    """Find a witness expressing ``target`` as a transformed specialization
    of ``source``.  The result is replayed exactly before it is returned."""
    cfg = cfg or MatchConfig()
    target = _mat(target).map(cf.normalize)
    source = _mat(source).map(cf.normalize)
    if rels_t:
        # a family with relations is a union of branches; each needs a witness
        found = []
        for Tb, sub, left in relation_branches(target, rels_t):
            w = _match_plain(Tb, source, left, rels_s, cfg, allow_inverse)
            if w is None:
                return None
            found.append((sub, w))
        if len(found) == 1 and not found[0][0]:
            return found[0][1]
        return Witness(branches=found)
    return _match_plain(target, source, (), rels_s, cfg, allow_inverse)


def match_union(target, sources: Sequence, rels_t: Sequence[Poly] = (),
                cfg: MatchConfig | None = None) -> list | None:
    """Cover every relation branch of ``target`` by one of ``sources``
    (matrices or ``(matrix, relations)`` pairs).  Returns a list of
    ``(branch substitution, source index, Witness)`` or None."""
    cfg = cfg or MatchConfig()
    target = _mat(target).map(cf.normalize)
    srcs = [(_mat(s[0]).map(cf.normalize), tuple(s[1])) if isinstance(s, tuple)
            else (_mat(s).map(cf.normalize), ()) for s in sources]
    out = []
    for Tb, sub, left in relation_branches(target, rels_t):
        hit = None
        for idx, (S, rs) in enumerate(srcs):
            w = _match_plain(Tb, S, left, rs, cfg, True)
            if w is not None:
                hit = (sub, idx, w)
                break
        if hit is None:
            return None
        out.append(hit)
    return out


def _match_plain(target, source, rels_t, rels_s, cfg, allow_inverse):
    modes = ["none"] + (["diagonal"] if cfg.similarity in ("diagonal", "full") else []) + \
        (["full"] if cfg.similarity == "full" else [])
    srcs = [(source, False)]
    if allow_inverse:
        try:
            srcs.append((invert_r(source), True))
        except SingularMatrix:
            pass
    words = _orbit_words(source.n)
    shared = _varying(source) <= _varying(target)
    # inverses have large entries, so they come last
    for src, inv in srcs:
        for rigid in ((True, False) if shared else (False,)):
            for mode in modes:
                for word in words:
                    if not _pattern_ok(target, apply_word(src, word), mode):
                        continue
                    w = _match_fixed(target, src, word, cfg, rels_t, rels_s, mode, rigid)
                    if w is not None:
                        if inv:
                            w.inverted = True
                        return w
    return None


def _all_atoms(M: RMatrixSymbolic) -> set:
    ids = set(M.atoms())
    for k in list(ids):
        if atoms.atom_of(k).kind == Kind.EXP:
            ids |= cf.rate_of(k).atoms()
    return ids


def _varying(M: RMatrixSymbolic) -> set:
    """Parameters and free functions, the atoms a specialization may move."""
    out = set()
    for k in _all_atoms(M):
        a = atoms.atom_of(k)
        if a.kind in (Kind.SEED_PARAM, Kind.INIT_DERIV, Kind.INT_CONST, Kind.FREE_FUNC):
            out.add(k)
    return out


def _pattern_ok(target: RMatrixSymbolic, S: RMatrixSymbolic, mode: str) -> bool:
    """Cheap filter: without similarity the zero patterns must agree up to
    specialization (a zero of the target may come from a parameter)."""
    if mode != "none":
        return True
    for (r, c), v in target.mat.entries.items():
        if S.mat.get(r, c) is None and not v.is_zero():
            return False
    return True


# -- equivalence and dedup --------------------------------------------------


def _charpoly(rows) -> list[Fraction]:
    """Coefficients c_1..c_n of det(x - R) for a numeric matrix
    (Faddeev-LeVerrier)."""
    n = len(rows)
    A = [[Fraction(x) for x in r] for r in rows]
    M = [[Fraction(0)] * n for _ in range(n)]
    coeffs = []
    c = Fraction(1)
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{k-1} I
        AM = [[sum(A[i][t] * M[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        M = [[AM[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)]
        AMk = [[sum(A[i][t] * M[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        c = -sum(AMk[i][i] for i in range(n)) / k
        coeffs.append(c)
    return coeffs


def _numeric_rows(R: RMatrixSymbolic):
    rows = []
    for row in R.rows():
        out = []
        for x in row:
            x = cf.normalize(x)
            if x.atoms():
                return None
            out.append(x.num.constant_value() / x.den.constant_value())
        rows.append(out)
    return rows


def _invariants(R: RMatrixSymbolic) -> dict:
    """Rank always; for numeric matrices also which characteristic
    polynomial coefficients vanish, a pattern unchanged by scaling and
    conjugation (and given for the inverse as well)."""
    out = {"rank": verifier.symbolic_rank(R)}
    rows = _numeric_rows(R)
    if rows is not None:
        cp = _charpoly(rows)
        out["charpoly_zeros"] = tuple(c == 0 for c in cp)
        if cp[-1] != 0:
            # eigenvalues 1/x: coefficients reverse, up to scale
            rev = list(reversed([Fraction(1)] + cp))[1:]
            out["charpoly_zeros_inv"] = (tuple(c == 0 for c in rev),)
    return out


def _sl2(M) -> tuple | None:
    """(a, b, c) with K(a, b, c) = M for det M = 1, if M[0][0] != 0."""
    m00, m01, m10 = cf.normalize(M[0][0]), cf.normalize(M[0][1]), cf.normalize(M[1][0])
    if m00.is_zero():
        return None
    return m00, cf.normalize(m01 / m00), cf.normalize(m10 * m00)


def invert_witness(w: Witness, R1, R2, rels2: Sequence[Poly] = ()) -> Witness | None:
    """Backward witness from a forward one that fixes all parameters:
    ``R1 = S(W(R2))`` gives ``R2 = S'(W^-1(R1))`` with S' the inverse
    similarity moved through the P/C/T word.  Replayed before returning."""
    if w.values or w.branches:
        return None
    K = k_matrix(w.a, w.b, w.c)
    M = [[K[1][1], -K[0][1]], [-K[1][0], K[0][0]]]
    inv_word = tuple(reversed(w.word))
    # apply_word applies the last letter first
    for letter in reversed(inv_word):
        if letter == "P":
            M = [[M[1][1], -M[1][0]], [-M[0][1], M[0][0]]]  # inverse transpose, det 1
        elif letter == "C":
            M = [[M[1][1], M[1][0]], [M[0][1], M[0][0]]]
    abc = _sl2(M)
    if abc is None:
        return None
    g = w.g if w.inverted else cf.normalize(RatFunc.of(1) / w.g)
    back = Witness(inv_word, abc[0], abc[1], abc[2], g, inverted=w.inverted)
    try:
        ok = _same(replay(_mat(R1), back), _mat(R2).map(cf.normalize), rels2)
    except (SingularK, SingularMatrix, ZeroDivisionError):
        return None
    return back if ok else None


def equivalent_mod_similarity(R1, R2, rels1: Sequence[Poly] = (), rels2: Sequence[Poly] = (),
                              cfg: MatchConfig | None = None) -> EquivalenceReport:
    """Equivalent when each family is a transformed specialization of the
    other; Distinct on an invariant mismatch; Unknown otherwise."""
    R1, R2 = _mat(R1), _mat(R2)
    i1, i2 = _invariants(R1), _invariants(R2)
    if i1["rank"] != i2["rank"]:
        return EquivalenceReport(Verdict.DISTINCT, certificate=("rank", i1["rank"], i2["rank"]),
                                 details="symbolic rank differs")
    for key in ("charpoly_zeros",):
        if key in i1 and key in i2 and i1[key] != i2[key] and i1[key] not in i2.get(key + "_inv", ()):
            return EquivalenceReport(Verdict.DISTINCT, certificate=(key, i1[key], i2[key]),
                                     details="characteristic polynomial pattern differs")
    fwd = match_into(R1, R2, rels1, rels2, cfg)
    bwd = None
    if fwd is not None:
        bwd = invert_witness(fwd, R1, R2, rels2)
        if bwd is None:
            bwd = match_into(R2, R1, rels2, rels1, cfg)
    if fwd is not None and bwd is not None:
        return EquivalenceReport(Verdict.EQUIVALENT, fwd, bwd)
    details = "first is a specialization of the second" if fwd is not None else "no witness found"
    return EquivalenceReport(Verdict.UNKNOWN, fwd, None, details=details)


@dataclass
class SolutionClass:
    representative: object  # entry with .matrix/.relations, or a matrix
    # (entry, witness from ``via`` to entry or None, via)
    members: list = field(default_factory=list)
    flags: list = field(default_factory=list)


def _parts(item):
    if hasattr(item, "matrix"):
        return _mat(item.matrix), tuple(getattr(item, "relations", ()))
    return _mat(item), ()


def dedup(solutions: Iterable, cfg: MatchConfig | None = None) -> list[SolutionClass]:
    """Group solutions into classes.

    A family joins a class when it is a transformed specialization of the
    class representative; when the representative is a specialization of
    the newcomer, the newcomer becomes the representative.  Families with
    equal canonical forms are merged without a similarity search.
    """
    cfg = cfg or MatchConfig()
    classes: list[SolutionClass] = []
    by_canon: dict = {}
    for item in solutions:
        M, rels = _parts(item)
        can = canonicalize(M).text if not rels else None
        if can is not None and can in by_canon:
            cls = by_canon[can]
            RM, Rrels = _parts(cls.representative)
            w = match_into(M, RM, rels, Rrels, MatchConfig(similarity="none"))
            cls.members.append((item, w, cls.representative))
            continue
        home = None
        rank = verifier.symbolic_rank(M)
        for cls in classes:
            RM, Rrels = _parts(cls.representative)
            if verifier.symbolic_rank(RM) != rank:
                continue
            w = match_into(M, RM, rels, Rrels, cfg)
            if w is not None:
                cls.members.append((item, w, cls.representative))
                home = cls
                break
            w = match_into(RM, M, Rrels, rels, cfg)
            if w is not None:
                old = cls.representative
                cls.members = [(e, ww, via) if e is not old else (e, w, item) for e, ww, via in cls.members]
                cls.members.append((item, None, None))
                cls.representative = item
                cls.flags.append("representative replaced by a larger family")
                home = cls
                break
        if home is None:
            home = SolutionClass(item, [(item, None, None)])
            classes.append(home)
        if can is not None:
            by_canon.setdefault(can, home)
    return classes


def relation_branches(M, rels: Sequence[Poly]) -> list[tuple[RMatrixSymbolic, dict, list]]:
    """Split a family with parameter relations into explicit branches.

    Each distinct factor of a relation that is linear in some parameter is
    solved for it; factors that cannot be solved stay as leftover
    relations of their branch.  Returns ``(matrix, substitution, leftover)``.
    """
    M = _mat(M)
    rels = [p for p in rels if not p.is_zero()]
    if not rels:
        return [(M, {}, [])]
    first, rest = rels[0], rels[1:]
    out = []
    for f in distinct_factors(first):
        params = sorted((k for k in f.atoms() if atoms.atom_of(k).kind == Kind.SEED_PARAM),
                        key=atoms.order_key)
        pick = None
        for x in params:
            if f.degree_in(x) != 1:
                continue
            parts = f.coeffs_in(x)
            cand = (0 if parts[1].is_constant() else 1, len(parts[1]))
            if pick is None or cand < pick[0]:
                pick = (cand, x, parts)
        if pick is None:
            for Mi, si, li in relation_branches(M, rest):
                out.append((Mi, si, [f] + li))
            continue
        _, x, parts = pick
        val = cf.normalize(RatFunc(-parts.get(0, Poly()), parts[1]))
        sub = {x: val}
        Mb = M.map(lambda e: cf.substitute(e, sub))
        rest_b = [cf.substitute(RatFunc(p), sub).num for p in rest]
        for Mi, si, li in relation_branches(Mb, rest_b):
            merged = {k: cf.substitute(v, si) for k, v in sub.items()}
            merged.update(si)
            out.append((Mi, merged, li))
    return out
