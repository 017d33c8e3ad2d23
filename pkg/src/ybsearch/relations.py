"""Symbolic R-matrices, three-site embeddings and the YB relation families.

Index convention: ``R = sum R_ij^kl E_jl ⊗ E_ik``.  With 1-based tensor
indices the symbol ``R_ij^kl`` is the matrix entry at row
``(j-1)*N + i`` and column ``(l-1)*N + k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable

from ybsearch import closedform as cf
from ybsearch.algebra import atoms
from ybsearch.algebra.atoms import Arg
from ybsearch.algebra.factor import primitive
from ybsearch.algebra.poly import Poly
from ybsearch.algebra.ratfunc import RatFunc
from ybsearch.matrix import DimensionMismatch, SMat, kron_identity_left, kron_identity_right
from ybsearch.textio import parse_expr


# -- index maps -------------------------------------------------------------


def hietarinta_to_flat(i: int, j: int, k: int, l: int, n: int = 2) -> tuple[int, int]:
    """1-based ``(i, j, k, l)`` -> 0-based ``(row, col)``."""
    for x in (i, j, k, l):
        if not 1 <= x <= n:
            raise ValueError(f"index {x} out of range 1..{n}")
    return (j - 1) * n + (i - 1), (l - 1) * n + (k - 1)


def flat_to_hietarinta(row: int, col: int, n: int = 2) -> tuple[int, int, int, int]:
    """0-based ``(row, col)`` -> 1-based ``(i, j, k, l)``."""
    j, i = divmod(row, n)
    l, k = divmod(col, n)
    return i + 1, j + 1, k + 1, l + 1


# -- symbolic R-matrix -------------------------------------------------------


@dataclass
class RMatrixSymbolic:
    """``N^2 x N^2`` matrix of closed-form entries with an argument tag."""

    n: int
    mat: SMat
    arg: Arg | str = Arg.U

    @classmethod
    def from_rows(cls, rows, arg=Arg.U, n: int | None = None) -> "RMatrixSymbolic":
        conv = []
        for row in rows:
            conv.append([parse_expr(x) if isinstance(x, str) else RatFunc.of(x) for x in row])
        size = len(conv)
        n = n or round(size ** 0.5)
        if n * n != size:
            raise DimensionMismatch(f"{size} is not a square of an integer")
        return cls(n, SMat.from_rows(conv), arg)

    @classmethod
    def unknown(cls, n: int = 2, arg: Arg = Arg.U) -> "RMatrixSymbolic":
        d = n * n
        ent = {(r, c): RatFunc(Poly.var(atoms.entry(r + 1, c + 1, arg))) for r in range(d) for c in range(d)}
        return cls(n, SMat(d, ent), arg)

    @classmethod
    def identity(cls, n: int = 2) -> "RMatrixSymbolic":
        return cls(n, SMat.identity(n * n, RatFunc.of(1)), Arg.ZERO)

    @property
    def dim(self) -> int:
        return self.n * self.n

    def get(self, r: int, c: int) -> RatFunc:
        return self.mat.entries.get((r, c), RatFunc.of(0))

    def hget(self, i, j, k, l) -> RatFunc:
        return self.get(*hietarinta_to_flat(i, j, k, l, self.n))

    def rows(self) -> list[list[RatFunc]]:
        return self.mat.rows(RatFunc.of(0))

    def map(self, fn) -> "RMatrixSymbolic":
        return RMatrixSymbolic(self.n, self.mat.map(fn), self.arg)

    def at(self, target: Arg) -> "RMatrixSymbolic":
        """Re-tag every entry from u to ``target``."""
        return RMatrixSymbolic(self.n, self.mat.map(lambda e: cf.retag(e, target)), target)

    def atoms(self) -> set[int]:
        out: set[int] = set()
        for v in self.mat.entries.values():
            out |= v.atoms()
        return out

    def to_text_rows(self) -> list[list[str]]:
        return [[e.to_text() for e in row] for row in self.rows()]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RMatrixSymbolic):
            return NotImplemented
        return self.n == other.n and self.to_text_rows() == other.to_text_rows()


def _as_smat(R) -> tuple[int, SMat]:
    if isinstance(R, RMatrixSymbolic):
        return R.n, R.mat
    n = round(R.n ** 0.5)
    if n * n != R.n:
        raise DimensionMismatch(f"{R.n} is not a square")
    return n, R


def _p23(n: int) -> list[int]:
    perm = []
    for idx in range(n ** 3):
        a, rest = divmod(idx, n * n)
        b, c = divmod(rest, n)
        perm.append(a * n * n + c * n + b)
    return perm


def embed(R, slot: int | str) -> SMat:
    """Three-site embedding ``R_12``, ``R_13`` or ``R_23``."""
    n, m = _as_smat(R)
    slot = str(slot)
    if slot == "12":
        return kron_identity_right(m, n)
    if slot == "23":
        return kron_identity_left(m, n)
    if slot == "13":
        return kron_identity_right(m, n).permute(_p23(n))
    raise ValueError(f"unknown slot {slot!r}")


def ybe_residual(Ra, Rb, Rc) -> SMat:
    """``R12(a) R13(b) R23(c) - R23(c) R13(b) R12(a)``."""
    na, _ = _as_smat(Ra)
    nb, _ = _as_smat(Rb)
    nc, _ = _as_smat(Rc)
    if not na == nb == nc:
        raise DimensionMismatch("R-matrices of different size")
    a, b, c = embed(Ra, 12), embed(Rb, 13), embed(Rc, 23)
    return a @ b @ c - c @ b @ a


def _triple(x12, x13, x23) -> SMat:
    return embed(x12, 12) @ embed(x13, 13) @ embed(x23, 23)


def _triple_rev(x12, x13, x23) -> SMat:
    return embed(x23, 23) @ embed(x13, 13) @ embed(x12, 12)


def contraction_residual(Ra, Rb, Rc, n: int = 2) -> dict:
    """Index form of the three-site relation on numeric or symbolic entries.

    Returns the dictionary mapping ``(j1, j2, j3, l1, l2, l3)`` (1-based)
    to ``sum R_{j1 j2}^{k1 k2} R_{k1 j3}^{l1 k3} R_{k2 k3}^{l2 l3}
    - R_{j2 j3}^{k2 k3} R_{j1 k3}^{k1 l3} R_{k1 k2}^{l1 l2}``.
    """
    rng = range(1, n + 1)

    def h(R, i, j, k, l):
        _, m = _as_smat(R)
        return m.entries.get(hietarinta_to_flat(i, j, k, l, n))

    out = {}
    for j1 in rng:
        for j2 in rng:
            for j3 in rng:
                for l1 in rng:
                    for l2 in rng:
                        for l3 in rng:
                            acc = 0
                            for k1 in rng:
                                for k2 in rng:
                                    for k3 in rng:
                                        t = _prod(h(Ra, j1, j2, k1, k2), h(Rb, k1, j3, l1, k3), h(Rc, k2, k3, l2, l3))
                                        s = _prod(h(Rc, j2, j3, k2, k3), h(Rb, j1, k3, k1, l3), h(Ra, k1, k2, l1, l2))
                                        acc = acc + t - s
                            out[(j1, j2, j3, l1, l2, l3)] = acc
    return out


def _prod(a, b, c):
    if a is None or b is None or c is None:
        return 0
    return a * b * c


def contraction_to_flat(key: tuple, n: int = 2) -> tuple[int, int]:
    """Matrix position of an index-form component.

    The index form lists tensor factors in the opposite order, and the two
    sides appear swapped, so component ``(j1 j2 j3, l1 l2 l3)`` equals minus
    the matrix residual at row ``(j3 j2 j1)`` and column ``(l3 l2 l1)``.
    Reversing the factors also swaps the 12 and 23 slots, so the index
    form of ``(Ra, Rb, Rc)`` pairs with ``ybe_residual(Rc, Rb, Ra)``.
    """
    j1, j2, j3, l1, l2, l3 = key
    row = ((j3 - 1) * n + (j2 - 1)) * n + (j1 - 1)
    col = ((l3 - 1) * n + (l2 - 1)) * n + (l1 - 1)
    return row, col


# -- seed catalog ---------------------------------------------------------------


@dataclass
class SeedClass:
    id: str
    template: RMatrixSymbolic
    side_conditions: list
    rank: int
    params: list = field(default_factory=list)
    aliases: list = field(default_factory=list)
    relations: list = field(default_factory=list)  # parameter constraints that must vanish

    @property
    def full_rank(self) -> bool:
        return self.rank == self.template.dim


class CatalogError(ValueError):
    pass


def _load_catalog_data() -> dict:
    text = resources.files("ybsearch").joinpath("data/seeds.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=1)
def _catalog() -> tuple:
    data = _load_catalog_data()
    if data.get("schema") != "ybsearch-seeds/1":
        raise CatalogError("unsupported seed catalog schema")
    out = []
    for item in data["seeds"]:
        tpl = RMatrixSymbolic.from_rows(item["rows"], Arg.ZERO)
        side = [parse_expr(s).num for s in item.get("nonzero", [])]
        rels = [parse_expr(s).num for s in item.get("relations", [])]
        seed = SeedClass(item["id"], tpl, side, int(item["rank"]), list(item.get("params", [])),
                         list(item.get("aliases", [])), rels)
        if not constant_ybe_check(tpl, rels):
            raise CatalogError(f"seed {seed.id} fails the constant YBE")
        out.append(seed)
    return tuple(out)


def seed_catalog() -> list[SeedClass]:
    return list(_catalog())


def get_seed(seed_id: str) -> SeedClass:
    for s in _catalog():
        if s.id == seed_id or seed_id in s.aliases:
            return s
    raise KeyError(f"unknown seed class {seed_id!r}")


def constant_ybe_check(C: RMatrixSymbolic, relations=()) -> bool:
    """Constant YBE, identically or modulo parameter ``relations``."""
    res = ybe_residual(C, C, C)
    vals = [cf.normalize(v) for v in res.entries.values()]
    if not relations:
        return all(v.is_zero() for v in vals)
    from ybsearch.groebner import buchberger, reduce

    basis = buchberger(relations)
    return all(reduce(v.num, basis).is_zero() for v in vals)


# -- relation families ---------------------------------------------------------


@dataclass
class RelationSet:
    """``A_u`` algebraic, ``D_u`` differential, ``D_0`` initial relations."""

    A_u: list = field(default_factory=list)
    D_u: list = field(default_factory=list)
    D_0: list = field(default_factory=list)

    def empty(self) -> bool:
        return not (self.A_u or self.D_u or self.D_0)

    def all(self) -> list:
        return list(self.A_u) + list(self.D_u) + list(self.D_0)

    def counts(self) -> tuple[int, int, int]:
        return len(self.A_u), len(self.D_u), len(self.D_0)


def relation_key(p: Poly) -> tuple:
    """Deterministic order: fewer terms, lower degree, then text."""
    return (len(p), p.total_degree(), p.to_text())


def clean_relations(polys: Iterable[Poly]) -> list[Poly]:
    """Content-strip, sign-normalize, drop zeros and duplicates, sort."""
    seen = {}
    for p in polys:
        if p.is_zero():
            continue
        q = primitive(p)
        seen.setdefault(q.to_text(), q)
    return sorted(seen.values(), key=relation_key)


def derivative_atoms(p: Poly) -> bool:
    for k in p.atoms():
        kind = atoms.atom_of(k).kind
        if kind == atoms.Kind.DERIV:
            return True
    return False


def has_init_deriv(p: Poly) -> bool:
    return any(atoms.atom_of(k).kind == atoms.Kind.INIT_DERIV for k in p.atoms())


def _poly_smat(R: RMatrixSymbolic) -> SMat:
    def conv(e: RatFunc) -> Poly:
        if not e.den.is_constant():
            raise ValueError("relation generation needs polynomial entries")
        return e.num / e.den.constant_value()

    return R.mat.map(conv)


def unknown_matrix(n: int = 2) -> SMat:
    d = n * n
    return SMat(d, {(r, c): Poly.var(atoms.entry(r + 1, c + 1, Arg.U)) for r in range(d) for c in range(d)})


def unknown_deriv_matrix(n: int = 2) -> SMat:
    d = n * n
    return SMat(d, {(r, c): Poly.var(atoms.deriv_of(atoms.entry(r + 1, c + 1, Arg.U)))
                    for r in range(d) for c in range(d)})


def init_deriv_matrix(n: int = 2) -> SMat:
    d = n * n
    return SMat(d, {(r, c): Poly.var(atoms.init_deriv(r + 1, c + 1)) for r in range(d) for c in range(d)})


def relation_matrices(R0: SMat, X: SMat, dX: SMat, dX0: SMat) -> dict[str, SMat]:
    """The six matrix relations built from R(0), R(u), R'(u) and R'(0)."""
    out = {}
    # R_YBE(u, 0) and R_YBE(0, u)
    out["alg1"] = _triple(X, X, R0) - _triple_rev(X, X, R0)
    out["alg2"] = _triple(R0, X, X) - _triple_rev(R0, X, X)
    # d/dv of R_YBE(u, v) at v = 0
    out["d1"] = (_triple(X, dX, R0) + _triple(X, X, dX0)
                 - _triple_rev(X, X, dX0) - _triple_rev(X, dX, R0))
    # d/dv of R_YBE(v, u) at v = 0
    out["d2"] = (_triple(dX0, X, X) + _triple(R0, dX, X)
                 - _triple_rev(R0, dX, X) - _triple_rev(dX0, X, X))
    # d/du of R_YBE(u, 0) and of R_YBE(0, u)
    out["d3"] = (_triple(dX, X, R0) + _triple(X, dX, R0)
                 - _triple_rev(X, dX, R0) - _triple_rev(dX, X, R0))
    out["d4"] = (_triple(R0, dX, X) + _triple(R0, X, dX)
                 - _triple_rev(R0, X, dX) - _triple_rev(R0, dX, X))
    return out


def initial_matrices(R0: SMat, dX0: SMat) -> dict[str, SMat]:
    out = {}
    out["i1"] = (_triple(dX0, R0, R0) + _triple(R0, dX0, R0)
                 - _triple_rev(R0, dX0, R0) - _triple_rev(dX0, R0, R0))
    out["i2"] = (_triple(R0, dX0, R0) + _triple(R0, R0, dX0)
                 - _triple_rev(R0, R0, dX0) - _triple_rev(R0, dX0, R0))
    return out


def generate_initial_relations(seed: SeedClass | RMatrixSymbolic) -> list[Poly]:
    tpl = seed.template if isinstance(seed, SeedClass) else seed
    R0 = _poly_smat(tpl)
    mats = initial_matrices(R0, init_deriv_matrix(tpl.n))
    return clean_relations(v for m in mats.values() for v in m.entries.values())


def generate_relations(seed: SeedClass | RMatrixSymbolic) -> RelationSet:
    """Build ``A_u``, ``D_u`` and ``D_0`` for the seed as R(0)."""
    tpl = seed.template if isinstance(seed, SeedClass) else seed
    n = tpl.n
    R0 = _poly_smat(tpl)
    X = unknown_matrix(n)
    dX = unknown_deriv_matrix(n)
    dX0 = init_deriv_matrix(n)
    mats = relation_matrices(R0, X, dX, dX0)
    alg = [v for k in ("alg1", "alg2") for v in mats[k].entries.values()]
    diff = [v for k in ("d1", "d2", "d3", "d4") for v in mats[k].entries.values()]
    init = generate_initial_relations(tpl)
    A = list(alg) + (list(seed.relations) if isinstance(seed, SeedClass) else [])
    D = []
    for p in diff:
        (D if derivative_atoms(p) else A).append(p)
    I0 = []
    for p in init:
        (I0 if has_init_deriv(p) else A).append(p)
    return RelationSet(clean_relations(A), clean_relations(D), clean_relations(I0))


def substitute_matrix(mat: SMat, values: dict) -> SMat:
    """Substitute atoms by Poly values in every entry."""
    return mat.map(lambda p: p.subs(values))


__all__ = [
    "RMatrixSymbolic",
    "SeedClass",
    "RelationSet",
    "embed",
    "ybe_residual",
    "generate_relations",
    "generate_initial_relations",
    "constant_ybe_check",
    "seed_catalog",
    "get_seed",
    "hietarinta_to_flat",
    "flat_to_hietarinta",
    "contraction_residual",
    "contraction_to_flat",
]
