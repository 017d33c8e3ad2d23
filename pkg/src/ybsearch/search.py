"""Branching search for spectral R-matrices seeded by a constant solution.

The search keeps a graph of partial solutions.  Every vertex holds an
assignment of some unknowns, side conditions that must stay nonzero, and
the relation lists ``A_u`` (algebraic in R(u)), ``D_u`` (involving R'(u))
and ``D_0`` (initial relations in R'(0)).  Each round picks a method by a
fixed cascade, solves the selected equations and creates one child per
solution branch.

Stages:

1. build relations from the seed and fix the scalar gauge
2. solve ``D_0`` for R'(0)
3. solve ``A_u`` and ``D_u`` for the entries of R(u)
4. verify every candidate against the full two-variable equation
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from ybsearch import closedform as cf
from ybsearch.algebra import atoms
from ybsearch.algebra.atoms import Arg, Kind
from ybsearch.algebra.factor import distinct_factors, primitive
from ybsearch.algebra.linsolve import NonlinearSystem, is_known_nonzero, solve_linear
from ybsearch.algebra.poly import ONE, ZERO, Poly
from ybsearch.algebra.ratfunc import RatFunc, exact_div
from ybsearch.groebner import GroebnerConfig, buchberger, is_inconsistent, triangular_extract
from ybsearch.relations import (RMatrixSymbolic, RelationSet, SeedClass, clean_relations,
                                derivative_atoms, generate_relations, get_seed, has_init_deriv,
                                relation_key)
from ybsearch.textio import parse_expr, parse_poly
from ybsearch import verifier

log = logging.getLogger(__name__)

GRAPH_SCHEMA = "ybsearch-graph/1"


class SchemaMismatch(ValueError):
    pass


class Exhausted(Exception):
    """No method of the cascade applies to the vertex."""


class NoProgress(Exception):
    pass


class Mode(str, Enum):
    INVERTIBLE = "invertible"
    RANK3 = "rank3"


class Method(str, Enum):
    LINEAR = "Linear"
    PRODUCT = "Product"
    GROEBNER = "Groebner"
    DIFFERENTIAL = "Differential"


class Stage(str, Enum):
    INIT = "Init"
    MAIN = "Main"


@dataclass
class Tuning:
    n_term: int = 4
    n_diff: int = 8
    n_lim: int = 24
    pair_budget: int = 2000
    reduce_budget: int = 200_000
    branch_depth: int = 6
    max_vertices: int = 2000
    gauge: bool = True

    def __post_init__(self):
        for k, v in asdict(self).items():
            if k != "gauge" and (not isinstance(v, int) or v <= 0):
                raise ValueError(f"tuning value {k} must be a positive integer")

    def groebner(self) -> GroebnerConfig:
        return GroebnerConfig(pair_budget=self.pair_budget, reduce_budget=self.reduce_budget)


# -- vertices ---------------------------------------------------------------


@dataclass
class Vertex:
    id: int
    assignment: dict = field(default_factory=dict)  # atom id -> RatFunc
    side: list = field(default_factory=list)  # Polys that must not vanish
    rels: RelationSet = field(default_factory=RelationSet)
    stopped: bool = False
    temp_stopped: bool = False
    finalized: bool = False
    deferred: bool = False  # Exhausted or over budget, resumable
    parent_edges: list = field(default_factory=list)
    children: list = field(default_factory=list)
    merged_into: int | None = None
    note: str = ""
    splits: int = 0
    solution: list | None = None  # rows of text once Finalized
    solution_side: list = field(default_factory=list)  # side conditions in free functions

    def is_leaf(self) -> bool:
        return not self.children and self.merged_into is None

    def flags(self) -> list[str]:
        out = []
        if self.stopped:
            out.append("Stopped")
        if self.temp_stopped:
            out.append("TempStopped")
        if self.finalized:
            out.append("Finalized")
        if self.deferred:
            out.append("Deferred")
        return out

    def identity(self) -> tuple:
        return (tuple(tuple(x) for x in _assignment_text(self.assignment)),
                tuple(p.to_text() for p in self.rels.A_u),
                tuple(p.to_text() for p in self.rels.D_u),
                tuple(p.to_text() for p in self.rels.D_0))


def _assignment_text(assign: dict) -> list:
    items = sorted(assign.items(), key=lambda kv: atoms.order_key(kv[0]))
    return [[atoms.atom_of(k).text(), v.to_text()] for k, v in items]


@dataclass
class RmGraph:
    seed_id: str
    mode: Mode
    tuning: Tuning
    vertices: list = field(default_factory=list)
    root: int = 0
    stage: int = 1
    runs: list = field(default_factory=list)
    gauge_entry: tuple | None = None

    def add(self, v: Vertex) -> Vertex:
        v.id = len(self.vertices)
        self.vertices.append(v)
        return v

    def __getitem__(self, i: int) -> Vertex:
        return self.vertices[i]

    @property
    def seed(self) -> SeedClass:
        return get_seed(self.seed_id)

    def finalized(self) -> list[Vertex]:
        return [v for v in self.vertices if v.finalized]

    def summary(self) -> dict:
        return {
            "vertices": len(self.vertices),
            "finalized": sum(v.finalized for v in self.vertices),
            "stopped": sum(v.stopped for v in self.vertices),
            "merged": sum(v.merged_into is not None for v in self.vertices),
            "exhausted": sum(v.deferred for v in self.vertices),
        }


def get_todo_vertices(g: RmGraph) -> list[int]:
    """Childless vertices without flags, in ascending id order."""
    return [v.id for v in g.vertices
            if v.is_leaf() and not (v.stopped or v.temp_stopped or v.finalized or v.deferred)]


# -- atom helpers -----------------------------------------------------------


def _kind(k: int) -> Kind:
    return atoms.atom_of(k).kind


def _is_entry_u(k: int) -> bool:
    a = atoms.atom_of(k)
    return a.kind == Kind.ENTRY and a.arg == Arg.U


def _is_param(k: int) -> bool:
    return _kind(k) in (Kind.SEED_PARAM, Kind.INIT_DERIV, Kind.INT_CONST)


def _is_function_atom(k: int) -> bool:
    return _kind(k) in (Kind.ENTRY, Kind.DERIV, Kind.FREE_FUNC)


def _entry_base(k: int) -> int | None:
    """Entry atom behind an entry or its derivative."""
    a = atoms.atom_of(k)
    if a.kind == Kind.ENTRY and a.arg == Arg.U:
        return k
    if a.kind == Kind.DERIV and a.payload[0].kind == Kind.ENTRY:
        return atoms.intern(a.payload[0])
    return None


def _seed_map(seed: SeedClass) -> dict:
    """R(0) entry values keyed by ``(row, col)``, 1-based."""
    out = {}
    n = seed.template.dim
    for r in range(n):
        for c in range(n):
            out[(r + 1, c + 1)] = seed.template.get(r, c)
    return out


def at_zero(e, seed_vals: dict, assignment: dict) -> tuple[Poly, Poly]:
    """Evaluate a u-dependent expression at u = 0 as ``(num, den)``.

    Entries become their seed values, entry derivatives become R'(0)
    atoms (then assigned values where known), exponentials become 1.
    """
    e = RatFunc.of(e)
    frac = {}
    u = atoms.spectral("u")
    for k in e.atoms():
        a = atoms.atom_of(k)
        if k == u:
            frac[k] = (ZERO, ONE)
        elif a.kind == Kind.EXP and a.arg == Arg.U:
            frac[k] = (ONE, ONE)
        elif a.kind == Kind.ENTRY and a.arg == Arg.U:
            v = RatFunc.of(seed_vals[a.payload[:2]])
            frac[k] = (v.num, v.den)
        elif a.kind == Kind.DERIV and a.payload[0].kind == Kind.ENTRY:
            r, c = a.payload[0].payload[:2]
            d = atoms.init_deriv(r, c)
            v = assignment.get(d, RatFunc(Poly.var(d)))
            frac[k] = (v.num, v.den)
    n1, d1 = e.num.subs_frac(frac)
    n2, d2 = e.den.subs_frac(frac)
    n, d = cf.normalize_poly(n1 * d2), cf.normalize_poly(n2 * d1)
    # parameters assigned after the value was formed
    n, dn = cf.subs_poly(n, assignment)
    d, dd = cf.subs_poly(d, assignment)
    return cf.normalize_poly(n * dd), cf.normalize_poly(d * dn)


# -- relation cleanup -------------------------------------------------------

_UNIT_KINDS = (Kind.EXP,)


def _strip_units(p: Poly, side: Sequence[Poly]) -> Poly:
    """Remove constant, exponential, ``u`` and known-nonzero factors."""
    if p.is_zero():
        return p
    p = primitive(p)
    m = p.monomial_content()
    if m:
        keep = tuple((k, e) for k, e in m if not _strippable_monomial_atom(k, side))
        if keep != m:
            drop = tuple((k, e) for k, e in m if _strippable_monomial_atom(k, side))
            p = Poly._raw({_mono_div(mm, drop): c for mm, c in p.terms.items()})
    if len(p) > 1 and side:
        changed = True
        while changed and not p.is_constant():
            changed = False
            for q in side:
                if q.is_constant() or len(q) > len(p):
                    continue
                d = exact_div(p, q)
                if d is not None:
                    p = primitive(d)
                    changed = True
                    break
    return primitive(p)


def _strippable_monomial_atom(k: int, side) -> bool:
    a = atoms.atom_of(k)
    if a.kind == Kind.EXP or (a.kind == Kind.SPECTRAL) or a.kind == Kind.ALGEBRAIC:
        return True
    pk = Poly.var(k)
    return any(q == pk for q in side)


def _mono_div(m, drop):
    d = dict(drop)
    return tuple((k, e - d.get(k, 0)) for k, e in m if e - d.get(k, 0) > 0)


def _split_identity(p: Poly) -> list[Poly]:
    """A function-free relation with u or exponentials must vanish
    coefficient by coefficient (distinct exponentials are taken as
    linearly independent)."""
    sp = {k for k in p.atoms() if _kind(k) in (Kind.SPECTRAL, Kind.EXP)}
    if not sp:
        return [p]
    return list(p.split(sp).values())


def transform_equations_lists(v: Vertex, stage: Stage) -> None:
    """Normalize relation lists in place and set Stop/TempStop flags."""
    buckets = {"A": [], "D": [], "I": []}
    for name, lst in (("A", v.rels.A_u), ("D", v.rels.D_u), ("I", v.rels.D_0)):
        for p in lst:
            p = cf.normalize_poly(p)
            if p.is_zero():
                continue
            if not any(_is_function_atom(k) for k in p.atoms()):
                parts = _split_identity(p)
            else:
                parts = [p]
            for q in parts:
                q = _strip_units(q, v.side)
                if q.is_zero():
                    continue
                if q.is_constant() or is_known_nonzero(q, v.side):
                    v.stopped = True
                    v.note = f"{v.note}; inconsistent relation".lstrip("; ")
                    return
                if derivative_atoms(q):
                    buckets["D"].append(q)
                elif name == "I" and has_init_deriv(q) and stage == Stage.INIT:
                    buckets["I"].append(q)
                else:
                    buckets["A"].append(q)
    v.rels = RelationSet(clean_relations(buckets["A"]), clean_relations(buckets["D"]),
                         clean_relations(buckets["I"]))
    if stage == Stage.INIT:
        v.temp_stopped = not v.rels.D_0
    else:
        v.temp_stopped = not v.rels.A_u and not v.rels.D_u


def _clean_side(side: Iterable[Poly]) -> list[Poly] | None:
    """Distinct nonconstant factors; None if some condition is violated."""
    seen = {}
    for p in side:
        p = cf.normalize_poly(p)
        if p.is_zero():
            return None
        if p.is_constant():
            continue
        for f in distinct_factors(p):
            if f.is_constant():
                continue
            if all(_kind(k) in (Kind.EXP, Kind.ALGEBRAIC) for k in f.atoms()) and f.is_monomial():
                continue
            f = primitive(f)
            seen.setdefault(f.to_text(), f)
    return [seen[k] for k in sorted(seen)]


# -- solutions --------------------------------------------------------------


@dataclass
class Solution:
    """One branch produced by a method.

    ``replace`` names a relation list replaced wholesale by ``relations``;
    otherwise ``relations`` are appended to ``A_u`` and ``drop`` removed.
    """

    assignment: dict = field(default_factory=dict)
    side: list = field(default_factory=list)
    relations: list = field(default_factory=list)
    drop: list = field(default_factory=list)
    replace: str | None = None
    note: str = ""
    split: bool = False


def _stage_list(v: Vertex, stage: Stage) -> list[Poly]:
    return v.rels.D_0 if stage == Stage.INIT else v.rels.A_u


def _stage_unknowns(eqs: Iterable[Poly], stage: Stage) -> set[int]:
    kinds = (Kind.INIT_DERIV,) if stage == Stage.INIT else (Kind.ENTRY,)
    out = set()
    for p in eqs:
        for k in p.atoms():
            a = atoms.atom_of(k)
            if a.kind in kinds and (a.kind != Kind.ENTRY or a.arg == Arg.U):
                out.add(k)
    return out


def _is_linear_in(p: Poly, unk: set[int]) -> bool:
    for m in p.terms:
        if sum(e for k, e in m if k in unk) > 1:
            return False
    return True


def _param_pick(p: Poly) -> int | None:
    """Parameter to solve a function-free relation for, if it is linear in one."""
    best = None
    for k in sorted(p.atoms(), key=atoms.order_key):
        if not _is_param(k) or p.degree_in(k) != 1:
            continue
        coeff = p.coeffs_in(k)[1]
        cand = (0 if coeff.is_constant() else 1, len(coeff), atoms.order_key(k))
        if best is None or cand < best[0]:
            best = (cand, k)
    return None if best is None else best[1]


def select_eqns(v: Vertex, tuning: Tuning, stage: Stage, skip: Iterable[Method] = ()):
    """Pick ``(method, equations, unknowns)`` by the fixed cascade.

    Raises :class:`Exhausted` when no method applies.
    """
    skip = set(skip)
    lst = _stage_list(v, stage)
    unk = _stage_unknowns(lst, stage)
    if Method.LINEAR not in skip:
        lin = [p for p in lst if len(p) <= tuning.n_term and p.has_any(unk) and _is_linear_in(p, unk)]
        if lin:
            return Method.LINEAR, lin, unk
        # relations among parameters alone
        for p in lst:
            if len(p) <= tuning.n_term and not any(_is_function_atom(k) for k in p.atoms()):
                if stage == Stage.INIT and has_init_deriv(p):
                    continue
                x = _param_pick(p)
                if x is not None:
                    return Method.LINEAR, [p], {x}
    if Method.PRODUCT not in skip:
        for p in lst:
            if len(distinct_factors(p)) > 1:
                return Method.PRODUCT, [p], unk
    if Method.GROEBNER not in skip and lst and len(lst) < tuning.n_lim:
        return Method.GROEBNER, list(lst), unk
    if stage == Stage.MAIN and Method.DIFFERENTIAL not in skip:
        cands = [p for p in v.rels.D_u if len(p) <= tuning.n_diff]
        if cands:
            return Method.DIFFERENTIAL, sorted(cands, key=relation_key), unk
    raise Exhausted("no applicable method")


def reduce_vertex_eqns(v: Vertex, method: Method, eqns: list, unknowns: set,
                       tuning: Tuning, stage: Stage, seed_vals: dict | None = None) -> list[Solution]:
    """Solve the selected equations; an empty list means no solutions."""
    depth_left = max(tuning.branch_depth - v.splits, 0)
    if method == Method.LINEAR:
        try:
            branches = solve_linear(eqns, unknowns, v.side, depth_left)
        except NonlinearSystem as exc:  # pragma: no cover - guarded by select_eqns
            raise NoProgress(str(exc))
        out = []
        multi = len(branches) > 1
        for br in branches:
            if br.inconsistent:
                continue
            out.append(Solution(dict(br.assignment), list(br.side_conditions), list(br.relations),
                                note="Linear", split=multi))
        return out
    if method == Method.PRODUCT:
        (eq,) = eqns
        fs = distinct_factors(eq)
        out = []
        for i, f in enumerate(fs):
            # disjoint cases: earlier factors are nonzero in later branches
            out.append(Solution(relations=[f], side=list(fs[:i]), drop=[eq], note="Product", split=True))
        return out
    if method == Method.GROEBNER:
        b = buchberger(eqns, tuning.groebner())
        if not b.complete:
            raise NoProgress("Groebner budget exceeded")
        if is_inconsistent(b):
            return []
        tri_unk = {k for p in b.generators for k in p.atoms()
                   if _kind(k) in (Kind.ENTRY, Kind.INIT_DERIV) or (stage == Stage.MAIN and _is_param(k))}
        if stage == Stage.INIT:
            tri_unk = {k for k in tri_unk if _kind(k) == Kind.INIT_DERIV}
        branches = triangular_extract(b, tri_unk, v.side, depth_left)
        original = {p.to_text() for p in eqns}
        out = []
        progressed = False
        for br in branches:
            if br.inconsistent:
                continue
            rel_text = {primitive(p).to_text() for p in br.relations}
            if br.assignment or rel_text != original:
                progressed = True
            out.append(Solution(dict(br.assignment), list(br.side_conditions), list(br.relations),
                                replace="D_0" if stage == Stage.INIT else "A_u", note="Groebner",
                                split=len(branches) > 1))
        if branches and not progressed:
            raise NoProgress("basis gives nothing new")
        if out and all(not s.assignment for s in out) and len(out) == 1:
            # one branch that only rewrites the list: keep it when it is smaller
            new_terms = sum(len(p) for p in out[0].relations)
            if new_terms >= sum(len(p) for p in eqns):
                raise NoProgress("basis is not smaller")
        return out
    if method == Method.DIFFERENTIAL:
        for eq in eqns:
            try:
                return solve_differential(eq, v, seed_vals)
            except cf.Unsupported:
                continue
        raise Exhausted("no differential relation in the supported fragment")
    raise ValueError(method)


def solve_differential(eq: Poly, v: Vertex, seed_vals: dict | None = None) -> list[Solution]:
    """Isolate the derivative of the single unknown function in ``eq`` and
    integrate.  Raises :class:`cf.Unsupported` outside the fragment."""
    funcs = {k for k in eq.atoms() if _is_function_atom(k)}
    bases = {_entry_base(k) for k in funcs}
    if None in bases or len(bases) != 1:
        raise cf.Unsupported("needs exactly one unknown function")
    (x,) = bases
    dx = atoms.deriv_of(x)
    if dx not in funcs:
        raise cf.Unsupported("no derivative present")
    out: list[Solution] = []
    factors = distinct_factors(eq)
    r, c = atoms.atom_of(x).payload[:2]
    seed_val = None if seed_vals is None else seed_vals[(r, c)]
    for i, f in enumerate(factors):
        prior = list(factors[:i])
        if not f.has_any({dx}):
            out.append(Solution(relations=[f], side=prior, drop=[eq], note="Differential", split=True))
            continue
        if f.degree_in(dx) != 1:
            raise cf.Unsupported("derivative enters nonlinearly")
        parts = f.coeffs_in(dx)
        a, b = parts[1], parts.get(0, ZERO)
        rhs = cf.normalize(RatFunc(-b, a))
        sol = cf.ode_solve_linear(rhs, x, init=seed_val)
        side = prior + [g for g in distinct_factors(a) if not g.is_constant() and not g.has_any({x})]
        out.append(Solution({x: sol}, side, [], drop=[eq], note="Differential", split=len(factors) > 1))
        # when the leading coefficient vanishes the equation is lost; keep that case
        for g in distinct_factors(a):
            if g.is_constant() or is_known_nonzero(g, v.side):
                continue
            out.append(Solution(relations=[g], side=prior, note="Differential", split=True))
    return out


# -- applying solutions -----------------------------------------------------


def _expand(delta: dict) -> dict:
    out = dict(delta)
    for k, val in delta.items():
        if _is_entry_u(k):
            out[atoms.deriv_of(k)] = cf.differentiate(val)
    return out


def _subs_list(lst: Iterable[Poly], delta: dict) -> list[Poly]:
    out = []
    for p in lst:
        if p.has_any(delta.keys()) or _has_dependent_exp(p, delta):
            n, _ = cf.subs_poly(p, delta)
            p = n
        if not p.is_zero():
            out.append(p)
    return out


def _has_dependent_exp(p: Poly, delta: dict) -> bool:
    for k in p.atoms():
        a = atoms.atom_of(k)
        if a.kind == Kind.EXP and atoms.RATES[a.payload[0]].atoms() & delta.keys():
            return True
    return False


def apply_solution(parent: Vertex, sol: Solution, seed_vals: dict, stage: Stage, mode: Mode) -> Vertex:
    """Child vertex for one branch (id assigned on commit)."""
    delta = {k: cf.normalize(val) for k, val in sol.assignment.items()}
    full = _expand(delta)
    child = Vertex(-1, parent_edges=[parent.id], note=sol.note, splits=parent.splits + (1 if sol.split else 0))
    # earlier values in terms of the new ones
    assign = {}
    for k, val in parent.assignment.items():
        if val.atoms() & full.keys() or _has_dependent_exp(val.num, full) or _has_dependent_exp(val.den, full):
            val = cf.substitute(val, full)
        assign[k] = val
    assign.update(delta)
    child.assignment = assign
    side = [p for p in parent.side]
    side = _subs_list(side, full) if full else side
    if len(side) != len(parent.side):
        child.stopped = True
        child.note += "; side condition violated"
        child.rels = RelationSet()
        return child
    for val in delta.values():
        side.append(val.den)
    side.extend(sol.side)
    cleaned = _clean_side(side)
    if cleaned is None:
        child.stopped = True
        child.note += "; side condition violated"
        child.rels = RelationSet()
        return child
    child.side = cleaned

    dropped = {p.to_text() for p in sol.drop}
    A = [p for p in parent.rels.A_u if p.to_text() not in dropped]
    D = [p for p in parent.rels.D_u if p.to_text() not in dropped]
    I0 = [p for p in parent.rels.D_0 if p.to_text() not in dropped]
    if sol.replace == "A_u":
        A = list(sol.relations)
    elif sol.replace == "D_0":
        I0 = list(sol.relations)
    else:
        A = A + list(sol.relations)
    if full:
        A, D, I0 = _subs_list(A, full), _subs_list(D, full), _subs_list(I0, full)
    # values must reproduce the seed and R'(0) at u = 0
    for k, val in delta.items():
        if not _is_entry_u(k):
            continue
        r, c = atoms.atom_of(k).payload[:2]
        n0, d0 = at_zero(val, seed_vals, assign)
        s = RatFunc.of(seed_vals[(r, c)])
        A.append(cf.normalize_poly(n0 * s.den - d0 * s.num))
        dval = full[atoms.deriv_of(k)]
        n1, d1 = at_zero(dval, seed_vals, assign)
        ideriv = atoms.init_deriv(r, c)
        target = assign.get(ideriv, RatFunc(Poly.var(ideriv)))
        A.append(cf.normalize_poly(n1 * target.den - d1 * target.num))
    child.rels = RelationSet(A, D, I0)
    transform_equations_lists(child, stage)
    if not child.stopped and mode == Mode.INVERTIBLE:
        if _forced_singular(child, seed_vals):
            child.stopped = True
            child.note += "; singular"
    return child


def current_matrix(v: Vertex, n: int = 4) -> RMatrixSymbolic:
    rows = []
    for r in range(1, n + 1):
        row = []
        for c in range(1, n + 1):
            k = atoms.entry(r, c, Arg.U)
            row.append(v.assignment.get(k, RatFunc(Poly.var(k))))
        rows.append(row)
    return RMatrixSymbolic.from_rows(rows)


def _forced_singular(v: Vertex, seed_vals: dict) -> bool:
    n = int(round(len(seed_vals) ** 0.5))
    if not any(_is_entry_u(k) for k in v.assignment):
        return False
    return verifier.determinant(current_matrix(v, n)).is_zero()


def unite_vertices(g: RmGraph, new_ids: Sequence[int], index: dict) -> None:
    """Merge new vertices into older ones with the same canonical content."""
    for i in new_ids:
        v = g[i]
        if v.stopped:
            continue
        key = v.identity()
        old = index.get(key)
        if old is not None and old != i:
            v.merged_into = old
            v.note += f"; merged into {old}"
        else:
            index[key] = i


# -- the driver -------------------------------------------------------------


def _measure(v: Vertex) -> tuple:
    """Termination measure: unknown atoms, then total degree, then terms."""
    unk = set()
    terms = 0
    degree = 0
    for p in v.rels.all():
        terms += len(p)
        degree += p.total_degree()
        for k in p.atoms():
            if _kind(k) in (Kind.ENTRY, Kind.INIT_DERIV, Kind.SEED_PARAM, Kind.INT_CONST):
                unk.add(k)
    return (len(unk), degree, terms)


def process_vertex(v: Vertex, seed_vals: dict, tuning: Tuning, stage: Stage, mode: Mode):
    """Run one round on ``v``.  Returns ``(children, outcome note)``;
    ``children`` is None when the vertex becomes Deferred."""
    skip: list = []
    while True:
        try:
            method, eqns, unk = select_eqns(v, tuning, stage, skip)
        except Exhausted:
            return None, "Exhausted"
        try:
            sols = reduce_vertex_eqns(v, method, eqns, unk, tuning, stage, seed_vals)
        except NoProgress:
            skip.append(method)
            continue
        except Exhausted:
            return None, "Exhausted"
        break
    if not sols:
        return [], "No solutions"
    before = _measure(v)
    children = []
    for s in sols:
        ch = apply_solution(v, s, seed_vals, stage, mode)
        if not ch.stopped and not _measure(ch) < before:
            ch.stopped = True
            ch.note += "; no progress"
        children.append(ch)
    return children, method.value


def _process_text(payload):
    """Process-pool entry: everything crosses the boundary as text."""
    vdoc, seed_id, tdoc, stage, mode = payload
    seed = get_seed(seed_id)
    seed_vals = _seed_map(seed)
    v = vertex_from_doc(vdoc)
    children, note = process_vertex(v, seed_vals, Tuning(**tdoc), Stage(stage), Mode(mode))
    if children is None:
        return None, note
    return [vertex_to_doc(c) for c in children], note


def _commit(g: RmGraph, v: Vertex, children, note: str, index: dict) -> None:
    if children is None:
        v.deferred = True
        v.note = note
        return
    if not children:
        v.stopped = True
        v.note = note
        return
    ids = []
    for ch in children:
        g.add(ch)
        v.children.append(ch.id)
        ids.append(ch.id)
    unite_vertices(g, ids, index)


def run_stage(g: RmGraph, stage: Stage, jobs: int = 1) -> None:
    seed_vals = _seed_map(g.seed)
    index = {g[i].identity(): i for i in range(len(g.vertices))
             if not g[i].stopped and g[i].merged_into is None}
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while True:
            todo = get_todo_vertices(g)
            if not todo:
                break
            if len(g.vertices) >= g.tuning.max_vertices:
                for i in todo:
                    g[i].deferred = True
                    g[i].note = "vertex budget"
                break
            if pool is not None:
                payloads = [(vertex_to_doc(g[i]), g.seed_id, asdict(g.tuning), stage.value, g.mode.value)
                            for i in todo]
                results = list(pool.map(_process_text, payloads))
                results = [(None if ch is None else [vertex_from_doc(d) for d in ch], note)
                           for ch, note in results]
            else:
                results = [process_vertex(g[i], seed_vals, g.tuning, stage, g.mode) for i in todo]
            for i, (children, note) in zip(todo, results):
                if len(g.vertices) >= g.tuning.max_vertices:
                    g[i].deferred = True
                    g[i].note = "vertex budget"
                    continue
                _commit(g, g[i], children, note, index)
    finally:
        if pool is not None:
            pool.shutdown()
    for v in g.vertices:
        v.temp_stopped = False


def stage1(seed: SeedClass | str, mode: Mode | str | None = None, tuning: Tuning | None = None) -> RmGraph:
    """Root vertex with all relations; the first nonzero seed entry is held
    fixed (the equation is invariant under R(u) -> f(u) R(u))."""
    if isinstance(seed, str):
        seed = get_seed(seed)
    tuning = tuning or Tuning()
    if mode is None:
        mode = Mode.INVERTIBLE if seed.full_rank else Mode.RANK3
    g = RmGraph(seed.id, Mode(mode), tuning)
    g.runs.append({"tuning": asdict(tuning)})
    rels = generate_relations(seed)
    root = Vertex(0, side=_clean_side(seed.side_conditions) or [], rels=rels, note="root")
    g.add(root)
    seed_vals = _seed_map(seed)
    if tuning.gauge:
        for (r, c), val in sorted(seed_vals.items()):
            if not val.is_zero():
                g.gauge_entry = (r, c)
                k = atoms.entry(r, c, Arg.U)
                sol = Solution({k: val, atoms.init_deriv(r, c): RatFunc.of(0)}, note="gauge")
                fixed = apply_solution(root, sol, seed_vals, Stage.INIT, g.mode)
                root.assignment, root.side, root.rels = fixed.assignment, fixed.side, fixed.rels
                break
    transform_equations_lists(root, Stage.INIT)
    root.temp_stopped = False
    return g


def stage2(g: RmGraph, jobs: int = 1) -> RmGraph:
    run_stage(g, Stage.INIT, jobs)
    g.stage = 2
    return g


def _enter_main(g: RmGraph) -> None:
    """Leftover initial relations become parameter relations."""
    for v in g.vertices:
        if v.is_leaf() and not v.stopped and not v.finalized:
            if v.rels.D_0:
                v.rels = RelationSet(v.rels.A_u + v.rels.D_0, v.rels.D_u, [])
                transform_equations_lists(v, Stage.MAIN)
            v.deferred = False
            v.temp_stopped = False


def stage3(g: RmGraph, jobs: int = 1) -> RmGraph:
    _enter_main(g)
    run_stage(g, Stage.MAIN, jobs)
    g.stage = 3
    return g


# -- stage 4 ----------------------------------------------------------------


def candidate_matrix(v: Vertex, n: int = 4) -> RMatrixSymbolic:
    """Closed form of a candidate; unassigned entries become free functions."""
    return _candidate(v, n)[0]


def _candidate(v: Vertex, n: int):
    free = {}
    full = {}
    k = 0
    for r in range(1, n + 1):
        for c in range(1, n + 1):
            e = atoms.entry(r, c, Arg.U)
            if e not in v.assignment:
                k += 1
                f = atoms.free_func(k, Arg.U)
                free[e] = RatFunc(Poly.var(f))
                full[e] = free[e]
                full[atoms.deriv_of(e)] = RatFunc(Poly.var(atoms.deriv_of(f)))
    rows = []
    for r in range(1, n + 1):
        row = []
        for c in range(1, n + 1):
            e = atoms.entry(r, c, Arg.U)
            val = v.assignment.get(e)
            row.append(free[e] if val is None else cf.substitute(val, full))
        rows.append(row)
    return RMatrixSymbolic.from_rows(rows), full


def _is_candidate(v: Vertex) -> bool:
    return (v.is_leaf() and not v.stopped and not v.finalized and not v.deferred
            and not v.rels.A_u and not v.rels.D_u and not v.rels.D_0)


def stage4(g: RmGraph) -> RmGraph:
    """Verify candidates; one extra pass zeroing a free function when a
    residual entry is a single product of them."""
    n = g.seed.template.dim
    relations = list(g.seed.relations)
    for v in list(g.vertices):
        if not _is_candidate(v):
            continue
        R, full = _candidate(v, n)
        side = [cf.substitute(RatFunc(p), full) for p in v.side]
        res = verifier.verify_spectral(R, relations)
        if not res.passed:
            R, zero = _residual_pass(R, res, relations)
            if R is not None:
                side = [cf.substitute(x, zero) for x in side]
                if any(x.is_zero() for x in side):
                    v.stopped = True
                    v.note += "; residual contradicts side condition"
                    continue
            res = verifier.verify_spectral(R, relations) if R is not None else res
        if res.passed and g.mode == Mode.INVERTIBLE and verifier.determinant(R).is_zero():
            v.stopped = True
            v.note += "; singular candidate"
            continue
        if res.passed:
            v.finalized = True
            v.solution = R.to_text_rows()
            v.solution_side = sorted({x.num.to_text() for x in side
                                      if not x.is_constant()})
        else:
            v.stopped = True
            v.note += "; fails full equation"
    g.stage = 4
    return g


def _residual_pass(R: RMatrixSymbolic, res, relations) -> tuple[RMatrixSymbolic | None, dict]:
    witness = parse_expr(res.failing_entry[2]).num
    if not witness.is_monomial():
        return None, {}
    (mono, _), = witness.terms.items()
    funcs = [k for k, _ in mono if _kind(k) == Kind.FREE_FUNC]
    if len(funcs) != 1:
        return None, {}
    base = atoms.atom_of(funcs[0]).payload[0]
    zero = {atoms.free_func(base, Arg.U): RatFunc.of(0),
            atoms.deriv_of(atoms.free_func(base, Arg.U)): RatFunc.of(0)}
    return R.map(lambda e: cf.substitute(e, zero)), zero


def search(seed: SeedClass | str, mode=None, tuning: Tuning | None = None, jobs: int = 1) -> RmGraph:
    """Stages 1 to 4 in sequence."""
    g = stage1(seed, mode, tuning)
    stage2(g, jobs)
    stage3(g, jobs)
    stage4(g)
    return g


def resume(g: RmGraph, tuning: Tuning | None = None, jobs: int = 1) -> RmGraph:
    """Continue Deferred leaves under a new tuning; other states are kept."""
    if tuning is not None:
        g.tuning = tuning
    g.runs.append({"tuning": asdict(g.tuning)})
    pending = [v for v in g.vertices if v.deferred and v.is_leaf()]
    if not pending:
        return g
    for v in pending:
        v.deferred = False
    init_pending = any(v.rels.D_0 for v in pending)
    if init_pending and g.stage <= 2:
        stage2(g, jobs)
    stage3(g, jobs)
    stage4(g)
    return g


# -- solutions report -------------------------------------------------------


def solutions(g: RmGraph) -> list[dict]:
    out = []
    for v in g.finalized():
        out.append({
            "id": f"{g.seed_id}-v{v.id}",
            "group": g.seed_id,
            "kind": "spectral",
            "vertex": v.id,
            "rows": v.solution,
            "side_conditions": list(v.solution_side),
            "relations": [p.to_text() for p in g.seed.relations],
        })
    return out


# -- persistence ------------------------------------------------------------


def vertex_to_doc(v: Vertex) -> dict:
    return {
        "id": v.id,
        "flags": v.flags(),
        "parents": list(v.parent_edges),
        "children": list(v.children),
        "merged_into": v.merged_into,
        "note": v.note,
        "splits": v.splits,
        "assignment": _assignment_text(v.assignment),
        "side": [p.to_text() for p in v.side],
        "A_u": [p.to_text() for p in v.rels.A_u],
        "D_u": [p.to_text() for p in v.rels.D_u],
        "D_0": [p.to_text() for p in v.rels.D_0],
        "solution": v.solution,
        "solution_side": list(v.solution_side),
    }


def _parse_atom(text: str) -> int:
    p = parse_expr(text).num
    (mono, _), = p.terms.items()
    return mono[0][0]


def _poly(text: str) -> Poly:
    return parse_poly(text)


def vertex_from_doc(d: dict) -> Vertex:
    flags = set(d.get("flags", []))
    assign = {}
    for a, val in d.get("assignment", []):
        assign[_parse_atom(a)] = parse_expr(val)
    rels = RelationSet([_poly(t) for t in d.get("A_u", [])], [_poly(t) for t in d.get("D_u", [])],
                       [_poly(t) for t in d.get("D_0", [])])
    return Vertex(
        d["id"], assign, [_poly(t) for t in d.get("side", [])], rels,
        stopped="Stopped" in flags, temp_stopped="TempStopped" in flags,
        finalized="Finalized" in flags, deferred="Deferred" in flags,
        parent_edges=list(d.get("parents", [])), children=list(d.get("children", [])),
        merged_into=d.get("merged_into"), note=d.get("note", ""), splits=d.get("splits", 0),
        solution=d.get("solution"), solution_side=list(d.get("solution_side", [])),
    )


def graph_to_doc(g: RmGraph) -> dict:
    return {
        "schema": GRAPH_SCHEMA,
        "seed": g.seed_id,
        "mode": g.mode.value,
        "tuning": asdict(g.tuning),
        "stage": g.stage,
        "root": g.root,
        "gauge_entry": list(g.gauge_entry) if g.gauge_entry else None,
        "runs": list(g.runs),
        "summary": g.summary(),
        "vertices": [vertex_to_doc(v) for v in g.vertices],
    }


def graph_from_doc(doc: dict) -> RmGraph:
    if doc.get("schema") != GRAPH_SCHEMA:
        raise SchemaMismatch(f"expected {GRAPH_SCHEMA}, got {doc.get('schema')!r}")
    g = RmGraph(doc["seed"], Mode(doc["mode"]), Tuning(**doc["tuning"]))
    g.stage = doc.get("stage", 1)
    g.root = doc.get("root", 0)
    ge = doc.get("gauge_entry")
    g.gauge_entry = tuple(ge) if ge else None
    g.runs = list(doc.get("runs", []))
    g.vertices = [vertex_from_doc(d) for d in doc["vertices"]]
    return g


def to_dot(g: RmGraph) -> str:
    """Branch graph: root green, terminated vertices red, Finalized blue."""
    lines = ["digraph search {", "  node [shape=circle, style=filled, label=\"\", width=0.15];"]
    for v in g.vertices:
        if v.id == g.root:
            color = "green"
        elif v.finalized:
            color = "blue"
        elif v.stopped:
            color = "red"
        elif v.deferred:
            color = "orange"
        else:
            color = "gray"
        lines.append(f"  v{v.id} [fillcolor={color}, tooltip=\"{v.id}: {v.note}\"];")
    for v in g.vertices:
        for c in v.children:
            lines.append(f"  v{v.id} -> v{c};")
        if v.merged_into is not None:
            lines.append(f"  v{v.id} -> v{v.merged_into} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
