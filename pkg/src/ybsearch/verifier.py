"""Exact checks of candidate R-matrices against the constant and the
spectral Yang-Baxter equation, plus symbolic rank."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable, Sequence

from ybsearch import closedform as cf
from ybsearch.algebra import atoms
from ybsearch.algebra.atoms import Arg, Kind
from ybsearch.algebra.poly import Poly
from ybsearch.algebra.ratfunc import RatFunc
from ybsearch.relations import RMatrixSymbolic, ybe_residual
from ybsearch.textio import parse_expr


class UnsupportedEntry(ValueError):
    pass


class Checked(str, Enum):
    CONSTANT = "ConstantYBE"
    SPECTRAL = "SpectralYBE"


@dataclass
class VerificationResult:
    passed: bool
    checked_equation: Checked
    failing_entry: tuple | None = None  # (row, col, witness text), 0-based

    def __bool__(self) -> bool:
        return self.passed


def _as_matrix(R) -> RMatrixSymbolic:
    if isinstance(R, RMatrixSymbolic):
        return R
    return RMatrixSymbolic.from_rows(R)


def _first_failure(res, relations: Sequence[Poly] = ()):
    basis = None
    if relations:
        from ybsearch.groebner import buchberger

        basis = buchberger(relations)
    for (r, c), val in sorted(res.entries.items()):
        val = cf.normalize(val)
        if val.is_zero():
            continue
        if basis is not None:
            from ybsearch.groebner import reduce

            if reduce(val.num, basis).is_zero():
                continue
        return (r, c, val.to_text())
    return None


def verify_constant(C, relations: Sequence[Poly] = ()) -> VerificationResult:
    """Constant YBE ``C12 C13 C23 = C23 C13 C12``, optionally modulo
    parameter ``relations``."""
    C = _as_matrix(C)
    fail = _first_failure(ybe_residual(C, C, C), relations)
    return VerificationResult(fail is None, Checked.CONSTANT, fail)


_FRAGMENT = {Kind.SEED_PARAM, Kind.SPECTRAL, Kind.EXP, Kind.FREE_FUNC, Kind.DERIV,
             Kind.INT_CONST, Kind.ALGEBRAIC, Kind.INIT_DERIV}


def _check_fragment(R: RMatrixSymbolic) -> None:
    for k in R.atoms():
        a = atoms.atom_of(k)
        if a.kind not in _FRAGMENT:
            raise UnsupportedEntry(f"atom {a} outside the closed-form fragment")
        if a.kind in (Kind.FREE_FUNC, Kind.DERIV, Kind.EXP) and a.arg not in (Arg.U, None):
            raise UnsupportedEntry(f"entries must be functions of u, got {a}")
        if a.kind == Kind.SPECTRAL and a.payload[0] != "u":
            raise UnsupportedEntry("entries must not depend on v")


def _clear_denominators(R: RMatrixSymbolic) -> RMatrixSymbolic:
    """R times the lcm of its entry denominators.  A nonzero scalar factor
    only rescales the residual, so the check is unchanged."""
    from ybsearch.algebra.ratfunc import exact_div, poly_gcd

    R = R.map(cf.normalize)
    L = None
    for row in R.rows():
        for x in row:
            if x.is_zero() or x.den.is_constant():
                continue
            if L is None:
                L = x.den
            else:
                L = exact_div(L * x.den, poly_gcd(L, x.den))
    if L is None:
        return R
    scale = RatFunc(L)
    return R.map(lambda x: cf.normalize(x * scale))


def verify_spectral(R, relations: Sequence[Poly] = ()) -> VerificationResult:
    """Full difference-form YBE ``R12(u) R13(u+v) R23(v) = R23(v) R13(u+v) R12(u)``.

    Free functions at u, v, u+v are independent atoms, so passing means
    the identity holds for arbitrary choices of them.  Denominators are
    cleared first; a failing entry is reported for the cleared matrix.
    """
    R = _as_matrix(R)
    _check_fragment(R)
    R = _clear_denominators(R)
    Ru = R
    Ruv = R.at(Arg.UPV)
    Rv = R.at(Arg.V)
    fail = _first_failure(ybe_residual(Ru, Ruv, Rv), relations)
    return VerificationResult(fail is None, Checked.SPECTRAL, fail)


def verify(R, relations: Sequence[Poly] = ()) -> VerificationResult:
    """Constant check for constant matrices, spectral check otherwise."""
    R = _as_matrix(R)
    u = atoms.spectral("u")
    spectral = any(k == u or atoms.atom_of(k).arg == Arg.U for k in R.atoms())
    return verify_spectral(R, relations) if spectral else verify_constant(R, relations)


# -- rank -------------------------------------------------------------------


def symbolic_rank(R, nonzero: Iterable[Poly] = ()) -> int:
    """Rank over the field of rational functions in all atoms.

    Pivots are accepted when they are not identically zero, which is the
    rank at a generic point; ``nonzero`` is accepted for interface
    symmetry since generic points already avoid those zero sets.
    """
    R = _as_matrix(R)
    n = R.dim
    rows = [[cf.normalize(x) for x in row] for row in R.rows()]
    rank = 0
    col = 0
    r0 = 0
    while r0 < n and col < n:
        piv = None
        for r in range(r0, n):
            if not rows[r][col].is_zero():
                if piv is None or len(rows[r][col].num) < len(rows[piv][col].num):
                    piv = r
        if piv is None:
            col += 1
            continue
        rows[r0], rows[piv] = rows[piv], rows[r0]
        p = rows[r0][col]
        for r in range(r0 + 1, n):
            f = rows[r][col]
            if f.is_zero():
                continue
            q = f / p
            rows[r] = [cf.normalize(rows[r][c] - q * rows[r0][c]) for c in range(n)]
        rank += 1
        r0 += 1
        col += 1
    return rank


def determinant(R) -> RatFunc:
    """Determinant by Laplace expansion along sparse rows."""
    R = _as_matrix(R)
    rows = [[cf.normalize(x) for x in row] for row in R.rows()]
    return cf.normalize(_det(rows, tuple(range(len(rows)))))


def _det(rows, cols) -> RatFunc:
    if not cols:
        return RatFunc.of(1)
    r = len(rows) - len(cols)
    acc = RatFunc.of(0)
    for idx, c in enumerate(cols):
        x = rows[r][c]
        if x.is_zero():
            continue
        minor = _det(rows, cols[:idx] + cols[idx + 1:])
        if minor.is_zero():
            continue
        term = x * minor
        acc = acc - term if idx % 2 else acc + term
    return acc


# -- corpus -----------------------------------------------------------------

CORPUS_SCHEMA = "ybsearch-solutions/1"


class CorpusError(ValueError):
    pass


@dataclass
class CorpusEntry:
    id: str
    group: str
    kind: str
    matrix: RMatrixSymbolic
    rank: int | None = None
    side_conditions: tuple = ()
    relations: tuple = ()


def parse_solutions(doc: dict) -> list[CorpusEntry]:
    """Entries of a solutions document (corpus or search report)."""
    if doc.get("schema") != CORPUS_SCHEMA:
        raise CorpusError(f"unsupported schema {doc.get('schema')!r}")
    out = []
    for pos, item in enumerate(doc.get("solutions", [])):
        ident = item.get("id", f"#{pos + 1}")
        try:
            rows = [[parse_expr(x) for x in row] for row in item["rows"]]
            mat = RMatrixSymbolic.from_rows(rows)
            side = tuple(parse_expr(s).num for s in item.get("side_conditions", ()))
            rels = tuple(parse_expr(s).num for s in item.get("relations", ()))
        except (KeyError, ValueError) as exc:
            raise CorpusError(f"entry {ident}: {exc}") from exc
        out.append(CorpusEntry(ident, item.get("group", ""), item.get("kind", "spectral"), mat,
                               item.get("rank"), side, rels))
    return out


def load_corpus() -> list[CorpusEntry]:
    text = resources.files("ybsearch").joinpath("data/corpus.json").read_text()
    return parse_solutions(json.loads(text))


@dataclass
class CorpusReport:
    results: list  # (entry id, VerificationResult)

    @property
    def passed(self) -> bool:
        return all(r.passed for _, r in self.results)

    def failures(self) -> list:
        return [(i, r) for i, r in self.results if not r.passed]

    def lines(self) -> list[str]:
        out = []
        for ident, r in self.results:
            tail = "" if r.passed else f" at {r.failing_entry[:2]}: {r.failing_entry[2]}"
            out.append(f"{ident}: {'pass' if r.passed else 'FAIL'} ({r.checked_equation.value}){tail}")
        return out


def corpus_check(entries: Sequence[CorpusEntry] | None = None) -> CorpusReport:
    entries = load_corpus() if entries is None else entries
    res = []
    for e in entries:
        if e.kind == "constant":
            res.append((e.id, verify_constant(e.matrix, e.relations)))
        else:
            res.append((e.id, verify_spectral(e.matrix, e.relations)))
    return CorpusReport(res)
