"""Atom registry shared by every polynomial in the process.

Atoms are interned to small integers so that monomials can be stored as
sorted ``(id, exponent)`` tuples.  Ids are process-local handles; the
monomial order never looks at them.  Instead every atom has an intrinsic
position derived from its descriptor, so two processes that register atoms
in a different order still agree on leading terms.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from enum import Enum


class Arg(str, Enum):
    """Spectral argument tag of a function-valued atom."""

    ZERO = "0"
    U = "u"
    V = "v"
    UPV = "u+v"


class Kind(str, Enum):
    ENTRY = "entry"  # R_{rc}(arg), unknown entry function
    INIT_DERIV = "initderiv"  # R'_{rc}(0)
    DERIV = "deriv"  # derivative of an entry or free function at an argument
    FREE_FUNC = "func"  # r_k(arg)
    SPECTRAL = "spectral"  # u, v
    EXP = "exp"  # exp(rate * arg)
    SEED_PARAM = "param"  # p, q, s, k, p0, c1, ...
    INT_CONST = "intconst"  # integration constants C1, C2, ...
    ALGEBRAIC = "alg"  # i, sqrt2: roots of x^2 - d


# Unknown-class atoms first, then functions, then u/v/exponentials, then
# parameters.  Lower rank means "larger" variable in the monomial order.
_CLASS_RANK = {
    Kind.ENTRY: 0,
    Kind.INIT_DERIV: 0,
    Kind.DERIV: 1,
    Kind.FREE_FUNC: 2,
    Kind.SPECTRAL: 3,
    Kind.EXP: 3,
    Kind.SEED_PARAM: 4,
    Kind.INT_CONST: 4,
    Kind.ALGEBRAIC: 5,
}

_ARG_RANK = {Arg.U: 0, Arg.V: 1, Arg.UPV: 2, Arg.ZERO: 3}

ALGEBRAIC_SQUARES = {"i": -1, "sqrt2": 2}

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
RESERVED_NAMES = frozenset({"u", "v", "exp", "sqrt", "I"}) | frozenset(ALGEBRAIC_SQUARES)


@dataclass(frozen=True)
class Atom:
    """Immutable atom descriptor.

    ``payload`` layout per kind:

    * ENTRY: ``(row, col, arg)`` with 1-based matrix positions
    * INIT_DERIV: ``(row, col)``
    * DERIV: ``(base,)`` where ``base`` is an ENTRY or FREE_FUNC atom
    * FREE_FUNC: ``(k, arg)``
    * SPECTRAL: ``(name,)``
    * EXP: ``(rate_text, arg)``; the rate itself lives in :data:`RATES`
    * SEED_PARAM: ``(name,)``
    * INT_CONST: ``(k,)``
    * ALGEBRAIC: ``(name,)``
    """

    kind: Kind
    payload: tuple

    @property
    def arg(self) -> Arg | None:
        if self.kind in (Kind.ENTRY, Kind.FREE_FUNC):
            return self.payload[-1]
        if self.kind == Kind.EXP:
            return self.payload[1]
        if self.kind == Kind.DERIV:
            return self.payload[0].arg
        if self.kind == Kind.INIT_DERIV:
            return Arg.ZERO
        return None

    def order_key(self) -> tuple:
        rank = _CLASS_RANK[self.kind]
        p = self.payload
        if self.kind == Kind.ENTRY:
            return (rank, 0, _ARG_RANK[p[2]], p[0], p[1])
        if self.kind == Kind.INIT_DERIV:
            return (rank, 1, 0, p[0], p[1])
        if self.kind == Kind.DERIV:
            return (rank,) + p[0].order_key()
        if self.kind == Kind.FREE_FUNC:
            return (rank, _ARG_RANK[p[1]], p[0])
        if self.kind == Kind.SPECTRAL:
            return (rank, 0, p[0])
        if self.kind == Kind.EXP:
            return (rank, 1, _ARG_RANK[p[1]], p[0])
        if self.kind == Kind.SEED_PARAM:
            return (rank, 0, _natural_key(p[0]))
        if self.kind == Kind.INT_CONST:
            return (rank, 1, p[0])
        return (rank, p[0])

    def text(self) -> str:
        p = self.payload
        if self.kind == Kind.ENTRY:
            return f"R{p[0]}{p[1]}({p[2].value})"
        if self.kind == Kind.INIT_DERIV:
            return f"R'{p[0]}{p[1]}(0)"
        if self.kind == Kind.DERIV:
            base = p[0].text()
            head, _, tail = base.partition("(")
            if p[0].kind == Kind.ENTRY:
                return f"R'{head[1:]}({tail}"
            return f"{head}'({tail}"
        if self.kind == Kind.FREE_FUNC:
            return f"r{p[0]}({p[1].value})"
        if self.kind == Kind.EXP:
            arg = "(u+v)" if p[1] == Arg.UPV else p[1].value
            rate = p[0]
            if rate == "1":
                return f"exp({arg})"
            if not (_NAME_RE.match(rate) or rate.isdigit()):
                rate = f"({rate})"
            return f"exp({rate}*{arg})"
        if self.kind == Kind.INT_CONST:
            return f"C{p[0]}"
        return p[0]

    def __str__(self) -> str:
        return self.text()


def _natural_key(name: str) -> tuple:
    parts = re.split(r"(\d+)", name)
    return tuple(int(s) if s.isdigit() else s for s in parts)


class AtomTable:
    """Idempotent registry ``Atom <-> int``."""

    def __init__(self) -> None:
        self._ids: dict[Atom, int] = {}
        self._atoms: list[Atom] = []
        self._keys: list[tuple] = []
        self._lock = threading.Lock()

    def intern(self, atom: Atom) -> int:
        i = self._ids.get(atom)
        if i is not None:
            return i
        with self._lock:
            i = self._ids.get(atom)
            if i is None:
                i = len(self._atoms)
                self._atoms.append(atom)
                self._keys.append(atom.order_key())
                self._ids[atom] = i
        return i

    def atom(self, i: int) -> Atom:
        return self._atoms[i]

    def key(self, i: int) -> tuple:
        return self._keys[i]

    def __len__(self) -> int:
        return len(self._atoms)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self._ids


TABLE = AtomTable()

# rate text -> RatFunc, filled by the closed-form layer when exp atoms are made
RATES: dict = {}


def intern(atom: Atom) -> int:
    return TABLE.intern(atom)


def atom_of(i: int) -> Atom:
    return TABLE.atom(i)


def order_key(i: int) -> tuple:
    return TABLE.key(i)


def param(name: str) -> int:
    if not _NAME_RE.match(name) or name in RESERVED_NAMES:
        raise ValueError(f"invalid parameter name {name!r}")
    return intern(Atom(Kind.SEED_PARAM, (name,)))


def entry(row: int, col: int, arg: Arg = Arg.U) -> int:
    return intern(Atom(Kind.ENTRY, (row, col, Arg(arg))))


def init_deriv(row: int, col: int) -> int:
    return intern(Atom(Kind.INIT_DERIV, (row, col)))


def free_func(k: int, arg: Arg = Arg.U) -> int:
    return intern(Atom(Kind.FREE_FUNC, (k, Arg(arg))))


def deriv_of(base_id: int) -> int:
    base = atom_of(base_id)
    if base.kind not in (Kind.ENTRY, Kind.FREE_FUNC):
        raise ValueError(f"no derivative atom for {base}")
    return intern(Atom(Kind.DERIV, (base,)))


def spectral(name: str) -> int:
    if name not in ("u", "v"):
        raise ValueError(name)
    return intern(Atom(Kind.SPECTRAL, (name,)))


def int_const(k: int) -> int:
    return intern(Atom(Kind.INT_CONST, (k,)))


def algebraic(name: str) -> int:
    if name not in ALGEBRAIC_SQUARES:
        raise ValueError(f"unknown algebraic unit {name!r}")
    return intern(Atom(Kind.ALGEBRAIC, (name,)))


def with_arg(atom: Atom, arg: Arg) -> Atom:
    """Return the same function atom evaluated at another argument."""
    if atom.kind == Kind.ENTRY:
        return Atom(Kind.ENTRY, atom.payload[:2] + (arg,))
    if atom.kind == Kind.FREE_FUNC:
        return Atom(Kind.FREE_FUNC, (atom.payload[0], arg))
    if atom.kind == Kind.DERIV:
        return Atom(Kind.DERIV, (with_arg(atom.payload[0], arg),))
    if atom.kind == Kind.EXP:
        return Atom(Kind.EXP, (atom.payload[0], arg))
    return atom
