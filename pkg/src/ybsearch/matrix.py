"""Small sparse matrices over Poly or RatFunc entries."""

from __future__ import annotations

from typing import Callable, Iterable


class DimensionMismatch(ValueError):
    pass


def _is_zero(x) -> bool:
    return x is None or x.is_zero()


class SMat:
    """Square sparse matrix; missing entries are zero."""

    __slots__ = ("n", "entries")

    def __init__(self, n: int, entries: dict | None = None):
        self.n = n
        self.entries = {k: v for k, v in (entries or {}).items() if not _is_zero(v)}

    @classmethod
    def from_rows(cls, rows) -> "SMat":
        n = len(rows)
        ent = {}
        for r, row in enumerate(rows):
            if len(row) != n:
                raise DimensionMismatch("matrix must be square")
            for c, v in enumerate(row):
                ent[(r, c)] = v
        return cls(n, ent)

    @classmethod
    def identity(cls, n: int, one) -> "SMat":
        return cls(n, {(i, i): one for i in range(n)})

    def get(self, r: int, c: int, zero=None):
        return self.entries.get((r, c), zero)

    def rows(self, zero) -> list[list]:
        return [[self.entries.get((r, c), zero) for c in range(self.n)] for r in range(self.n)]

    def map(self, fn: Callable) -> "SMat":
        return SMat(self.n, {k: fn(v) for k, v in self.entries.items()})

    def __matmul__(self, other: "SMat") -> "SMat":
        if self.n != other.n:
            raise DimensionMismatch(f"{self.n} vs {other.n}")
        by_row: dict = {}
        for (k, c), v in other.entries.items():
            by_row.setdefault(k, []).append((c, v))
        out: dict = {}
        for (r, k), a in self.entries.items():
            for c, b in by_row.get(k, ()):
                t = a * b
                key = (r, c)
                out[key] = out[key] + t if key in out else t
        return SMat(self.n, out)

    def __add__(self, other: "SMat") -> "SMat":
        if self.n != other.n:
            raise DimensionMismatch(f"{self.n} vs {other.n}")
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out[k] + v if k in out else v
        return SMat(self.n, out)

    def __neg__(self) -> "SMat":
        return SMat(self.n, {k: -v for k, v in self.entries.items()})

    def __sub__(self, other: "SMat") -> "SMat":
        return self + (-other)

    def scale(self, s) -> "SMat":
        return SMat(self.n, {k: v * s for k, v in self.entries.items()})

    def transpose(self) -> "SMat":
        return SMat(self.n, {(c, r): v for (r, c), v in self.entries.items()})

    def permute(self, perm: list[int]) -> "SMat":
        """``P M P^T`` for the permutation sending basis index i to perm[i]."""
        return SMat(self.n, {(perm[r], perm[c]): v for (r, c), v in self.entries.items()})

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other) -> bool:
        if not isinstance(other, SMat):
            return NotImplemented
        return self.n == other.n and (self - other).is_zero()

    def nonzero_items(self) -> Iterable:
        return sorted(self.entries.items())


def kron_identity_left(m: SMat, d: int) -> SMat:
    """``I_d ⊗ m``."""
    n = m.n
    out = {}
    for b in range(d):
        for (r, c), v in m.entries.items():
            out[(b * n + r, b * n + c)] = v
    return SMat(n * d, out)


def kron_identity_right(m: SMat, d: int) -> SMat:
    """``m ⊗ I_d``."""
    out = {}
    for (r, c), v in m.entries.items():
        for b in range(d):
            out[(r * d + b, c * d + b)] = v
    return SMat(m.n * d, out)
