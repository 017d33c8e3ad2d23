"""Exact polynomial and rational-function core."""

from ybsearch.algebra.atoms import Arg, Atom, Kind
from ybsearch.algebra.poly import ONE, ZERO, Poly
from ybsearch.algebra.ratfunc import RatFunc

__all__ = ["Arg", "Atom", "Kind", "ONE", "ZERO", "Poly", "RatFunc"]
