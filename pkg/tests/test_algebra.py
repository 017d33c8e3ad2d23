from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ybsearch.algebra import atoms
from ybsearch.algebra.factor import ZeroInput, distinct_factors, poly_sqrt, try_split_product
from ybsearch.algebra.linsolve import check_branch, solve_linear
from ybsearch.algebra.poly import ONE, ZERO, Poly
from ybsearch.algebra.ratfunc import RatFunc, poly_gcd
from ybsearch.groebner import buchberger, reduce
from ybsearch.textio import parse_poly

from strategies import X, Y, Z, nonzero_polys, polys


@settings(max_examples=1000, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a
    assert a * b == b * a
    assert a - a == ZERO
    assert a * ONE == a


@settings(max_examples=200, deadline=None)
@given(polys(max_terms=3), polys(max_terms=3))
def test_text_round_trip(a, b):
    p = a * b - a
    assert parse_poly(p.to_text()) == p


@settings(max_examples=300, deadline=None)
@given(nonzero_polys(max_deg=2, max_terms=3), nonzero_polys(max_deg=2, max_terms=3))
def test_split_product_remultiplies(a, b):
    f = a * b
    parts = try_split_product(f)
    prod = ONE
    for p in parts:
        prod = prod * p
    # equal up to a rational constant
    ratio = f.leading_coeff() / prod.leading_coeff()
    assert prod * Poly.const(ratio) == f


def test_split_known_factorizations():
    x = Poly.var(X)
    y = Poly.var(Y)
    assert set(try_split_product(x * x - ONE)) == {x - ONE, x + ONE}
    f = Poly.const(16) * x ** 4 - ONE
    got = try_split_product(f)
    assert len(got) == 3
    assert Poly.const(4) * x * x + ONE in got
    assert set(distinct_factors(x * x * y)) == {x, y}
    with pytest.raises(ZeroInput):
        try_split_product(ZERO)


@settings(max_examples=200, deadline=None)
@given(nonzero_polys(max_terms=3))
def test_poly_sqrt_of_square(p):
    r = poly_sqrt(p * p)
    assert r is not None and r * r == p * p


@settings(max_examples=200, deadline=None)
@given(nonzero_polys(max_deg=2, max_terms=3), nonzero_polys(max_deg=2, max_terms=3),
       nonzero_polys(max_deg=2, max_terms=2))
def test_ratfunc_reduced_and_exact(a, b, g):
    r = RatFunc(a * g, b * g)
    # value unchanged: r * b == a as rational functions
    assert r * RatFunc(b) == RatFunc(a)
    assert poly_gcd(r.num, r.den).is_constant()


def test_ratfunc_arithmetic():
    x = RatFunc(Poly.var(X))
    one = RatFunc.of(1)
    assert (one / (x + one) + x / (x + one)) == one
    assert (x * x - one) / (x - one) == x + one
    assert RatFunc.of(Fraction(3, 4)).is_constant()


_UNK = [atoms.entry(1, c) for c in range(1, 4)]


@st.composite
def linear_systems(draw):
    neq = draw(st.integers(1, 3))
    eqs = []
    for _ in range(neq):
        e = draw(polys(nvars=2, max_deg=1, max_terms=2))
        for k in _UNK:
            coef = draw(polys(nvars=2, max_deg=1, max_terms=2))
            e = e + coef * Poly.var(k)
        eqs.append(e)
    return eqs


def _vanishes(eqs, br):
    vals = {k: (v.num, v.den) for k, v in br.assignment.items()}
    basis = buchberger(br.relations) if br.relations else None
    for e in eqs:
        n, _ = e.subs_frac(vals)
        if basis is not None:
            n = reduce(n, basis)
        if not n.is_zero():
            return False
    return True


@settings(max_examples=150, deadline=None)
@given(linear_systems())
def test_solve_linear_branches_satisfy_system(eqs):
    branches = solve_linear(eqs, _UNK, branch_depth=3)
    assert branches
    for br in branches:
        if br.inconsistent:
            continue
        assert _vanishes(eqs, br)
        assert check_branch(eqs, br)
        for s in br.side_conditions:
            assert not s.is_zero()


def test_solve_linear_complementary_branch():
    a = Poly.var(X)
    r = Poly.var(_UNK[0])
    # x * R11 - y = 0 has the generic branch and the x = 0 case
    brs = solve_linear([a * r - Poly.var(Y)], [_UNK[0]])
    generic = [b for b in brs if not b.relations and not b.inconsistent]
    assert generic and generic[0].assignment[_UNK[0]] == RatFunc(Poly.var(Y), a)
    special = [b for b in brs if b.relations]
    assert special and special[0].relations[0] == a


def test_solve_linear_inconsistent_flagged():
    r = Poly.var(_UNK[0])
    brs = solve_linear([r - ONE, r - Poly.const(2)], [_UNK[0]])
    assert all(b.inconsistent for b in brs)
