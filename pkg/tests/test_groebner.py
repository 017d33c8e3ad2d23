import random

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ybsearch.algebra.poly import ONE, ZERO, Poly
from ybsearch.groebner import (
    Basis,
    GroebnerConfig,
    Status,
    buchberger,
    is_inconsistent,
    reduce,
    satisfies_criterion,
    triangular_extract,
)
from ybsearch.textio import parse_poly

from strategies import VARS, X, Y, nonzero_polys

SYMS = sp.symbols("x y z w")


def random_system(rng, nvars=None, ngens=None):
    nvars = nvars or rng.randint(1, 4)
    ngens = ngens or rng.randint(1, 3)
    out = []
    for _ in range(ngens):
        terms = {}
        for _ in range(rng.randint(1, 3)):
            m = []
            budget = rng.randint(0, 3)
            for k in VARS[:nvars]:
                e = rng.randint(0, budget)
                budget -= e
                if e:
                    m.append((k, e))
            terms[tuple(sorted(m))] = rng.choice([-3, -2, -1, 1, 2, 3])
        p = Poly(terms)
        if not p.is_zero():
            out.append(p)
    return out or [Poly.var(VARS[0])]


def cofactors_hold(basis: Basis, gens) -> bool:
    for g, cof in zip(basis.generators, basis.cofactors):
        acc = ZERO
        for c, f in zip(cof, gens):
            acc = acc + c * f
        if acc != g:
            return False
    return True


def check_basis(gens, cfg=None):
    b = buchberger(gens, cfg, track=True)
    if not b.complete:
        return b, None
    G = b.generators
    assert satisfies_criterion(G)
    assert all(reduce(f, G).is_zero() for f in gens)
    assert cofactors_hold(b, gens)
    return b, G


def _sym(p):
    return sp.sympify(p.to_text().replace("^", "**"), locals=dict(zip("xyzw", SYMS)))


def test_worked_example():
    x, y = Poly.var(X), Poly.var(Y)
    b = buchberger([x * x - ONE, x * y - ONE])
    assert b.complete
    assert set(b.generators) == {x - y, y * y - ONE}


def test_random_systems_against_sympy():
    rng = random.Random(1234)
    done = 0
    while done < 60:
        gens = random_system(rng)
        b, G = check_basis(gens, GroebnerConfig(pair_budget=2000))
        if G is None:
            continue
        done += 1
        ours = [_sym(g) for g in G]
        gb = sp.groebner([_sym(g) for g in gens], *SYMS, order="grevlex", domain="QQ")
        theirs = list(gb.exprs)
        if theirs == [1]:
            assert is_inconsistent(b)
            continue
        # same ideal: each basis reduces to zero modulo the other
        for p in ours:
            assert gb.reduce(p)[1] == 0
        for p in theirs:
            assert reduce(parse_poly(str(sp.expand(p)).replace("**", "^")), G).is_zero()


@settings(max_examples=60, deadline=None)
@given(st.lists(nonzero_polys(nvars=3, max_deg=2, max_terms=3), min_size=1, max_size=3))
def test_basis_properties(gens):
    check_basis(gens, GroebnerConfig(pair_budget=2000))


def test_deterministic_text():
    rng = random.Random(5)
    gens = random_system(rng, 3, 3)
    assert buchberger(gens).to_text() == buchberger(list(gens)).to_text()


def test_budget_exceeded_is_reported():
    x, y, z = (Poly.var(k) for k in VARS[:3])
    cyclic3 = [x + y + z, x * y + y * z + z * x, x * y * z - ONE]
    b = buchberger(cyclic3, GroebnerConfig(pair_budget=1))
    assert b.status == Status.BUDGET_EXCEEDED and not b.complete
    full = buchberger(cyclic3)
    assert full.complete and satisfies_criterion(full.generators)


def test_inconsistent_system():
    x = Poly.var(X)
    b = buchberger([x - ONE, x + ONE])
    assert is_inconsistent(b)


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        GroebnerConfig(pair_budget=0)
    with pytest.raises(ValueError):
        buchberger([])


def test_triangular_extract_reads_solutions():
    x, y = Poly.var(X), Poly.var(Y)
    b = buchberger([x * x - ONE, x * y - ONE])
    brs = [br for br in triangular_extract(b, [X, Y]) if not br.inconsistent]
    sols = sorted((br.assignment[X].to_text(), br.assignment[Y].to_text()) for br in brs)
    assert sols == [("-1", "-1"), ("1", "1")]
