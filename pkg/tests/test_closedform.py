import random

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ybsearch import closedform as cf
from ybsearch.algebra import atoms
from ybsearch.algebra.atoms import Arg
from ybsearch.algebra.poly import Poly
from ybsearch.algebra.ratfunc import RatFunc
from ybsearch.textio import parse_expr

import oracle

PIECES = ["u", "p", "q", "2", "-1", "exp(p*u)", "exp(-p*u)", "exp(2*u)", "exp(q*u)", "r1(u)", "u*exp(p*u)"]


@st.composite
def closed_forms(draw, max_terms=4):
    out = RatFunc.of(0)
    for _ in range(draw(st.integers(1, max_terms))):
        term = RatFunc.of(draw(st.integers(-3, 3)))
        for _ in range(draw(st.integers(1, 3))):
            term = term * parse_expr(draw(st.sampled_from(PIECES)))
        out = out + term
    if draw(st.booleans()):
        out = out / parse_expr(draw(st.sampled_from(["p", "p + q", "q - 1", "exp(p*u)"])))
    return out


@settings(max_examples=300, deadline=None)
@given(closed_forms())
def test_normalize_idempotent(e):
    n = cf.normalize(e)
    assert cf.normalize(n) == n


def test_exp_rules():
    assert cf.normalize(parse_expr("exp(p*u)*exp(-p*u)")) == RatFunc.of(1)
    assert cf.normalize(parse_expr("exp(p*u)^2")) == cf.normalize(parse_expr("exp(2*p*u)"))
    e = parse_expr("exp(p*u)")
    assert cf.retag(e, Arg.UPV) == cf.normalize(cf.retag(e, Arg.V) * e)
    assert cf.retag(e, Arg.ZERO) == RatFunc.of(1)
    assert cf.differentiate(e) == cf.normalize(parse_expr("p*exp(p*u)"))


def test_exp_rate_must_not_depend_on_u():
    with pytest.raises(cf.Unsupported):
        cf.exp_atom(parse_expr("u"))


ALPHAS = ["0", "p", "2", "-1", "p + q"]
FORCING = ["0", "1", "q", "u", "exp(p*u)", "u*exp(q*u)", "exp(2*u)", "u^2", "p*exp(-u)"]
X = atoms.entry(1, 4)


@settings(max_examples=120, deadline=None)
@given(st.sampled_from(ALPHAS), st.lists(st.sampled_from(FORCING), min_size=1, max_size=2),
       st.sampled_from([None, "0", "1", "k"]))
def test_ode_solution_satisfies_equation(alpha, forcing, init):
    rhs = parse_expr(alpha) * RatFunc(Poly.var(X))
    for f in forcing:
        rhs = rhs + parse_expr(f)
    iv = None if init is None else parse_expr(init)
    sol = cf.ode_solve_linear(rhs, X, init=iv)
    plugged = cf.substitute(rhs, {X: sol})
    assert cf.normalize(cf.differentiate(sol) - plugged).is_zero()
    if iv is not None:
        assert cf.normalize(cf.retag(sol, Arg.ZERO) - iv).is_zero()


def test_ode_unsupported():
    x = RatFunc(Poly.var(X))
    with pytest.raises(cf.Unsupported):
        cf.ode_solve_linear(x * x, X)
    with pytest.raises(cf.Unsupported):
        cf.ode_solve_linear(parse_expr("u") * x, X)


def _eval_sympy(e, rng):
    expr = oracle.parse_rows([[e.to_text().replace("^", "**")]])[0][0]
    sub = {s: oracle._rand_q(rng) for s in expr.free_symbols}
    return sp.expand(expr.subs(sub))


def test_zero_test_soundness():
    """Nonzero normal forms are nonzero somewhere; zero ones everywhere."""
    rng = random.Random(2024)
    for _ in range(1000):
        term = RatFunc.of(0)
        for _ in range(rng.randint(1, 3)):
            t = RatFunc.of(rng.randint(-3, 3))
            for _ in range(rng.randint(1, 3)):
                t = t * parse_expr(rng.choice(PIECES))
            term = term + t
        n = cf.normalize(term)
        vals = [_eval_sympy(n, rng) for _ in range(3)]
        if n.is_zero():
            assert all(v == 0 for v in vals)
        else:
            assert any(v != 0 for v in vals), n.to_text()
