"""Independent numeric check of the Yang-Baxter equation with sympy.

Entries are parsed from their text form by sympy, evaluated at random
rational points, and the residual is expanded exactly.  Free functions
get independent values at u, v and u+v; exponentials are exact sympy
numbers, so the addition law holds by construction.
"""

import random
import re

import sympy as sp

_FUNC = re.compile(r"\br(\d+)\(([^()]*)\)")
_INIT = re.compile(r"R'(\d\d)\(0\)")


def _sympify(text):
    text = _FUNC.sub(lambda m: f"r{m.group(1)}_F", text)
    text = _INIT.sub(lambda m: f"Rd{m.group(1)}", text)
    return sp.sympify(text, locals={"i": sp.I, "u": sp.Symbol("u")})


def parse_rows(rows):
    return [[_sympify(x) for x in row] for row in rows]


def _kron(A, B):
    n, m = len(A), len(B)
    return [[A[i // m][j // m] * B[i % m][j % m] for j in range(n * m)] for i in range(n * m)]


def _eye(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _mul(A, B):
    n = len(A)
    out = []
    for i in range(n):
        row = A[i]
        nz = [(t, x) for t, x in enumerate(row) if x != 0]
        out.append([sum((x * B[t][j] for t, x in nz), sp.Integer(0)) for j in range(n)])
    return out


def _embed(M, slot):
    if slot == "12":
        return _kron(M, _eye(2))
    if slot == "23":
        return _kron(_eye(2), M)
    # R13 = P23 R12 P23, P23 swaps the last two tensor factors
    perm = [(idx // 4) * 4 + (idx % 2) * 2 + (idx // 2) % 2 for idx in range(8)]
    R12 = _kron(M, _eye(2))
    return [[R12[perm[i]][perm[j]] for j in range(8)] for i in range(8)]


def _rand_q(rng):
    num = rng.randint(-9, 9) or 1
    return sp.Rational(num, rng.randint(1, 7))


def residual_at(exprs, rng, spectral=True):
    """Residual entries at one random point as exact numbers, or None when
    the point hits a pole."""
    syms = set().union(*[e.free_symbols for row in exprs for e in row])
    u = sp.Symbol("u")
    funcs = sorted((s for s in syms if s.name.endswith("_F")), key=str)
    params = sorted((s for s in syms if s not in funcs and s != u), key=str)
    pv = {p: _rand_q(rng) for p in params}
    uu, vv = _rand_q(rng), _rand_q(rng)

    def at(x):
        sub = dict(pv)
        sub[u] = x
        for f in funcs:
            sub[f] = _rand_q(rng)
        return [[sp.expand(e.subs(sub)) for e in row] for row in exprs]

    def finite(M):
        return all(e.is_finite is not False and not e.has(sp.zoo, sp.nan) for row in M for e in row)

    if spectral:
        Ru, Ruv, Rv = at(uu), at(uu + vv), at(vv)
    else:
        Ru = Ruv = Rv = at(uu)
    if not all(finite(M) for M in (Ru, Ruv, Rv)):
        return None
    lhs = _mul(_mul(_embed(Ru, "12"), _embed(Ruv, "13")), _embed(Rv, "23"))
    rhs = _mul(_mul(_embed(Rv, "23"), _embed(Ruv, "13")), _embed(Ru, "12"))
    return [sp.expand(a - b) for ra, rb in zip(lhs, rhs) for a, b in zip(ra, rb)]


def numeric_ybe_holds(rows, trials=50, seed=0, spectral=True):
    rng = random.Random(seed)
    exprs = parse_rows(rows)
    done = 0
    while done < trials:
        res = residual_at(exprs, rng, spectral)
        if res is None:
            # a denominator vanished at this point; draw another
            continue
        if any(x != 0 for x in res):
            return False
        done += 1
    return True
