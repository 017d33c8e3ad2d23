"""Closed-form function values: polynomials in u times exponentials, plus
free functions, as rational functions over the shared atom table.

Normal form rules applied by :func:`normalize`:

* ``exp(g*(u+v)) -> exp(g*u) * exp(g*v)``
* ``exp(g*0) -> 1`` and ``exp(0*x) -> 1``
* products of exponentials at one argument merge their rates
* ``i^2 -> -1``, ``sqrt2^2 -> 2``

Free-function atoms ``r_k(u)``, ``r_k(v)``, ``r_k(u+v)`` are never related
to each other, so a normalized expression is zero only if it vanishes for
arbitrary independent values of them.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Mapping

from ybsearch.algebra import atoms
from ybsearch.algebra.atoms import Arg, Atom, Kind
from ybsearch.algebra.poly import ONE, ZERO, Poly, mono_mul
from ybsearch.algebra.ratfunc import RatFunc


class UnsupportedOrder(ValueError):
    """Second derivatives are outside the closed-form fragment."""


class Unsupported(ValueError):
    """Equation or expression outside the supported fragment."""


ClosedForm = RatFunc


def exp_atom(rate, arg: Arg = Arg.U) -> int | None:
    """Intern ``exp(rate * arg)``; returns None when the factor is 1."""
    rate = RatFunc.of(rate)
    if rate.is_zero() or arg == Arg.ZERO:
        return None
    if rate.atoms() & _spectral_ids():
        raise Unsupported("exponential rate depends on the spectral variable")
    text = rate.to_text()
    atoms.RATES.setdefault(text, rate)
    return atoms.intern(Atom(Kind.EXP, (text, Arg(arg))))


def exp_poly(rate, arg: Arg = Arg.U) -> Poly:
    if arg == Arg.UPV:
        return exp_poly(rate, Arg.U) * exp_poly(rate, Arg.V)
    a = exp_atom(rate, arg)
    return ONE if a is None else Poly.var(a)


def rate_of(atom_id: int) -> RatFunc:
    return atoms.RATES[atoms.atom_of(atom_id).payload[0]]


def _spectral_ids() -> set[int]:
    return {atoms.spectral("u"), atoms.spectral("v")}


# -- normalization --------------------------------------------------------

_MONO_CACHE: dict = {}


def _normalize_mono(m):
    """Return ``(coefficient factor, Poly)`` for one monomial."""
    hit = _MONO_CACHE.get(m)
    if hit is not None:
        return hit
    rates: dict[Arg, RatFunc] = {}
    rest = []
    factor = Fraction(1)
    changed = False
    for k, e in m:
        a = atoms.atom_of(k)
        if a.kind == Kind.EXP:
            arg = a.payload[1]
            r = atoms.RATES[a.payload[0]] * e
            targets = (Arg.U, Arg.V) if arg == Arg.UPV else (() if arg == Arg.ZERO else (arg,))
            for t in targets:
                rates[t] = rates[t] + r if t in rates else r
            if arg in (Arg.UPV, Arg.ZERO) or e != 1:
                changed = True
            continue
        if a.kind == Kind.ALGEBRAIC:
            sq = atoms.ALGEBRAIC_SQUARES[a.payload[0]]
            factor *= Fraction(sq) ** (e // 2)
            if e % 2:
                rest.append((k, 1))
            if e >= 2:
                changed = True
            continue
        rest.append((k, e))
    exp_count = sum(1 for k, _ in m if atoms.atom_of(k).kind == Kind.EXP)
    expm = []
    for arg in (Arg.U, Arg.V):
        if arg in rates:
            ea = exp_atom(rates[arg], arg)
            if ea is not None:
                expm.append((ea, 1))
    if len(expm) != exp_count:
        changed = True
    if not changed:
        out = (Fraction(1), m)
    else:
        nm = tuple(sorted(rest + expm))
        out = (factor, nm)
    if len(_MONO_CACHE) > 200_000:
        _MONO_CACHE.clear()
    _MONO_CACHE[m] = out
    return out


def normalize_poly(p: Poly) -> Poly:
    acc: dict = {}
    for m, c in p.terms.items():
        f, nm = _normalize_mono(m)
        acc[nm] = acc.get(nm, 0) + c * f
    return Poly._raw({m: c for m, c in acc.items() if c})


def normalize(e) -> RatFunc:
    """Apply the rewrite rules to fixpoint (one pass suffices)."""
    e = RatFunc.of(e)
    num = normalize_poly(e.num)
    den = normalize_poly(e.den)
    # an exponential monomial denominator is a unit: move it up
    if len(den.terms) == 1:
        (m, c), = den.terms.items()
        inv = ONE
        keep = []
        for k, x in m:
            a = atoms.atom_of(k)
            if a.kind == Kind.EXP:
                inv = inv * exp_poly(-atoms.RATES[a.payload[0]] * x, a.payload[1])
            else:
                keep.append((k, x))
        if inv != ONE:
            num = normalize_poly(num * inv)
            den = Poly.monomial(tuple(keep), c)
    if num == e.num and den == e.den:
        return e
    return RatFunc(num, den)


def is_zero(e) -> bool:
    return normalize(e).is_zero()


# -- differentiation ------------------------------------------------------


def _atom_derivative(k: int, var: str) -> RatFunc | None:
    """d(atom)/d(var) as a closed form, or None when it is zero."""
    a = atoms.atom_of(k)
    if a.kind == Kind.SPECTRAL:
        return RatFunc.of(1) if a.payload[0] == var else None
    if a.kind == Kind.EXP:
        arg = a.payload[1]
        if _arg_depends(arg, var):
            return RatFunc(Poly.var(k)) * atoms.RATES[a.payload[0]]
        return None
    if a.kind in (Kind.ENTRY, Kind.FREE_FUNC):
        if _arg_depends(a.arg, var):
            return RatFunc(Poly.var(atoms.deriv_of(k)))
        return None
    if a.kind == Kind.DERIV:
        if _arg_depends(a.arg, var):
            raise UnsupportedOrder(f"second derivative of {a.payload[0]}")
        return None
    return None


def _arg_depends(arg: Arg, var: str) -> bool:
    if arg == Arg.UPV:
        return True
    return arg is not None and arg.value == var


def diff_poly(p: Poly, var: str = "u") -> RatFunc:
    total = RatFunc.of(0)
    poly_part = ZERO
    for k in sorted(p.atoms()):
        d = _atom_derivative(k, var)
        if d is None:
            continue
        dp = p.diff(k)
        if d.is_poly():
            poly_part = poly_part + dp * d.num
        else:
            total = total + RatFunc.of(dp) * d
    return normalize(total + RatFunc.of(poly_part))


def differentiate(e, var: str = "u") -> RatFunc:
    """Total derivative with respect to ``u`` or ``v``."""
    e = RatFunc.of(e)
    dn = diff_poly(e.num, var)
    if e.den.is_constant():
        return dn * RatFunc.of(Fraction(1) / e.den.constant_value())
    dd = diff_poly(e.den, var)
    return normalize((dn * e.den - dd * e.num) / RatFunc(e.den ** 2, ONE, reduced=True))


# -- argument re-tagging --------------------------------------------------


def retag_map(atom_ids, target: Arg) -> dict[int, Poly]:
    """Substitution sending functions of ``u`` to functions of ``target``."""
    u = atoms.spectral("u")
    v = atoms.spectral("v")
    out: dict[int, Poly] = {}
    for k in atom_ids:
        a = atoms.atom_of(k)
        if a.kind == Kind.SPECTRAL and k == u:
            out[k] = {Arg.V: Poly.var(v), Arg.UPV: Poly.var(u) + Poly.var(v), Arg.ZERO: ZERO}[target]
        elif a.kind == Kind.EXP and a.payload[1] == Arg.U:
            out[k] = exp_poly(atoms.RATES[a.payload[0]], target)
        elif a.kind in (Kind.ENTRY, Kind.FREE_FUNC, Kind.DERIV) and a.arg == Arg.U:
            out[k] = Poly.var(atoms.intern(atoms.with_arg(a, target)))
    return out


def retag(e, target: Arg) -> RatFunc:
    """Evaluate a function of ``u`` at ``v``, ``u+v`` or ``0``."""
    e = RatFunc.of(e)
    if target == Arg.U:
        return e
    mp = retag_map(e.atoms(), target)
    if not mp:
        return e
    return normalize(RatFunc(e.num.subs(mp), e.den.subs(mp)))


# -- linear first-order ODE -------------------------------------------------

_INT_CONST_COUNTER = [0]


def fresh_int_const() -> int:
    _INT_CONST_COUNTER[0] += 1
    return atoms.int_const(_INT_CONST_COUNTER[0])


def reset_int_consts(start: int = 0) -> None:
    _INT_CONST_COUNTER[0] = start


_FUNCTION_KINDS = (Kind.ENTRY, Kind.FREE_FUNC, Kind.DERIV)


def _is_constant_coeff(p: Poly) -> bool:
    for k in p.atoms():
        a = atoms.atom_of(k)
        if a.kind in _FUNCTION_KINDS or a.kind in (Kind.SPECTRAL, Kind.EXP):
            return False
    return True


def ode_solve_linear(rhs, unknown: int, init=None, const_atom: int | None = None) -> RatFunc:
    """Solve ``x'(u) = rhs`` with ``rhs = alpha*x + sum beta*u^m*exp(gamma*u)``.

    ``alpha``, ``beta`` and ``gamma`` must be free of u and of other
    functions.  With ``init`` given, ``x(0) = init`` is enforced; otherwise
    the integration constant atom stays free in the result.
    """
    rhs = normalize(rhs)
    if rhs.den.has_any({unknown}) or not _is_constant_coeff(rhs.den):
        raise Unsupported("denominator depends on u or on a function")
    parts = rhs.num.coeffs_in(unknown)
    if any(e > 1 for e in parts):
        raise Unsupported("nonlinear in the unknown")
    alpha = RatFunc(parts.get(1, ZERO), rhs.den)
    if not _is_constant_coeff(alpha.num):
        raise Unsupported("coefficient of the unknown depends on u")
    u = atoms.spectral("u")
    forcing = parts.get(0, ZERO)
    groups: dict = {}
    for m, c in forcing.terms.items():
        upow = 0
        exps = []
        rest = []
        for k, e in m:
            a = atoms.atom_of(k)
            if k == u:
                upow = e
            elif a.kind == Kind.EXP and a.payload[1] == Arg.U:
                exps.append((k, e))
            elif a.kind in _FUNCTION_KINDS or a.kind in (Kind.SPECTRAL, Kind.EXP):
                raise Unsupported(f"forcing contains {a}")
            else:
                rest.append((k, e))
        key = (upow, tuple(exps))
        groups[key] = groups.get(key, ZERO) + Poly.monomial(tuple(rest), c)

    upoly = Poly.var(u)
    particular = RatFunc.of(0)
    for (m, exps), beta in sorted(groups.items(), key=lambda t: (t[0][0], str(t[0][1]))):
        gamma = RatFunc.of(0)
        for k, e in exps:
            gamma = gamma + atoms.RATES[atoms.atom_of(k).payload[0]] * e
        beta_rf = RatFunc(beta, rhs.den)
        lam = gamma - alpha
        eg = RatFunc(exp_poly(gamma))
        if lam.is_zero():
            term = eg * RatFunc(upoly ** (m + 1)) * Fraction(1, m + 1)
        else:
            q = RatFunc.of(0)
            for j in range(m + 1):
                coef = Fraction((-1) ** j * factorial(m), factorial(m - j))
                q = q + RatFunc(upoly ** (m - j)) * coef / lam ** (j + 1)
            term = eg * q
        particular = particular + beta_rf * term

    homog = RatFunc(exp_poly(alpha))
    if init is None:
        c = const_atom if const_atom is not None else fresh_int_const()
        return normalize(RatFunc(Poly.var(c)) * homog + particular)
    c0 = RatFunc.of(init) - retag(particular, Arg.ZERO)
    return normalize(c0 * homog + particular)


# -- substitution -----------------------------------------------------------


def _subs_map(ids, assignment: Mapping[int, RatFunc]) -> dict:
    """Fractions to substitute for ``ids``, including exponentials whose
    rate mentions an assigned atom."""
    frac = {}
    for k in ids:
        v = assignment.get(k)
        if v is not None:
            v = RatFunc.of(v)
            frac[k] = (v.num, v.den)
            continue
        a = atoms.atom_of(k)
        if a.kind == Kind.EXP:
            rate = atoms.RATES[a.payload[0]]
            if rate.atoms() & assignment.keys():
                new_rate = substitute(rate, assignment)
                frac[k] = (exp_poly(new_rate, a.payload[1]), ONE)
    return frac


def subs_poly(p: Poly, assignment: Mapping[int, RatFunc]) -> tuple[Poly, Poly]:
    """Substitute into a polynomial; returns normalized ``(num, den)``."""
    frac = _subs_map(p.atoms(), assignment)
    if not frac:
        return p, ONE
    n, d = p.subs_frac(frac)
    return normalize_poly(n), normalize_poly(d)


def substitute(e, assignment: Mapping[int, RatFunc]) -> RatFunc:
    """Substitute atoms by closed forms and normalize."""
    e = RatFunc.of(e)
    frac = _subs_map(e.atoms(), assignment)
    if not frac:
        return e
    n1, d1 = e.num.subs_frac(frac)
    n2, d2 = e.den.subs_frac(frac)
    return normalize(RatFunc(n1 * d2, n2 * d1))


def expand_assignment(assignment: Mapping[int, RatFunc]) -> dict[int, RatFunc]:
    """Close an assignment of u-functions under differentiation.

    Assigning ``x(u)`` also assigns ``x'(u)``.
    """
    out = dict(assignment)
    for k, val in assignment.items():
        a = atoms.atom_of(k)
        if a.kind in (Kind.ENTRY, Kind.FREE_FUNC) and a.arg == Arg.U:
            out.setdefault(atoms.deriv_of(k), differentiate(val))
    return out
