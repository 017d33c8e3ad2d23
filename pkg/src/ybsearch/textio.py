"""Parser for the canonical text form of polynomials and closed forms.

The grammar covers everything :meth:`Poly.to_text` and
:meth:`RatFunc.to_text` emit, plus a few conveniences used in data files
(``^`` or ``**`` for powers, ``I`` for the imaginary unit, ``sqrt(2)``).

Names are resolved as follows::

    u, v                  spectral variables
    R14(u), R14(0), ...   unknown entry functions (1-based row/column)
    R'14(0)               initial derivative
    R'14(u), r1'(u)       derivative atoms
    r1(u), r2(u+v), ...   free functions
    C1, C2, ...           integration constants
    i, I, sqrt(2)         algebraic units
    exp(expr)             exponentials, expr linear in u and v
    anything else         seed parameter
"""

from __future__ import annotations

import re
from fractions import Fraction

from ybsearch import closedform as cf
from ybsearch.algebra import atoms
from ybsearch.algebra.atoms import Arg
from ybsearch.algebra.poly import Poly
from ybsearch.algebra.ratfunc import RatFunc


class ParseError(ValueError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>R'\d\d|[A-Za-z][A-Za-z0-9_]*'?)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        pos = m.end()
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "op" and val == "**":
            val = "^"
        out.append((kind, val))
    return out


_ENTRY = re.compile(r"R(\d)(\d)\Z")
_DENTRY = re.compile(r"R'(\d)(\d)\Z")
_FREE = re.compile(r"r(\d+)\Z")
_DFREE = re.compile(r"r(\d+)'\Z")
_ICONST = re.compile(r"C(\d+)\Z")


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, val=None):
        tok = self.peek()
        if tok[0] is None or (val is not None and tok[1] != val):
            raise ParseError(f"expected {val!r} in {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> RatFunc:
        e = self.expr()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input in {self.text!r}")
        return e

    def expr(self) -> RatFunc:
        acc = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> RatFunc:
        acc = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            t = self.unary()
            acc = acc * t if op == "*" else acc / t
        return acc

    def unary(self) -> RatFunc:
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> RatFunc:
        base = self.primary()
        if self.peek()[1] == "^":
            self.take()
            neg = False
            if self.peek()[1] == "-":
                self.take()
                neg = True
            if self.peek()[1] == "(":
                self.take("(")
                if self.peek()[1] == "-":
                    self.take()
                    neg = not neg
                kind, val = self.take()
                self.take(")")
            else:
                kind, val = self.take()
            if kind != "num":
                raise ParseError("exponent must be an integer")
            n = int(val)
            return base ** (-n if neg else n)
        return base

    def _arg(self) -> Arg:
        self.take("(")
        start = self.i
        depth = 0
        while True:
            kind, val = self.peek()
            if kind is None:
                raise ParseError("unclosed argument")
            if val == "(":
                depth += 1
            elif val == ")":
                if depth == 0:
                    break
                depth -= 1
            self.i += 1
        body = "".join(v for _, v in self.toks[start:self.i])
        self.take(")")
        body = body.replace("(", "").replace(")", "")
        table = {"0": Arg.ZERO, "u": Arg.U, "v": Arg.V, "u+v": Arg.UPV, "v+u": Arg.UPV}
        if body not in table:
            raise ParseError(f"unsupported function argument {body!r}")
        return table[body]

    def primary(self) -> RatFunc:
        kind, val = self.take()
        if kind == "num":
            return RatFunc.of(int(val))
        if val == "(":
            e = self.expr()
            self.take(")")
            return e
        if kind != "name":
            raise ParseError(f"unexpected {val!r} in {self.text!r}")
        nxt = self.peek()[1]
        if val == "exp":
            self.take("(")
            e = self.expr()
            self.take(")")
            return RatFunc(_exp_of(e))
        if val == "sqrt":
            self.take("(")
            e = self.expr()
            self.take(")")
            if e != RatFunc.of(2):
                raise ParseError("only sqrt(2) is supported")
            return RatFunc(Poly.var(atoms.algebraic("sqrt2")))
        if val in ("i", "I"):
            return RatFunc(Poly.var(atoms.algebraic("i")))
        if val == "sqrt2":
            return RatFunc(Poly.var(atoms.algebraic("sqrt2")))
        if val in ("u", "v"):
            return RatFunc(Poly.var(atoms.spectral(val)))
        m = _DENTRY.match(val)
        if m:
            arg = self._arg()
            r, c = int(m.group(1)), int(m.group(2))
            if arg == Arg.ZERO:
                return RatFunc(Poly.var(atoms.init_deriv(r, c)))
            return RatFunc(Poly.var(atoms.deriv_of(atoms.entry(r, c, arg))))
        m = _DFREE.match(val)
        if m:
            arg = self._arg()
            return RatFunc(Poly.var(atoms.deriv_of(atoms.free_func(int(m.group(1)), arg))))
        if nxt == "(":
            m = _ENTRY.match(val)
            if m:
                arg = self._arg()
                return RatFunc(Poly.var(atoms.entry(int(m.group(1)), int(m.group(2)), arg)))
            m = _FREE.match(val)
            if m:
                arg = self._arg()
                return RatFunc(Poly.var(atoms.free_func(int(m.group(1)), arg)))
            raise ParseError(f"unknown function {val!r}")
        m = _ICONST.match(val)
        if m:
            return RatFunc(Poly.var(atoms.int_const(int(m.group(1)))))
        return RatFunc(Poly.var(atoms.param(val)))


def _exp_of(e: RatFunc) -> Poly:
    """``exp(e)`` for ``e = a*u + b*v`` with a, b free of u and v."""
    u = atoms.spectral("u")
    v = atoms.spectral("v")
    if e.den.has_any({u, v}):
        raise ParseError("exponent must be linear in u and v")
    parts = e.num.split({u, v})
    out = Poly.const(1)
    for mono, coeff in parts.items():
        rate = RatFunc(coeff, e.den)
        if mono == ((u, 1),):
            out = out * cf.exp_poly(rate, Arg.U)
        elif mono == ((v, 1),):
            out = out * cf.exp_poly(rate, Arg.V)
        elif mono == () and rate.is_zero():
            continue
        else:
            raise ParseError("exponent must be linear in u and v without constant part")
    return out


def parse_expr(text: str) -> RatFunc:
    """Parse one expression into a normalized rational closed form."""
    if not isinstance(text, str):
        return RatFunc.of(Fraction(text))
    return cf.normalize(_Parser(text).parse())


def parse_poly(text: str) -> Poly:
    r = parse_expr(text)
    if not r.den.is_constant():
        raise ParseError(f"not a polynomial: {text!r}")
    return r.num / r.den.constant_value()


def to_text(e) -> str:
    return RatFunc.of(e).to_text()
