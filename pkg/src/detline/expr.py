"""Arithmetic expression language for potentials and parameters.

Grammar, loosest binding first:

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?        right associative
    atom    := NUMBER | NAME | NAME '(' sum ')' | '(' sum ')'

``x`` is the free variable and ``i`` the imaginary unit; any other name is a
parameter that has to be bound at evaluation time.  The function names
sin, cos, tan, exp, log, sqrt, sinh, cosh, abs, re, im, conj are reserved
and always take a single parenthesised argument.  There is no implicit
multiplication: ``2x`` is a syntax error.

All arithmetic is complex.  Powers and log follow the principal branch; a
negative real base raised to a non-integer exponent is rejected as a domain
error rather than silently branching.
"""

from __future__ import annotations

import cmath
import re as _re
from dataclasses import dataclass


class ExprSyntaxError(ValueError):
    """Raised when an expression string cannot be parsed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"syntax error at offset {offset}: {message}")
        self.offset = offset


class ExprNameError(ValueError):
    """Raised when evaluation meets a parameter with no bound value."""


class ExprDomainError(ArithmeticError):
    """Raised when evaluation leaves the domain of an operator."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Imag:
    pass


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt",
             "sinh", "cosh", "abs", "re", "im", "conj")

_NUMBER = _re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = _re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in " \t":
            pos += 1
            continue
        m = _NUMBER.match(text, pos)
        if m:
            tokens.append(("num", float(m.group()), pos))
            pos = m.end()
            continue
        m = _NAME.match(text, pos)
        if m:
            tokens.append(("name", m.group(), pos))
            pos = m.end()
            continue
        if ch in "+-*/^":
            tokens.append(("op", ch, pos))
            pos += 1
            continue
        if ch == "(":
            tokens.append(("lparen", ch, pos))
            pos += 1
            continue
        if ch == ")":
            tokens.append(("rparen", ch, pos))
            pos += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", pos)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def parse_sum(self):
        node = self.parse_product()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.parse_product())
            else:
                return node

    def parse_product(self):
        node = self.parse_unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.parse_unary())
            else:
                return node

    def parse_unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        node = self.parse_atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return BinOp("^", node, self.parse_unary())
        return node

    def parse_atom(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return Num(val)
        if kind == "name":
            if val in FUNCTIONS:
                nkind, _, npos = self.peek()
                if nkind != "lparen":
                    raise ExprSyntaxError(
                        f"function {val!r} needs a parenthesised argument", npos)
                self.advance()
                arg = self.parse_sum()
                self._expect_rparen()
                return Call(val, arg)
            if val == "i":
                return Imag()
            if val == "x":
                return Var()
            return Param(val)
        if kind == "lparen":
            node = self.parse_sum()
            self._expect_rparen()
            return node
        raise ExprSyntaxError("expected an operand", pos)

    def _expect_rparen(self):
        kind, _, pos = self.advance()
        if kind != "rparen":
            raise ExprSyntaxError("expected ')'", pos)


def parse(text: str):
    """Parse ``text`` into an expression tree."""
    parser = _Parser(_tokenize(text))
    node = parser.parse_sum()
    kind, val, pos = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected token {val!r}", pos)
    return node


def _power(base: complex, expo: complex) -> complex:
    if expo.imag == 0.0 and float(expo.real).is_integer():
        n = int(expo.real)
        if base == 0 and n < 0:
            raise ExprDomainError("zero raised to a negative power")
        return base ** n
    if base.imag == 0.0:
        if base.real < 0.0:
            raise ExprDomainError(
                "negative real base with non-integer exponent")
        if base.real == 0.0:
            if expo.real > 0.0 and expo.imag == 0.0:
                return 0j
            raise ExprDomainError("zero base with non-positive exponent")
    return cmath.exp(expo * cmath.log(base))


def _call(name: str, z: complex) -> complex:
    if name == "sin":
        return cmath.sin(z)
    if name == "cos":
        return cmath.cos(z)
    if name == "tan":
        return cmath.tan(z)
    if name == "exp":
        return cmath.exp(z)
    if name == "log":
        if z == 0:
            raise ExprDomainError("log of zero")
        return cmath.log(z)
    if name == "sqrt":
        return cmath.sqrt(z)
    if name == "sinh":
        return cmath.sinh(z)
    if name == "cosh":
        return cmath.cosh(z)
    if name == "abs":
        return complex(abs(z))
    if name == "re":
        return complex(z.real)
    if name == "im":
        return complex(z.imag)
    if name == "conj":
        return z.conjugate()
    raise ExprNameError(f"unknown function {name!r}")


def evaluate(node, x: complex = 0.0, params: dict | None = None) -> complex:
    """Evaluate an expression tree at the point ``x``.

    ``params`` maps parameter names to complex values.  Unbound parameters
    raise ExprNameError, domain violations raise ExprDomainError.
    """
    cls = type(node)
    if cls is Num:
        return complex(node.value)
    if cls is Var:
        return complex(x)
    if cls is Imag:
        return 1j
    if cls is Param:
        if params is None or node.name not in params:
            raise ExprNameError(f"unbound parameter {node.name!r}")
        return complex(params[node.name])
    if cls is Neg:
        return -evaluate(node.arg, x, params)
    if cls is BinOp:
        lhs = evaluate(node.lhs, x, params)
        rhs = evaluate(node.rhs, x, params)
        op = node.op
        if op == "+":
            return lhs + rhs
        if op == "-":
            return lhs - rhs
        if op == "*":
            return lhs * rhs
        if op == "/":
            if rhs == 0:
                raise ExprDomainError(f"division by zero (x = {x})")
            return lhs / rhs
        return _power(lhs, rhs)
    if cls is Call:
        return _call(node.name, evaluate(node.arg, x, params))
    raise TypeError(f"not an expression node: {node!r}")


def _fmt_float(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return format(v, ".17g")


# precedence levels used by the printer; match the grammar above
_ADD, _MUL, _NEG, _POW, _ATOM = 10, 20, 30, 40, 50


def _fmt(node, ctx: int) -> str:
    cls = type(node)
    if cls is Num:
        if node.value < 0:
            s, prec = "-" + _fmt_float(-node.value), _NEG
        else:
            s, prec = _fmt_float(node.value), _ATOM
    elif cls is Var:
        s, prec = "x", _ATOM
    elif cls is Imag:
        s, prec = "i", _ATOM
    elif cls is Param:
        s, prec = node.name, _ATOM
    elif cls is Neg:
        s, prec = "-" + _fmt(node.arg, _NEG), _NEG
    elif cls is Call:
        s, prec = f"{node.name}({_fmt(node.arg, 0)})", _ATOM
    elif cls is BinOp:
        if node.op == "^":
            s = _fmt(node.lhs, _POW + 1) + "^" + _fmt(node.rhs, _NEG)
            prec = _POW
        elif node.op in "*/":
            s = _fmt(node.lhs, _MUL) + node.op + _fmt(node.rhs, _MUL + 1)
            prec = _MUL
        else:
            s = _fmt(node.lhs, _ADD) + " " + node.op + " " + _fmt(node.rhs, _ADD + 1)
            prec = _ADD
    else:
        raise TypeError(f"not an expression node: {node!r}")
    if prec < ctx:
        return "(" + s + ")"
    return s


def to_string(node) -> str:
    """Render a tree back to source text; parse(to_string(e)) == e."""
    return _fmt(node, 0)


def free_params(node) -> set:
    """Names of parameters appearing in the tree."""
    cls = type(node)
    if cls is Param:
        return {node.name}
    if cls is Neg:
        return free_params(node.arg)
    if cls is BinOp:
        return free_params(node.lhs) | free_params(node.rhs)
    if cls is Call:
        return free_params(node.arg)
    return set()
