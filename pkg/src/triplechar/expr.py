"""A small arithmetic language for symbol coefficients.

Variables: ``t``, ``x1..xn``, ``xi1..xin``, ``bracket_xi`` and the constant
``pi``. Operators ``+ - * / ^`` (``×`` and ``÷`` are accepted as aliases),
unary minus, parentheses. Functions: ``abs sqrt exp min max``.

Expressions compile to closures over numpy, so ``t`` may be an array.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionError

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),×÷]))"
)

_FUNCS = {
    "abs": (np.abs, 1),
    "sqrt": (np.sqrt, 1),
    "exp": (np.exp, 1),
    "min": (None, -1),
    "max": (None, -1),
}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExpressionError(f"unexpected character {src[bad]!r}", bad, src)
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if text == "×":
            text = "*"
        elif text == "÷":
            text = "/"
        toks.append(_Tok(kind, text, start))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


class _Parser:
    def __init__(self, src: str, dimension: int):
        self.src = src
        self.dim = dimension
        self.toks = _tokenize(src)
        self.i = 0
        self.names: set[str] = set()

    def peek(self):
        return self.toks[self.i]

    def take(self, text=None):
        tok = self.toks[self.i]
        if text is not None and tok.text != text:
            what = tok.text or "end of input"
            raise ExpressionError(f"expected {text!r}, found {what!r}", tok.pos, self.src)
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError(f"unexpected {tok.text!r}", tok.pos, self.src)
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            node = _binary(op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            rhs = self.unary()
            node = _binary(op, node, rhs)
        return node

    def unary(self):
        if self.peek().text == "-":
            self.take()
            inner = self.unary()
            return lambda env: -inner(env)
        if self.peek().text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            exponent = self.unary()
            return lambda env: np.power(base(env), exponent(env))
        return base

    def atom(self):
        tok = self.take()
        if tok.kind == "num":
            value = float(tok.text)
            return lambda env: value
        if tok.text == "(":
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "name":
            if self.peek().text == "(":
                return self.call(tok)
            return self.variable(tok)
        what = tok.text or "end of input"
        raise ExpressionError(f"unexpected {what!r}", tok.pos, self.src)

    def call(self, tok):
        if tok.text not in _FUNCS:
            raise ExpressionError(f"unknown function {tok.text!r}", tok.pos, self.src)
        self.take("(")
        args = [self.expr()]
        while self.peek().text == ",":
            self.take()
            args.append(self.expr())
        self.take(")")
        fn, arity = _FUNCS[tok.text]
        if arity == 1 and len(args) != 1:
            raise ExpressionError(f"{tok.text} takes one argument", tok.pos, self.src)
        if arity == -1 and len(args) < 2:
            raise ExpressionError(f"{tok.text} takes at least two arguments", tok.pos, self.src)
        if tok.text == "min":
            return lambda env: _fold(np.minimum, args, env)
        if tok.text == "max":
            return lambda env: _fold(np.maximum, args, env)
        (arg,) = args
        return lambda env: fn(arg(env))

    def variable(self, tok):
        name = tok.text
        if name == "pi":
            return lambda env: math.pi
        if name in ("t", "bracket_xi"):
            self.names.add(name)
            return lambda env: env[name]
        m = re.fullmatch(r"(x|xi)([1-9][0-9]*)", name)
        if m is None:
            raise ExpressionError(f"unknown variable {name!r}", tok.pos, self.src)
        k = int(m.group(2))
        if k > self.dim:
            raise ExpressionError(
                f"variable {name!r} exceeds the declared dimension {self.dim}", tok.pos, self.src
            )
        self.names.add(name)
        key = m.group(1)
        return lambda env: env[key][k - 1]


def _fold(op, args, env):
    acc = args[0](env)
    for a in args[1:]:
        acc = op(acc, a(env))
    return acc


def _binary(op, lhs, rhs):
    if op == "+":
        return lambda env: lhs(env) + rhs(env)
    if op == "-":
        return lambda env: lhs(env) - rhs(env)
    if op == "*":
        return lambda env: lhs(env) * rhs(env)
    return lambda env: np.divide(lhs(env), rhs(env))


class Expression:
    """Compiled expression, callable as ``f(t, x, xi)``."""

    def __init__(self, source: str, dimension: int = 1):
        if not isinstance(source, str) or not source.strip():
            raise ExpressionError("empty expression", 0, source)
        self.source = source
        self.dimension = dimension
        parser = _Parser(source, dimension)
        self._fn = parser.parse()
        self.variables = frozenset(parser.names)

    def __call__(self, t, x, xi):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        env = {"t": t, "x": x, "xi": xi, "bracket_xi": bracket(xi)}
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._fn(env)
        if np.ndim(t) and np.ndim(out) == 0:
            out = np.full(np.shape(t), out, dtype=float)
        return out

    def __repr__(self):
        return f"Expression({self.source!r}, dimension={self.dimension})"

    @property
    def depends_on_x(self) -> bool:
        return any(v.startswith("x") and not v.startswith("xi") for v in self.variables)


def bracket(xi) -> float:
    xi = np.asarray(xi, dtype=float)
    return float(np.sqrt(1.0 + np.dot(xi, xi)))


def compile_expression(source, dimension: int = 1) -> Expression:
    return Expression(str(source), dimension)
