"""Minimal arithmetic expression grammar for user-supplied nonlinearities.

Supported: ``+ - * / ^``, ``exp(...)``, ``log(...)``, parentheses, numeric
literals, the named constants ``e`` and ``pi``, and the single variable
``t``.  ``^`` is right-associative and binds tighter than unary minus,
so ``-t^2`` parses as ``-(t^2)``.

Parsing failures raise :class:`~gelfand4.errors.ExpressionError` with the
1-based line and column of the offending token.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ExpressionError

_TOKEN_RE = re.compile(r"""
    (?P<num>\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
  | (?P<ws>[ \t]+)
  | (?P<nl>\n)
""", re.VERBOSE)

_CONSTANTS = {"e": math.e, "pi": math.pi}
_FUNCTIONS = {"exp": np.exp, "log": np.log}


@dataclass
class _Token:
    kind: str   # 'num' | 'name' | 'op' | 'end'
    text: str
    line: int
    col: int


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind == "ws":
            col += len(lexeme)
        else:
            tokens.append(_Token(kind, lexeme, line, col))
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        tok = self.next()
        if tok.kind != "op" or tok.text != op:
            raise ExpressionError(
                f"expected {op!r}, found {tok.text or 'end of input'!r}",
                tok.line, tok.col)
        return tok

    # expr := term (('+'|'-') term)*
    def expression(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            rhs = self.term()
            node = ("add" if op == "+" else "sub", node, rhs)
        return node

    # term := unary (('*'|'/') unary)*
    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            rhs = self.unary()
            node = ("mul" if op == "*" else "div", node, rhs)
        return node

    # unary := '-' unary | power
    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.next()
            return ("neg", self.unary())
        return self.power()

    # power := atom ('^' unary)?      (right associative)
    def power(self):
        node = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.next()
            return ("pow", node, self.unary())
        return node

    def atom(self):
        tok = self.next()
        if tok.kind == "num":
            return ("const", float(tok.text))
        if tok.kind == "name":
            if tok.text == "t":
                return ("var",)
            if tok.text in _CONSTANTS:
                return ("const", _CONSTANTS[tok.text])
            if tok.text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                return ("call", tok.text, arg)
            raise ExpressionError(f"unknown name {tok.text!r}", tok.line, tok.col)
        if tok.kind == "op" and tok.text == "(":
            node = self.expression()
            self.expect_op(")")
            return node
        raise ExpressionError(
            f"expected a value, found {tok.text or 'end of input'!r}",
            tok.line, tok.col)


def _compile(node) -> Callable:
    op = node[0]
    if op == "const":
        value = node[1]
        return lambda t: np.full_like(np.asarray(t, dtype=float), value) \
            if np.ndim(t) else value
    if op == "var":
        return lambda t: np.asarray(t, dtype=float) if np.ndim(t) else float(t)
    if op == "neg":
        inner = _compile(node[1])
        return lambda t: -inner(t)
    if op == "call":
        fn = _FUNCTIONS[node[1]]
        inner = _compile(node[2])
        return lambda t: fn(inner(t))
    lhs, rhs = _compile(node[1]), _compile(node[2])
    if op == "add":
        return lambda t: lhs(t) + rhs(t)
    if op == "sub":
        return lambda t: lhs(t) - rhs(t)
    if op == "mul":
        return lambda t: lhs(t) * rhs(t)
    if op == "div":
        return lambda t: lhs(t) / rhs(t)
    if op == "pow":
        return lambda t: np.power(lhs(t), rhs(t))
    raise AssertionError(f"unhandled node {op}")


@dataclass(frozen=True)
class Expression:
    """A parsed expression in the variable ``t``; callable on scalars or arrays."""

    text: str
    ast: tuple
    fn: Callable

    def __call__(self, t):
        with np.errstate(all="ignore"):
            return self.fn(t)


def parse_expression(text: str) -> Expression:
    tokens = _tokenize(text)
    parser = _Parser(tokens)
    ast = parser.expression()
    trailing = parser.peek()
    if trailing.kind != "end":
        raise ExpressionError(
            f"unexpected trailing input {trailing.text!r}",
            trailing.line, trailing.col)
    return Expression(text=text, ast=ast, fn=_compile(ast))
