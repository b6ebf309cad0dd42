"""Recursive-descent parser for polynomial expressions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' INT)?
    atom   := INT | NAME | '(' expr ')'
"""

from __future__ import annotations

import re

from .poly import Poly, RingCtx

MAX_EXPONENT = 64

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


class ParseError(ValueError):
    def __init__(self, message: str, pos: int, src: str = ""):
        self.pos = pos
        self.src = src
        super().__init__(f"{message} at position {pos}")


def tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:  # only trailing whitespace left
            break
        if m.group(1) is not None:
            tokens.append(("int", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*^()":
                raise ParseError(f"unexpected character {ch!r}", m.start(3), src)
            tokens.append(("op", ch, m.start(3)))
        pos = m.end()
    tokens.append(("eof", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, ctx: RingCtx):
        self.src = src
        self.ctx = ctx
        self.tokens = tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "eof" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.src)

    def parse(self) -> Poly:
        result = self.expr()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected token {text!r}", pos, self.src)
        return result

    def expr(self) -> Poly:
        acc = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> Poly:
        acc = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            acc = acc * self.unary()
        return acc

    def unary(self) -> Poly:
        kind, text, _ = self.peek()
        if kind == "op" and text in "+-":
            self.take()
            inner = self.unary()
            return -inner if text == "-" else inner
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, text, pos = self.take()
            if kind != "int":
                raise ParseError("exponent must be a nonnegative integer literal", pos, self.src)
            k = int(text)
            if k > MAX_EXPONENT:
                raise ParseError(f"exponent {k} exceeds {MAX_EXPONENT}", pos, self.src)
            return base ** k
        return base

    def atom(self) -> Poly:
        kind, text, pos = self.take()
        if kind == "int":
            return self.ctx.const(int(text))
        if kind == "name":
            if text not in self.ctx.vars:
                raise ParseError(f"unknown variable {text!r}", pos, self.src)
            return self.ctx.var(text)
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        found = "end of input" if kind == "eof" else repr(text)
        raise ParseError(f"unexpected {found}", pos, self.src)


def parse_poly(src: str, ctx: RingCtx) -> Poly:
    return _Parser(src, ctx).parse()


def _has_top_level_sum(tokens) -> bool:
    depth = 0
    prev = None
    for kind, text, _ in tokens:
        if kind == "op" and text == "(":
            depth += 1
        elif kind == "op" and text == ")":
            depth -= 1
        elif kind == "op" and text in "+-" and depth == 0:
            binary = prev is not None and (prev[0] in ("int", "name") or prev[1] == ")")
            if binary:
                return True
        prev = (kind, text)
    return False


def parse_factored(src: str, ctx: RingCtx) -> list[Poly]:
    """Split a product like "x * y * (x+y)" into its top-level factors.

    An expression with a top-level sum, such as "x^2 + y^3" or "x*y + u*v",
    is read as a single factor.
    """
    parser = _Parser(src, ctx)
    if _has_top_level_sum(parser.tokens):
        return [parser.parse()]
    factors = [parser.unary()]
    while parser.peek()[0] == "op" and parser.peek()[1] == "*":
        parser.take()
        factors.append(parser.unary())
    kind, text, pos = parser.peek()
    if kind != "eof":
        raise ParseError(f"expected '*' between factors, found {text!r}", pos, src)
    return factors
