"""Recursive-descent parser for polynomial expressions.

Grammar (whitespace is insignificant)::

    integer  ::= [0-9]+
    rational ::= integer ('/' integer)?
    var      ::= 'x' integer
    atom     ::= rational | var | '(' expr ')'
    factor   ::= atom ('^' integer)?
    term     ::= factor (('*' factor) | ('/' integer))*
    expr     ::= '-'? term (('+' | '-') term)*

Two conveniences beyond the bare grammar are accepted: a leading minus sign
on an expression, and division of a term by an integer (``x1*x3/2``).
"""
from __future__ import annotations

from gmpy2 import mpq

from .polynomial import Chart, Polynomial


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownVariable(ParseError):
    pass


class _Parser:
    def __init__(self, text: str, chart: Chart):
        self.text = text
        self.chart = chart
        self.pos = 0
        self.index = {name: i for i, name in enumerate(chart.names)}

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = repr(self.text[self.pos]) if self.pos < len(self.text) else "end of input"
            raise ParseError(f"expected {ch!r}, found {found}", self.pos)
        self.pos += 1

    def integer(self) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in "0123456789":
            self.pos += 1
        if start == self.pos:
            raise ParseError("expected integer", start)
        return int(self.text[start : self.pos])

    def expr(self) -> Polynomial:
        negate = False
        if self.peek() == "-":
            self.pos += 1
            negate = True
        value = self.term()
        if negate:
            value = -value
        while self.peek() in ("+", "-") and self.peek():
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> Polynomial:
        value = self.factor()
        while self.peek() in ("*", "/") and self.peek():
            op = self.text[self.pos]
            self.pos += 1
            if op == "*":
                value = value * self.factor()
            else:
                at = self.pos
                d = self.integer()
                if d == 0:
                    raise ParseError("division by zero", at)
                value = value.scale(mpq(1, d))
        return value

    def factor(self) -> Polynomial:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            base = base ** self.integer()
        return base

    def atom(self) -> Polynomial:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            value = self.expr()
            self.expect(")")
            return value
        if ch.isdigit():
            num = self.integer()
            den = 1
            if self.peek() == "/":
                save = self.pos
                self.pos += 1
                if self.peek().isdigit():
                    at = self.pos
                    den = self.integer()
                    if den == 0:
                        raise ParseError("zero denominator", at)
                else:
                    self.pos = save
            return Polynomial.const(self.chart, mpq(num, den))
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isalnum():
                self.pos += 1
            name = self.text[start : self.pos]
            if name not in self.index:
                raise UnknownVariable(f"unknown variable {name!r}", start)
            return Polynomial.var(self.chart, self.index[name])
        if not ch:
            raise ParseError("unexpected end of input", self.pos)
        raise ParseError(f"unexpected character {ch!r}", self.pos)


def parse_polynomial(text: str, chart: Chart) -> Polynomial:
    """Parse ``text`` into a canonical :class:`Polynomial` on ``chart``."""
    parser = _Parser(text, chart)
    value = parser.expr()
    parser.skip()
    if parser.pos != len(text):
        raise ParseError(f"unexpected character {text[parser.pos]!r}", parser.pos)
    return value
