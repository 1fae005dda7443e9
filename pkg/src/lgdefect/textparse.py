"""Small expression parser shared by the scalar and polynomial text formats.

Grammar (whitespace is insignificant except as a separator)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/' | <juxtaposition>) unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' INTEGER)?
    atom   := INTEGER | IDENT | '(' expr ')' | '[' expr ']'

Identifiers are ``[A-Za-z][A-Za-z0-9_]*`` followed by any number of primes,
so ``x'`` and ``u''`` are single names.  The caller supplies how identifiers
and integers become values; values only need ``+ - * / **`` and negation.
"""

from __future__ import annotations

import re
from typing import Any, Callable

_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*'*)|(?P<op>[-+*/^()\[\]]))"
)


class ParseError(ValueError):
    """Syntax error with a 1-based line/column location."""

    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.line = line
        self.column = col
        self.reason = message
        super().__init__(f"line {line}, column {col}: {message}")


def tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", n))
    return out


class _Parser:
    def __init__(self, text, ident, integer, bracket_ident):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.ident = ident
        self.integer = integer
        self.bracket_ident = bracket_ident
        self.in_bracket = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok[2])

    def expr(self):
        val = self.term()
        while True:
            kind, v, _ = self.peek()
            if kind == "op" and v in "+-":
                self.take()
                rhs = self.term()
                val = val + rhs if v == "+" else val - rhs
            else:
                return val

    def starts_factor(self):
        kind, v, _ = self.peek()
        return kind in ("int", "ident") or (kind == "op" and v in "([")

    def term(self):
        val = self.unary()
        while True:
            kind, v, _ = self.peek()
            if kind == "op" and v in "*/":
                tok = self.take()
                rhs = self.unary()
                if v == "*":
                    val = val * rhs
                else:
                    try:
                        val = val / rhs
                    except ZeroDivisionError:
                        self.fail("division by zero", tok)
                    except (TypeError, ValueError) as exc:
                        self.fail(f"unsupported division: {exc}", tok)
            elif self.starts_factor():
                val = val * self.unary()
            else:
                return val

    def unary(self):
        kind, v, _ = self.peek()
        if kind == "op" and v in "+-":
            self.take()
            val = self.unary()
            return -val if v == "-" else val
        return self.power()

    def power(self):
        base = self.atom()
        kind, v, _ = self.peek()
        if kind == "op" and v == "^":
            self.take()
            tok = self.take()
            if tok[0] != "int":
                self.fail("exponent must be a non-negative integer", tok)
            return base ** int(tok[1])
        return base

    def atom(self):
        tok = self.take()
        kind, v, _ = tok
        if kind == "int":
            return self.integer(int(v))
        if kind == "ident":
            resolve = self.bracket_ident if self.in_bracket else self.ident
            try:
                return resolve(v)
            except KeyError:
                self.fail(f"unknown identifier {v!r}", tok)
        if kind == "op" and v == "(":
            val = self.expr()
            if self.take()[1] != ")":
                self.fail("expected ')'", self.toks[self.i - 1])
            return val
        if kind == "op" and v == "[":
            self.in_bracket += 1
            val = self.expr()
            self.in_bracket -= 1
            if self.take()[1] != "]":
                self.fail("expected ']'", self.toks[self.i - 1])
            return val
        if kind == "end":
            self.fail("unexpected end of input", tok)
        self.fail(f"unexpected token {v!r}", tok)


def parse_expression(
    text: str,
    ident: Callable[[str], Any],
    integer: Callable[[int], Any],
    bracket_ident: Callable[[str], Any] | None = None,
) -> Any:
    """Evaluate ``text`` with the given identifier and integer constructors.

    ``ident`` must raise ``KeyError`` for unknown names.  Inside square
    brackets ``bracket_ident`` is used instead (defaults to ``ident``).
    """
    p = _Parser(text, ident, integer, bracket_ident or ident)
    if p.peek()[0] == "end":
        p.fail("empty expression")
    val = p.expr()
    if p.peek()[0] != "end":
        p.fail(f"unexpected token {p.peek()[1]!r}")
    return val
