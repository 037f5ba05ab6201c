"""Recursive-descent parser for the query language.

Grammar (ASCII)::

    formula    := implication
    implication:= disjunction ("->" implication)?
    disjunction:= conjunction ("|" conjunction)*
    conjunction:= unary ("&" unary)*
    unary      := "!" unary | quantified | "(" formula ")" | atom | "true" | "false"
    quantified := ("exists"|"forall") var "."? formula
                | "#" var "."? formula cmp int
    cmp        := ">" | "<=" | ">=" | "<"
    atom       := ident "(" term ("," term)? ")" | term "=" term | term "!=" term
    term       := var | ident "(" term ")"

A quantifier body extends as far to the right as possible; the dot after
the bound variable may be left out.  ``E`` is the
edge relation; any other one-argument application in atom position is a
label test, and in term position (left of ``=``) a function application.
"""

from __future__ import annotations

import re

from .errors import QuerySyntaxError
from .logic import (FALSE, TRUE, And, App, Count, Edge, Eq, Exists, Forall, Formula,
                    Implies, Not, Or, Pred, Var, rename_apart)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>-?\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)|"
    r"(?P<op>->|<=|>=|!=|[()#.,=!&|<>]))"
)
KEYWORDS = {"exists", "forall", "true", "false"}


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def optional(self, value: str) -> bool:
        kind, text, _ = self.peek()
        if kind == "op" and text == value:
            self.advance()
            return True
        return False

    def expect(self, value: str):
        kind, text, pos = self.peek()
        if text != value or kind == "end":
            got = "end of input" if kind == "end" else repr(text)
            raise QuerySyntaxError(f"expected {value!r}, got {got}", pos)
        return self.advance()

    def error(self, message: str):
        kind, text, pos = self.peek()
        got = "end of input" if kind == "end" else repr(text)
        raise QuerySyntaxError(f"{message}, got {got}", pos)

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.peek()[1] == "->" and self.peek()[0] == "op":
            self.advance()
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.peek()[:2] == ("op", "|"):
            self.advance()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.peek()[:2] == ("op", "&"):
            self.advance()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        kind, text, pos = self.peek()
        if kind == "op" and text == "!":
            self.advance()
            return Not(self.unary())
        if kind == "op" and text == "(":
            self.advance()
            f = self.formula()
            self.expect(")")
            return f
        if kind == "op" and text == "#":
            self.advance()
            var = self.variable()
            self.optional(".")
            body = self.formula()
            kind, cmp, pos = self.peek()
            if kind != "op" or cmp not in (">", "<=", ">=", "<"):
                self.error("expected comparator after counting body")
            self.advance()
            kind, num, pos = self.peek()
            if kind != "num":
                self.error("expected integer threshold")
            self.advance()
            return Count(var, body, cmp, int(num))
        if kind == "ident" and text in ("exists", "forall"):
            self.advance()
            var = self.variable()
            self.optional(".")
            body = self.formula()
            return Exists(var, body) if text == "exists" else Forall(var, body)
        if kind == "ident" and text == "true":
            self.advance()
            return TRUE
        if kind == "ident" and text == "false":
            self.advance()
            return FALSE
        if kind == "ident":
            return self.atom()
        self.error("expected a formula")

    def variable(self) -> str:
        kind, text, pos = self.peek()
        if kind != "ident" or text in KEYWORDS:
            self.error("expected a variable")
        self.advance()
        return text

    def atom(self) -> Formula:
        kind, name, pos = self.peek()
        if self.peek(1)[1] == "(":
            # decide between predicate/edge application and a term on the left of '='
            save = self.i
            self.advance()
            self.advance()
            first = self.term()
            if self.peek()[1] == ",":
                self.advance()
                second = self.term()
                self.expect(")")
                if name != "E":
                    raise QuerySyntaxError(f"only E takes two arguments, not {name!r}", pos)
                if not (isinstance(first, Var) and isinstance(second, Var)):
                    raise QuerySyntaxError("E relates variables only", pos)
                return Edge(first, second)
            self.expect(")")
            if self.peek()[1] not in ("=", "!="):
                if name == "E":
                    raise QuerySyntaxError("E takes two arguments", pos)
                return Pred(name, first)
            self.i = save
        left = self.term()
        kind, op, pos = self.peek()
        if op not in ("=", "!="):
            self.error("expected '=' after term")
        self.advance()
        right = self.term()
        atom = Eq(left, right)
        return Not(atom) if op == "!=" else atom

    def term(self):
        kind, name, pos = self.peek()
        if kind != "ident" or name in KEYWORDS:
            self.error("expected a term")
        self.advance()
        if self.peek()[1] == "(":
            if name == "E":
                raise QuerySyntaxError("E is a relation, not a function", pos)
            self.advance()
            inner = self.term()
            self.expect(")")
            return App(name, inner)
        return Var(name)


def parse_query(text: str) -> Formula:
    """Parse a query; bound variables are renamed apart."""
    p = _Parser(text)
    f = p.formula()
    if p.peek()[0] != "end":
        p.error("unexpected trailing input")
    return rename_apart(f)
