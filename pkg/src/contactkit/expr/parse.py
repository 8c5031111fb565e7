"""Pratt parser for the expression grammar.

Grammar summary::

    expr     := expr ('+'|'-') expr | expr ('*'|'/') expr | expr '^' expr
              | '-' expr | '(' expr ')' | atom
    atom     := INT | IDENT | IDENT '(' args ')' | 'pd' '(' IDENT ';' ints ')' '(' args ')'

``^`` is right associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)``.  Identifiers that are neither reserved jet variables, elementary
function names, declared opaque symbols nor macros become parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .core import ELEMENTARY, Expr, add, fn, mul, neg, num, opaque, param, power, var

RESERVED_VARS = frozenset(
    ["t", "x", "u", "u_t", "u_x", "u_xx", "u_tx", "u_tt"] + [f"u_{k}" for k in range(3, 9)]
)
FUNCTIONS = frozenset(ELEMENTARY) | {"sqrt"}
KEYWORDS = FUNCTIONS | {"pd"}


class ParseError(ValueError):
    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        where = "" if position is None else f" at position {position}"
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class OpaqueSymbol:
    """An arbitrary function symbol; ``constraints`` are expressions asserted nonzero."""

    name: str
    arity: int
    constraints: tuple[Expr, ...] = ()

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("opaque symbols need arity >= 1")


@dataclass
class SymbolTable:
    opaque: dict[str, OpaqueSymbol] = field(default_factory=dict)
    macros: dict[str, Expr] = field(default_factory=dict)

    def declare(self, name: str, arity: int) -> OpaqueSymbol:
        if name in RESERVED_VARS or name in KEYWORDS:
            raise ValueError(f"{name!r} is reserved")
        old = self.opaque.get(name)
        if old is not None and old.arity != arity:
            raise ValueError(f"opaque symbol {name!r} redeclared with arity {arity}")
        sym = old or OpaqueSymbol(name, arity)
        self.opaque[name] = sym
        return sym

    @classmethod
    def of(cls, **arities: int) -> "SymbolTable":
        table = cls()
        for name, n in arities.items():
            table.declare(name, n)
        return table


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.group(1) is not None:
            out.append(("int", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            out.append(("ident", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*/^(),;":
                raise ParseError(f"unexpected character {ch!r}", m.start(3), text)
            out.append(("op", ch, m.start(3)))
        pos = m.end()
    out.append(("end", "", n))
    return out


_INFIX = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (31, 30)}
_UNARY_BP = 25


class _Parser:
    def __init__(self, text: str, table: SymbolTable):
        self.text = text
        self.table = table
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.next()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.text)

    def error(self, message: str, pos: int):
        raise ParseError(message, pos, self.text)

    def parse(self) -> Expr:
        e = self.expr(0)
        kind, val, pos = self.peek()
        if kind != "end":
            self.error(f"unexpected token {val!r}", pos)
        return e

    def expr(self, min_bp: int) -> Expr:
        lhs = self.prefix()
        while True:
            kind, op, pos = self.peek()
            if kind != "op" or op not in _INFIX:
                break
            lbp, rbp = _INFIX[op]
            if lbp < min_bp:
                break
            self.next()
            rhs = self.expr(rbp)
            if op == "+":
                lhs = add(lhs, rhs)
            elif op == "-":
                lhs = add(lhs, neg(rhs))
            elif op == "*":
                lhs = mul(lhs, rhs)
            elif op == "/":
                try:
                    lhs = mul(lhs, power(rhs, num(-1)))
                except ZeroDivisionError:
                    self.error("division by zero", pos)
            else:
                try:
                    lhs = power(lhs, rhs)
                except ZeroDivisionError:
                    self.error("zero raised to a negative power", pos)
        return lhs

    def prefix(self) -> Expr:
        kind, val, pos = self.next()
        if kind == "int":
            return num(Fraction(int(val)))
        if kind == "op" and val == "-":
            return neg(self.expr(_UNARY_BP))
        if kind == "op" and val == "(":
            e = self.expr(0)
            self.expect(")")
            return e
        if kind == "ident":
            return self.identifier(val, pos)
        if kind == "end":
            self.error("unexpected end of input", pos)
        self.error(f"unexpected token {val!r}", pos)

    def args(self) -> list[Expr]:
        self.expect("(")
        out = [self.expr(0)]
        while self.peek()[1] == ",":
            self.next()
            out.append(self.expr(0))
        self.expect(")")
        return out

    def identifier(self, name: str, pos: int) -> Expr:
        calls = self.peek()[1] == "(" and self.peek()[0] == "op"
        if name == "pd":
            return self.derivative(pos)
        if name in FUNCTIONS:
            if not calls:
                self.error(f"function {name!r} needs an argument", pos)
            args = self.args()
            if len(args) != 1:
                self.error(f"function {name!r} takes one argument", pos)
            return fn(name, args[0])
        if name in RESERVED_VARS:
            if calls:
                self.error(f"variable {name!r} cannot be applied", pos)
            return var(name)
        sym = self.table.opaque.get(name)
        if sym is not None:
            if not calls:
                self.error(f"opaque symbol {name!r} must be applied to arguments", pos)
            args = self.args()
            if len(args) != sym.arity:
                self.error(f"{name!r} expects {sym.arity} arguments, got {len(args)}", pos)
            return opaque(name, args)
        if name in self.table.macros:
            if calls:
                self.error(f"binding {name!r} cannot be applied", pos)
            return self.table.macros[name]
        if calls:
            self.error(f"unknown function symbol {name!r}", pos)
        return param(name)

    def derivative(self, pos: int) -> Expr:
        self.expect("(")
        kind, name, npos = self.next()
        if kind != "ident":
            self.error("expected a function name after 'pd('", npos)
        sym = self.table.opaque.get(name)
        if sym is None:
            self.error(f"unknown opaque symbol {name!r}", npos)
        self.expect(";")
        index = []
        while True:
            kind, val, ipos = self.next()
            if kind != "int":
                self.error("expected a derivative order", ipos)
            index.append(int(val))
            if self.peek()[1] != ",":
                break
            self.next()
        self.expect(")")
        args = self.args()
        if len(index) != sym.arity or len(args) != sym.arity:
            self.error(f"{name!r} has arity {sym.arity}", pos)
        return opaque(name, args, index)


def parse(text: str, table: SymbolTable | None = None) -> Expr:
    """Parse ``text`` into a canonical expression."""
    return _Parser(text, table or SymbolTable()).parse()
