"""Bounds files: finite enumerations that make carriers checkable.

Format is a flat list of ``key = value`` entries with ``--`` comments::

    Client = {c1}
    RAT = {0, 1, 2, 3}
    maxDebt = 3
    newLoan.dur = {1, 2}
    risk = {(c1, 0) |-> low, (c1, 1) |-> high}

Keys name atom sets, ``RAT``/``NAT``, constants, or ``event.param``
overrides.  Values are literal expressions; identifiers are atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast as A
from .diagnostics import SpecError, error_at
from .parser import Parser, _guard
from ..values import Rat, EvalFault, Value


@dataclass(frozen=True)
class BoundsEntry:
    key: str
    value: Value
    pos: tuple = field(default=None, compare=False)
    file: str = field(default="<input>", compare=False)


@dataclass(frozen=True)
class Bounds:
    entries: tuple = ()

    def get(self, key: str):
        for e in self.entries:
            if e.key == key:
                return e
        return None

    def with_file(self, file: str) -> "Bounds":
        return Bounds(tuple(BoundsEntry(e.key, e.value, e.pos, file) for e in self.entries))

    def keys(self) -> list:
        return [e.key for e in self.entries]

    def with_entries(self, **values) -> "Bounds":
        """Copy with some entries replaced or added (keys use ``.`` via ``__``)."""
        repl = {k.replace("__", "."): v for k, v in values.items()}
        out = [BoundsEntry(e.key, repl.pop(e.key), e.pos, e.file) if e.key in repl else e
               for e in self.entries]
        out += [BoundsEntry(k, v) for k, v in repl.items()]
        return Bounds(tuple(out))


def literal_value(e: A.Expr) -> Value:
    """Value of a closed literal expression; identifiers denote atoms."""
    if isinstance(e, A.BoolLit):
        return e.value
    if isinstance(e, A.NumLit):
        return e.value
    if isinstance(e, A.Name) and not e.primed:
        return e.id
    if isinstance(e, A.Pair):
        return (literal_value(e.left), literal_value(e.right))
    if isinstance(e, A.SetDisplay):
        return frozenset(literal_value(x) for x in e.elems)
    if isinstance(e, A.Unary) and e.op == "neg":
        v = literal_value(e.operand)
        if isinstance(v, Rat):
            return -v
    if isinstance(e, A.Binary) and e.op in ("add", "sub", "mul", "div"):
        a, b = literal_value(e.left), literal_value(e.right)
        if isinstance(a, Rat) and isinstance(b, Rat):
            if e.op == "add":
                return a + b
            if e.op == "sub":
                return a - b
            if e.op == "mul":
                return a * b
            if b == 0:
                raise EvalFault("division by zero")
            return a / b
    raise EvalFault("not a literal value")


def parse_bounds(text: str) -> Bounds:
    def run():
        p = Parser(text)
        entries: list[BoundsEntry] = []
        seen: set = set()
        while p.tok.kind != "eof":
            t = p.tok
            if t.kind == "ident" or (t.kind == "kw" and t.text in ("RAT", "NAT")):
                p.advance()
            else:
                p.fail(f"expected a bounds key but found {p.describe(t)}")
            key = t.text
            if p.accept("."):
                key += "." + p.ident().text
            p.expect("=")
            expr = p.expr()
            try:
                value = literal_value(expr)
            except EvalFault as exc:
                raise SpecError([error_at(t.pos, f"bad value for '{key}': {exc}")]) from None
            if (key in ("RAT", "NAT") and isinstance(expr, A.SetDisplay)
                    and len(value) != len(expr.elems)):
                raise SpecError([error_at(t.pos, f"duplicate value in the {key} domain")])
            if key in seen:
                raise SpecError([error_at(t.pos, f"duplicate bounds entry '{key}'")])
            seen.add(key)
            entries.append(BoundsEntry(key, value, t.pos))
        return Bounds(tuple(entries))

    return _guard(run)
