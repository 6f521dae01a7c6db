"""Syntax trees for systems, predicates and refinement declarations.

Nodes are frozen dataclasses; source positions never take part in
equality so that ``parse(pretty(tree)) == tree`` can be tested directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .types import Type
from ..values import Rat

Pos = Optional[tuple]


def _pos():
    return field(default=None, compare=False, repr=False)


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class NumLit(Expr):
    value: Rat
    pos: Pos = _pos()


@dataclass(frozen=True)
class Name(Expr):
    id: str
    primed: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "not" | "neg"
    operand: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Pair(Expr):
    left: Expr
    right: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class SetDisplay(Expr):
    elems: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binder:
    name: str
    domain: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Comprehension(Expr):
    """``{e : x \\in S | p}`` (kind "set") or ``SUM{e : x \\in S | p}`` (kind "sum")."""

    kind: str
    expr: Expr
    binders: tuple
    cond: Optional[Expr] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Quant(Expr):
    kind: str  # "forall" | "exists"
    binders: tuple
    body: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Apply(Expr):
    fn: Expr
    args: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class FunSpace(Expr):
    """``[S -> T]``: the set of total functions from S into T."""

    dom: Expr
    ran: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Builtin(Expr):
    name: str  # "dom" | "ran" | "card"
    arg: Expr
    pos: Pos = _pos()


BINARY_OPS = {
    "equiv": "<=>",
    "implies": "=>",
    "or": "\\/",
    "and": "/\\",
    "eq": "=",
    "neq": "/=",
    "lt": "<",
    "le": "<=",
    "gt": ">",
    "ge": ">=",
    "in": "\\in",
    "notin": "\\notin",
    "subseteq": "\\subseteq",
    "union": "\\union",
    "inter": "\\inter",
    "setminus": "\\setminus",
    "times": "\\times",
    "override": "(+)",
    "add": "+",
    "sub": "-",
    "mul": "*",
    "div": "/",
}


@dataclass(frozen=True)
class Decl:
    name: str
    type: Type
    pos: Pos = _pos()


@dataclass(frozen=True)
class SetDecl:
    """Atom set; ``atoms`` is None when the enumeration comes from bounds."""

    name: str
    atoms: Optional[tuple] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Obligation:
    pred: Expr
    mode: str  # "strict" | "weak"


@dataclass(frozen=True)
class EventDecl:
    name: str
    params: tuple
    ba: Expr
    fairness: Expr = BoolLit(False)
    permission: Optional[Expr] = None
    prohibition: Optional[Expr] = None
    right: Optional[Expr] = None
    obligation: Optional[Obligation] = None
    pos: Pos = _pos()

    @property
    def param_names(self) -> tuple:
        return tuple(p.name for p in self.params)


@dataclass(frozen=True)
class SystemSpec:
    name: str
    sets: tuple = ()
    constants: tuple = ()
    assumption: Expr = BoolLit(True)
    variables: tuple = ()
    invariant: Expr = BoolLit(True)
    initial: Expr = BoolLit(True)
    events: tuple = ()
    pos: Pos = _pos()

    def event(self, name: str) -> EventDecl:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def var_names(self) -> tuple:
        return tuple(v.name for v in self.variables)


@dataclass(frozen=True)
class RefinementSpec:
    name: str
    abstract: str
    concrete: str
    gluing: Expr = BoolLit(True)
    refines: tuple = ()  # ((concrete event, abstract event), ...)
    right_witnesses: tuple = ()  # ((abstract event, (concrete events...)), ...)
    pos: Pos = _pos()

    @property
    def refines_map(self) -> dict:
        return dict(self.refines)

    @property
    def witness_map(self) -> dict:
        return {a: list(cs) for a, cs in self.right_witnesses}


def conjuncts(e: Expr) -> list:
    """Top-level conjuncts in textual order."""
    if isinstance(e, Binary) and e.op == "and":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def conj(parts: list) -> Expr:
    if not parts:
        return BoolLit(True)
    out = parts[0]
    for p in parts[1:]:
        out = Binary("and", out, p)
    return out


def children(e: Expr) -> list:
    if isinstance(e, (Unary,)):
        return [e.operand]
    if isinstance(e, (Binary, Pair)):
        return [e.left, e.right]
    if isinstance(e, SetDisplay):
        return list(e.elems)
    if isinstance(e, Comprehension):
        out = [b.domain for b in e.binders] + [e.expr]
        if e.cond is not None:
            out.append(e.cond)
        return out
    if isinstance(e, Quant):
        return [b.domain for b in e.binders] + [e.body]
    if isinstance(e, Apply):
        return [e.fn, *e.args]
    if isinstance(e, FunSpace):
        return [e.dom, e.ran]
    if isinstance(e, Builtin):
        return [e.arg]
    return []


def walk(e: Expr):
    yield e
    for c in children(e):
        yield from walk(c)


def free_names(e: Expr, bound: frozenset = frozenset()) -> set:
    """Free ``(id, primed)`` pairs of ``e``."""
    if isinstance(e, Name):
        if not e.primed and e.id in bound:
            return set()
        return {(e.id, e.primed)}
    if isinstance(e, (Quant, Comprehension)):
        out: set = set()
        inner = set(bound)
        for b in e.binders:
            out |= free_names(b.domain, frozenset(inner))
            inner.add(b.name)
        inner_f = frozenset(inner)
        body = [e.body] if isinstance(e, Quant) else [e.expr] + ([e.cond] if e.cond is not None else [])
        for x in body:
            out |= free_names(x, inner_f)
        return out
    out = set()
    for c in children(e):
        out |= free_names(c, bound)
    return out
