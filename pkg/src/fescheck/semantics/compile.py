"""Compile expressions to Python closures over a flat frame.

A frame is a list holding, at fixed slots, the values of variables,
primed variables, event parameters and quantifier binders.  Compiling
once and evaluating many times is what keeps exhaustive checks fast.
"""

from __future__ import annotations

import itertools
import operator
from typing import Callable, Iterable

from ..lang import ast as A
from ..values import Rat, EvalFault, apply_map, format_value, is_function, override, sorted_values

Fn = Callable[[list], object]


class RatView:
    """The rationals: membership is exact, iteration uses the bounded domain."""

    def __init__(self, domain: tuple):
        self.domain = domain

    def __contains__(self, x) -> bool:
        return isinstance(x, Rat)

    def values(self) -> Iterable:
        return self.domain


class NatView(RatView):
    def __contains__(self, x) -> bool:
        return isinstance(x, Rat) and x.denominator == 1 and x >= 0


class FunSpaceView:
    """``[D -> R]``: total functions from the finite set D into R."""

    def __init__(self, dom, ran):
        self.dom = materialize(dom)
        self.ran = ran

    def __contains__(self, f) -> bool:
        if not isinstance(f, frozenset) or len(f) != len(self.dom) or not is_function(f):
            return False
        ran = self.ran
        return all(p[0] in self.dom and p[1] in ran for p in f)

    def values(self) -> Iterable:
        keys = sorted_values(self.dom)
        ran = domain_values(self.ran)
        for choice in itertools.product(ran, repeat=len(keys)):
            yield frozenset(zip(keys, choice))


class ProductView:
    def __init__(self, left, right):
        self.left = left
        self.right = right

    def __contains__(self, p) -> bool:
        return isinstance(p, tuple) and p[0] in self.left and p[1] in self.right

    def values(self) -> Iterable:
        return itertools.product(domain_values(self.left), domain_values(self.right))


VIEWS = (RatView, FunSpaceView, ProductView)


def domain_values(s) -> list:
    """Elements of a set value in canonical order; views use their bounds."""
    if isinstance(s, frozenset):
        return sorted_values(s)
    if isinstance(s, VIEWS):
        return list(s.values())
    raise EvalFault(f"not a set: {format_value(s) if not callable(s) else s!r}")


def _members(s) -> Iterable:
    # order is irrelevant to quantifiers, sums and set comprehensions
    if isinstance(s, frozenset):
        return s
    if isinstance(s, VIEWS):
        return s.values()
    raise EvalFault("not a set")


def materialize(s) -> frozenset:
    if isinstance(s, frozenset):
        return s
    if isinstance(s, VIEWS):
        return frozenset(s.values())
    raise EvalFault("not a set")


def powerset(s) -> Iterable:
    elems = domain_values(s)
    for r in range(len(elems) + 1):
        for c in itertools.combinations(elems, r):
            yield frozenset(c)


def _subset(a, b) -> bool:
    if isinstance(a, frozenset) and isinstance(b, frozenset):
        return a <= b
    return all(x in b for x in domain_values(a))


def _inter(a, b):
    if isinstance(a, frozenset) and isinstance(b, frozenset):
        return a & b
    if isinstance(a, frozenset):
        return frozenset(x for x in a if x in b)
    if isinstance(b, frozenset):
        return frozenset(x for x in b if x in a)
    return materialize(a) & materialize(b)


def _setminus(a, b):
    if isinstance(b, frozenset):
        return materialize(a) - b
    return frozenset(x for x in materialize(a) if x not in b)


def _div(a, b):
    if b == 0:
        raise EvalFault("division by zero")
    return a / b


def _apply(f, x):
    if type(f) is not frozenset:
        raise EvalFault("application of a non-function")
    return apply_map(f, x)


def _override(f, g):
    if type(f) is not frozenset or type(g) is not frozenset:
        f, g = materialize(f), materialize(g)
    return override(f, g)


def _times(a, b):
    if isinstance(a, frozenset) and isinstance(b, frozenset):
        return frozenset(itertools.product(a, b))
    return ProductView(a, b)


def _dom(f):
    return frozenset(p[0] for p in materialize(f))


def _ran(f):
    return frozenset(p[1] for p in materialize(f))


def _card(s):
    return Rat(len(materialize(s)))


_BIN = {
    "eq": operator.eq,
    "neq": operator.ne,
    "lt": operator.lt,
    "le": operator.le,
    "gt": operator.gt,
    "ge": operator.ge,
    "in": lambda a, b: a in b,
    "notin": lambda a, b: a not in b,
    "subseteq": _subset,
    "union": lambda a, b: materialize(a) | materialize(b),
    "inter": _inter,
    "setminus": _setminus,
    "times": _times,
    "override": _override,
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
    "div": _div,
}


class Scope:
    """Name resolution for one compilation unit.

    ``slots`` maps ``(name, primed)`` to frame positions; ``consts`` maps
    names to fixed values (constants, atoms, set names, RAT/NAT/BOOL).
    Binder slots are allocated past ``size`` as they are encountered.
    """

    def __init__(self, slots: dict, consts: dict, size: int):
        self.slots = dict(slots)
        self.consts = consts
        self.size = size

    def fresh(self) -> int:
        self.size += 1
        return self.size - 1


class Compiler:
    def __init__(self, scope: Scope):
        self.scope = scope

    def compile(self, e: A.Expr, bound: dict | None = None) -> Fn:
        return self._c(e, bound or {})

    def _c(self, e: A.Expr, bound: dict) -> Fn:
        if isinstance(e, A.BoolLit):
            v = e.value
            return lambda f: v
        if isinstance(e, A.NumLit):
            v = e.value
            return lambda f: v
        if isinstance(e, A.Name):
            return self._name(e, bound)
        if isinstance(e, A.Unary):
            x = self._c(e.operand, bound)
            if e.op == "not":
                return lambda f: not x(f)
            return lambda f: -x(f)
        if isinstance(e, A.Binary):
            return self._binary(e, bound)
        if isinstance(e, A.Pair):
            left, right = self._c(e.left, bound), self._c(e.right, bound)
            return lambda f: (left(f), right(f))
        if isinstance(e, A.SetDisplay):
            elems = [self._c(x, bound) for x in e.elems]
            if len(elems) == 1:
                x0 = elems[0]
                return lambda f: frozenset((x0(f),))
            return lambda f: frozenset([x(f) for x in elems])
        if isinstance(e, A.Comprehension):
            return self._comprehension(e, bound)
        if isinstance(e, A.Quant):
            return self._quant(e, bound)
        if isinstance(e, A.Apply):
            fn = self._c(e.fn, bound)
            args = [self._c(a, bound) for a in e.args]
            if len(args) == 1:
                a0 = args[0]
                return lambda f: _apply(fn(f), a0(f))

            def apply_many(f):
                key = args[0](f)
                for a in args[1:]:
                    key = (key, a(f))
                return _apply(fn(f), key)

            return apply_many
        if isinstance(e, A.FunSpace):
            d, r = self._c(e.dom, bound), self._c(e.ran, bound)
            return lambda f: FunSpaceView(d(f), r(f))
        if isinstance(e, A.Builtin):
            x = self._c(e.arg, bound)
            op = {"dom": _dom, "ran": _ran, "card": _card}[e.name]
            return lambda f: op(x(f))
        raise TypeError(f"cannot compile {e!r}")

    def _name(self, e: A.Name, bound: dict) -> Fn:
        if not e.primed and e.id in bound:
            slot = bound[e.id]
            return lambda f: f[slot]
        key = (e.id, e.primed)
        if key in self.scope.slots:
            slot = self.scope.slots[key]
            return lambda f: f[slot]
        if not e.primed and e.id in self.scope.consts:
            v = self.scope.consts[e.id]
            return lambda f: v
        name = e.id + ("'" if e.primed else "")
        raise EvalFault(f"unbound identifier {name}")

    def _binary(self, e: A.Binary, bound: dict) -> Fn:
        left, right = self._c(e.left, bound), self._c(e.right, bound)
        op = e.op
        if op == "and":
            return lambda f: bool(left(f)) and bool(right(f))
        if op == "or":
            return lambda f: bool(left(f)) or bool(right(f))
        if op == "implies":
            return lambda f: (not left(f)) or bool(right(f))
        if op == "equiv":
            return lambda f: bool(left(f)) == bool(right(f))
        if op == "eq":
            return lambda f: left(f) == right(f)
        if op == "in":
            return lambda f: left(f) in right(f)
        fn = _BIN[op]
        return lambda f: fn(left(f), right(f))

    def _iterate(self, binders, bound: dict):
        """Compile binders; returns (new bound map, generator over frames)."""
        inner = dict(bound)
        plan = []
        for b in binders:
            dom = self._c(b.domain, inner)
            slot = self.scope.fresh()
            inner[b.name] = slot
            plan.append((slot, dom))

        def run(f, k=0):
            if k == len(plan):
                yield
                return
            slot, dom = plan[k]
            for v in _members(dom(f)):
                f[slot] = v
                yield from run(f, k + 1)

        return inner, run

    def _quant(self, e: A.Quant, bound: dict) -> Fn:
        inner, run = self._iterate(e.binders, bound)
        body = self._c(e.body, inner)
        if e.kind == "forall":
            return lambda f: all(body(f) for _ in run(f))
        return lambda f: any(body(f) for _ in run(f))

    def _comprehension(self, e: A.Comprehension, bound: dict) -> Fn:
        inner, run = self._iterate(e.binders, bound)
        body = self._c(e.expr, inner)
        cond = self._c(e.cond, inner) if e.cond is not None else None
        if e.kind == "sum":
            # bag sum: one summand per binding, equal values are not merged
            if cond is None:
                return lambda f: sum((body(f) for _ in run(f)), Rat(0))
            return lambda f: sum((body(f) for _ in run(f) if cond(f)), Rat(0))
        if cond is None:
            return lambda f: frozenset([body(f) for _ in run(f)])
        return lambda f: frozenset([body(f) for _ in run(f) if cond(f)])


def guard_faults(fn: Fn) -> Fn:
    """Turn Python-level errors from ill-formed values into EvalFault."""

    def wrapped(f):
        try:
            return fn(f)
        except EvalFault:
            raise
        except (TypeError, AttributeError, IndexError) as exc:
            raise EvalFault(f"ill-typed evaluation: {exc}") from None

    return wrapped
