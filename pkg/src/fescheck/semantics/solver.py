"""Finding all bindings of some unknowns that satisfy a conjunction.

Conjuncts are processed strictly in textual order.  A conjunct of the
shape ``v = e``, ``e = v``, ``v \\in S`` or ``v \\subseteq S`` whose only
unknown is ``v`` generates the candidate values of ``v`` directly; any
other conjunct first enumerates its unknowns over their finite domains
and then acts as a filter.  Unknowns never mentioned are enumerated at
the end.  Because evaluation order matches left-to-right evaluation of
the conjunction, a fault is raised exactly when direct evaluation of
the whole predicate on the offending binding would raise it.

Candidate values are always tried in canonical order, so the order in
which solutions are emitted depends only on the input, never on hashing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from ..lang import ast as A
from ..values import EvalFault
from .compile import Compiler, domain_values, powerset

FILTER, EQ, IN, SUB, ENUM = range(5)


class ExplosionError(EvalFault):
    """Enumeration exceeded the configured explosion limit."""


class _Found(Exception):
    pass


@dataclass
class Target:
    key: tuple  # (name, primed)
    slot: int
    domain: Callable[[], Iterable]  # values tried when nothing generates them
    check: Optional[Callable[[object], bool]] = None  # filter on generated values


def _generator(c: A.Expr, unbound: set):
    """(kind, key, other side) when ``c`` can generate an unknown."""
    if not isinstance(c, A.Binary):
        return None
    sides = []
    if c.op == "eq":
        sides = [(c.left, c.right), (c.right, c.left)]
        kind = EQ
    elif c.op == "in":
        sides = [(c.left, c.right)]
        kind = IN
    elif c.op == "subseteq":
        sides = [(c.left, c.right)]
        kind = SUB
    for lhs, rhs in sides:
        if isinstance(lhs, A.Name):
            key = (lhs.id, lhs.primed)
            if key in unbound and key not in A.free_names(rhs):
                return kind, key, rhs
    return None


class Solver:
    def __init__(self, compiler: Compiler, pred: A.Expr, targets: list[Target], limit: int):
        self.limit = limit
        self.targets = targets
        by_key = {t.key: t for t in targets}
        order = {t.key: i for i, t in enumerate(targets)}
        unbound = set(by_key)
        steps: list[tuple] = []

        def enum(keys):
            for key in sorted(keys, key=order.__getitem__):
                t = by_key[key]
                steps.append((ENUM, t.slot, t.domain, None))
                unbound.discard(key)

        for c in A.conjuncts(pred):
            fv = A.free_names(c) & unbound
            gen = _generator(c, unbound) if fv else None
            if gen is not None:
                kind, key, rhs = gen
                enum(fv - {key})
                t = by_key[key]
                steps.append((kind, t.slot, compiler.compile(rhs), t.check))
                unbound.discard(key)
            else:
                enum(fv)
                steps.append((FILTER, compiler.compile(c)))
        enum(set(unbound))
        self.steps = steps

    def run(self, frame: list, emit: Callable[[list], None]) -> None:
        steps = self.steps
        n = len(steps)
        limit = self.limit
        budget = [0]

        def go(k: int) -> None:
            while k < n:
                st = steps[k]
                kind = st[0]
                if kind == FILTER:
                    if not st[1](frame):
                        return
                    k += 1
                    continue
                if kind == EQ:
                    v = st[2](frame)
                    if st[3] is not None and not st[3](v):
                        return
                    frame[st[1]] = v
                    k += 1
                    continue
                if kind == IN:
                    values = domain_values(st[2](frame))
                elif kind == SUB:
                    values = powerset(st[2](frame))
                else:
                    values = st[2]()
                slot, check = st[1], st[3]
                for v in values:
                    budget[0] += 1
                    if budget[0] > limit:
                        raise ExplosionError(f"explosion limit {limit} exceeded while enumerating")
                    if check is not None and not check(v):
                        continue
                    frame[slot] = v
                    go(k + 1)
                return
            emit(frame)

        try:
            go(0)
        except (TypeError, AttributeError, IndexError) as exc:
            raise EvalFault(f"ill-typed evaluation: {exc}") from None

    def exists(self, frame: list) -> bool:
        def stop(_):
            raise _Found

        try:
            self.run(frame, stop)
        except _Found:
            return True
        return False
