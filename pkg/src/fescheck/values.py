"""Closed value universe shared by the evaluator, explorer and reports.

Values are plain hashable Python objects so that states can be used as
dictionary keys without wrapping:

============  ==========================================
Bool          ``bool``
Rat           ``gmpy2.mpq`` (exact, always reduced)
Atom          ``str``
Pair          2-tuple ``(a, b)``
FinSet        ``frozenset`` of values
FinMap        ``frozenset`` of pairs with pairwise distinct keys
============  ==========================================

Functions are sets of pairs, so a map is just a set whose elements are
pairs and whose keys happen to be unique.  Structural equality is Python
equality; :func:`sort_key` supplies the total order used whenever output
has to be deterministic.
"""

from __future__ import annotations

from gmpy2 import mpq as Rat
from typing import Any, Iterable, Union

Value = Union[bool, Rat, str, tuple, frozenset]

EMPTY: frozenset = frozenset()


class EvalFault(Exception):
    """An expression has no value (partial application, division by zero...)."""


def rat(x: Any) -> Rat:
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    return Rat(x)


def sort_key(v: Value) -> tuple:
    t = type(v)
    # bool is tested by exact type: True == 1 must not merge with Rat(1)
    if t is bool:
        return (0, v)
    if t is Rat:
        return (1, v)
    if t is str:
        return (2, v)
    if t is tuple:
        return (3, sort_key(v[0]), sort_key(v[1]))
    if t is frozenset:
        return (4, len(v), tuple(sorted([sort_key(x) for x in v])))
    raise TypeError(f"not a value: {v!r}")


def sorted_values(values: Iterable[Value]) -> list:
    return sorted(values, key=sort_key)


def state_key(state: tuple) -> tuple:
    return tuple(sort_key(v) for v in state)


def is_function(v: Value) -> bool:
    if not isinstance(v, frozenset):
        return False
    keys = set()
    for p in v:
        if not isinstance(p, tuple):
            return False
        if p[0] in keys:
            return False
        keys.add(p[0])
    return True


def apply_map(f: frozenset, x: Value) -> Value:
    found = [p[1] for p in f if p[0] == x]
    if len(found) == 1:
        return found[0]
    if not found:
        raise EvalFault(f"application outside domain: {format_value(x)} not in dom")
    raise EvalFault(f"application of a non-functional relation at {format_value(x)}")


def override(f: frozenset, g: frozenset) -> frozenset:
    gkeys = {p[0] for p in g}
    return frozenset(p for p in f if p[0] not in gkeys) | g


def format_value(v: Value) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, Rat):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, str):
        return v
    if isinstance(v, tuple):
        return f"({_format_elem(v)})"
    if isinstance(v, frozenset):
        return "{" + ", ".join(_format_elem(x) for x in sorted_values(v)) + "}"
    raise TypeError(f"not a value: {v!r}")


def _format_elem(v: Value) -> str:
    if isinstance(v, tuple):
        return f"{format_value(v[0])} |-> {format_value(v[1])}"
    return format_value(v)
