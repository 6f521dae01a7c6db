"""Type expressions of the specification language."""

from __future__ import annotations

from dataclasses import dataclass


class Type:
    __slots__ = ()


@dataclass(frozen=True)
class BoolT(Type):
    def __str__(self) -> str:
        return "BOOL"


@dataclass(frozen=True)
class RatT(Type):
    def __str__(self) -> str:
        return "RAT"


@dataclass(frozen=True)
class NatT(Type):
    """Nonnegative integers; same values as RAT, smaller carrier."""

    def __str__(self) -> str:
        return "NAT"


@dataclass(frozen=True)
class AtomT(Type):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class SetT(Type):
    elem: Type

    def __str__(self) -> str:
        return f"SET of {_wrap(self.elem)}"


@dataclass(frozen=True)
class MapT(Type):
    key: Type
    val: Type

    def __str__(self) -> str:
        return f"MAP {_wrap(self.key)} to {_wrap(self.val)}"


@dataclass(frozen=True)
class PairT(Type):
    left: Type
    right: Type

    def __str__(self) -> str:
        return f"({_wrap(self.left)} * {_wrap(self.right)})"


@dataclass(frozen=True)
class AnyT(Type):
    """Element type of the empty set literal; unifies with everything."""

    def __str__(self) -> str:
        return "?"


BOOL = BoolT()
RAT = RatT()
NAT = NatT()
ANY = AnyT()


def _wrap(t: Type) -> str:
    if isinstance(t, (SetT, MapT)):
        return f"({t})"
    return str(t)


def is_numeric(t: Type) -> bool:
    return isinstance(t, (RatT, NatT, AnyT))


def as_set_elem(t: Type) -> Type | None:
    """Element type when ``t`` is a set-like type, else None."""
    if isinstance(t, SetT):
        return t.elem
    if isinstance(t, MapT):
        return PairT(t.key, t.val)
    if isinstance(t, AnyT):
        return ANY
    return None


def unify(a: Type, b: Type) -> Type | None:
    """Least common type of ``a`` and ``b`` or None when incompatible.

    Maps and sets of pairs share one value representation, so
    ``MAP A to B`` and ``SET of (A * B)`` unify (to the map type).
    """
    if isinstance(a, AnyT):
        return b
    if isinstance(b, AnyT):
        return a
    if a == b:
        return a
    if is_numeric(a) and is_numeric(b):
        return RAT
    if isinstance(a, SetT) and isinstance(b, SetT):
        e = unify(a.elem, b.elem)
        return None if e is None else SetT(e)
    if isinstance(a, PairT) and isinstance(b, PairT):
        left = unify(a.left, b.left)
        right = unify(a.right, b.right)
        if left is None or right is None:
            return None
        return PairT(left, right)
    if isinstance(a, MapT) or isinstance(b, MapT):
        ea, eb = as_set_elem(a), as_set_elem(b)
        if ea is None or eb is None:
            return None
        e = unify(ea, eb)
        if not isinstance(e, PairT):
            return None
        return MapT(e.left, e.right)
    return None


def contains_any(t: Type) -> bool:
    if isinstance(t, AnyT):
        return True
    if isinstance(t, SetT):
        return contains_any(t.elem)
    if isinstance(t, MapT):
        return contains_any(t.key) or contains_any(t.val)
    if isinstance(t, PairT):
        return contains_any(t.left) or contains_any(t.right)
    return False


def atom_sets(t: Type) -> set[str]:
    if isinstance(t, AtomT):
        return {t.name}
    if isinstance(t, SetT):
        return atom_sets(t.elem)
    if isinstance(t, MapT):
        return atom_sets(t.key) | atom_sets(t.val)
    if isinstance(t, PairT):
        return atom_sets(t.left) | atom_sets(t.right)
    return set()


def uses_rat(t: Type) -> bool:
    if isinstance(t, (RatT, NatT)):
        return True
    if isinstance(t, SetT):
        return uses_rat(t.elem)
    if isinstance(t, MapT):
        return uses_rat(t.key) or uses_rat(t.val)
    if isinstance(t, PairT):
        return uses_rat(t.left) or uses_rat(t.right)
    return False
