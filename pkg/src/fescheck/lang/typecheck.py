"""Type checking against declarations and bounds; carrier computation."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from . import ast as A
from . import types as T
from .bounds import Bounds
from .diagnostics import Diagnostic, SpecError, error_at
from ..values import Rat, Value, is_function, sorted_values

DEFAULT_EXPLOSION_LIMIT = 2_000_000


def explosion_limit_from_env() -> int:
    return int(os.environ.get("FESCHECK_EXPLOSION_LIMIT", DEFAULT_EXPLOSION_LIMIT))


@dataclass(eq=False)
class TypedSystem:
    """A parsed system whose names, types and finite carriers are resolved."""

    spec: A.SystemSpec
    bounds: Bounds
    atoms: dict  # set name -> tuple of atoms
    atom_owner: dict  # atom -> set name
    rat_domain: tuple
    nat_domain: tuple
    var_types: dict
    const_types: dict
    const_values: dict
    param_domains: dict  # event -> tuple of value tuples, one per parameter
    types: dict = field(repr=False)  # id(expr node) -> Type
    warnings: list = field(default_factory=list)
    explosion_limit: int = DEFAULT_EXPLOSION_LIMIT
    file: str = "<input>"

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def var_names(self) -> tuple:
        return self.spec.var_names

    def type_of(self, e: A.Expr) -> T.Type:
        return self.types[id(e)]

    def carrier(self, t: T.Type) -> tuple:
        return _carrier(self._key(), t)

    def carrier_size(self, t: T.Type) -> int:
        return _size(t, self.atoms, self.rat_domain, self.nat_domain)

    def carrier_sizes(self) -> dict:
        return {v.name: self.carrier_size(v.type) for v in self.spec.variables}

    def in_carrier(self, v: Value, t: T.Type) -> bool:
        return _in_carrier(self._key(), v, t)

    def state_in_carrier(self, state: tuple) -> bool:
        return all(self.in_carrier(v, d.type) for v, d in zip(state, self.spec.variables))

    def instance_count(self, event: str) -> int:
        n = 1
        for dom in self.param_domains[event]:
            n *= len(dom)
        return n

    def instances(self, event: str) -> list:
        return list(itertools.product(*self.param_domains[event]))

    def _key(self) -> "_CarrierKey":
        key = self.__dict__.get("_carrier_key")
        if key is None:
            key = _CarrierKey(self.atoms, self.rat_domain, self.nat_domain)
            self.__dict__["_carrier_key"] = key
        return key


class _CarrierKey:
    """Hashable handle on the domains that determine carriers."""

    def __init__(self, atoms: dict, rat: tuple, nat: tuple):
        self.atoms = {k: tuple(v) for k, v in atoms.items()}
        self.rat = rat
        self.nat = nat
        self.rat_set = frozenset(rat)
        self.nat_set = frozenset(nat)
        self.atom_sets = {k: frozenset(v) for k, v in atoms.items()}
        self._hash = hash((tuple(sorted(self.atoms.items())), rat, nat))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (isinstance(other, _CarrierKey) and self.atoms == other.atoms
                and self.rat == other.rat and self.nat == other.nat)


@lru_cache(maxsize=4096)
def _carrier(key: _CarrierKey, t: T.Type) -> tuple:
    if isinstance(t, T.BoolT):
        return (False, True)
    if isinstance(t, T.RatT):
        return key.rat
    if isinstance(t, T.NatT):
        return key.nat
    if isinstance(t, T.AtomT):
        return tuple(sorted(key.atoms[t.name]))
    if isinstance(t, T.PairT):
        return tuple(itertools.product(_carrier(key, t.left), _carrier(key, t.right)))
    if isinstance(t, T.SetT):
        elems = _carrier(key, t.elem)
        out = []
        for r in range(len(elems) + 1):
            out.extend(frozenset(c) for c in itertools.combinations(elems, r))
        return tuple(sorted_values(out))
    if isinstance(t, T.MapT):
        keys = _carrier(key, t.key)
        vals = _carrier(key, t.val)
        out = []
        for choice in itertools.product((None,) + tuple(vals), repeat=len(keys)):
            out.append(frozenset((k, v) for k, v in zip(keys, choice) if v is not None))
        return tuple(sorted_values(out))
    raise TypeError(f"no carrier for {t}")


def _in_carrier(key: _CarrierKey, v: Value, t: T.Type) -> bool:
    if isinstance(t, T.BoolT):
        return v is True or v is False
    if isinstance(t, T.RatT):
        return isinstance(v, Rat) and v in key.rat_set
    if isinstance(t, T.NatT):
        return isinstance(v, Rat) and v in key.nat_set
    if isinstance(t, T.AtomT):
        return isinstance(v, str) and v in key.atom_sets[t.name]
    if isinstance(t, T.PairT):
        return (isinstance(v, tuple) and _in_carrier(key, v[0], t.left)
                and _in_carrier(key, v[1], t.right))
    if isinstance(t, T.SetT):
        return isinstance(v, frozenset) and all(_in_carrier(key, x, t.elem) for x in v)
    if isinstance(t, T.MapT):
        return (is_function(v) and all(_in_carrier(key, p[0], t.key)
                                       and _in_carrier(key, p[1], t.val) for p in v))
    return False


def value_has_type(v: Value, t: T.Type, atoms: dict) -> bool:
    """Type membership without domain restriction on rationals."""
    if isinstance(t, T.BoolT):
        return v is True or v is False
    if isinstance(t, T.RatT):
        return isinstance(v, Rat)
    if isinstance(t, T.NatT):
        return isinstance(v, Rat) and v.denominator == 1 and v >= 0
    if isinstance(t, T.AtomT):
        return isinstance(v, str) and v in atoms.get(t.name, ())
    if isinstance(t, T.PairT):
        return (isinstance(v, tuple) and value_has_type(v[0], t.left, atoms)
                and value_has_type(v[1], t.right, atoms))
    if isinstance(t, T.SetT):
        return isinstance(v, frozenset) and all(value_has_type(x, t.elem, atoms) for x in v)
    if isinstance(t, T.MapT):
        return is_function(v) and all(value_has_type(p[0], t.key, atoms)
                                      and value_has_type(p[1], t.val, atoms) for p in v)
    return False


class _Checker:
    def __init__(self, var_types: dict, const_types: dict, atom_owner: dict, set_names: set):
        self.var_types = var_types
        self.const_types = const_types
        self.atom_owner = atom_owner
        self.set_names = set_names
        self.types: dict = {}
        self.diags: list[Diagnostic] = []
        self.uses_rat = False
        self.uses_nat = False

    def error(self, e, message: str):
        self.diags.append(error_at(e.pos, message))

    def pred(self, e: A.Expr, env: dict, action: bool, what: str):
        t = self.expr(e, env, action)
        if t is not None and not isinstance(t, (T.BoolT, T.AnyT)):
            self.error(e, f"{what} must be a predicate, found {t}")

    def expr(self, e: A.Expr, env: dict, action: bool) -> Optional[T.Type]:
        t = self._expr(e, env, action)
        if t is not None:
            self.types[id(e)] = t
        return t

    def _expect_set(self, e, t) -> Optional[T.Type]:
        if t is None:
            return None
        elem = T.as_set_elem(t)
        if elem is None:
            self.error(e, f"type mismatch: expected a set, found {t}")
        return elem

    def _expect_num(self, e, t):
        if t is not None and not T.is_numeric(t):
            self.error(e, f"type mismatch: expected a number, found {t}")

    def _expect_bool(self, e, t):
        if t is not None and not isinstance(t, (T.BoolT, T.AnyT)):
            self.error(e, f"type mismatch: expected a predicate, found {t}")

    def _unify(self, e, a, b, what: str):
        if a is None or b is None:
            return None
        u = T.unify(a, b)
        if u is None:
            self.error(e, f"type mismatch in {what}: {a} vs {b}")
        return u

    def _binders(self, binders, env: dict, action: bool) -> dict:
        inner = dict(env)
        for b in binders:
            dt = self.expr(b.domain, inner, action)
            elem = self._expect_set(b.domain, dt)
            inner[b.name] = elem if elem is not None else T.ANY
        return inner

    def _expr(self, e: A.Expr, env: dict, action: bool) -> Optional[T.Type]:
        if isinstance(e, A.BoolLit):
            return T.BOOL
        if isinstance(e, A.NumLit):
            return T.RAT
        if isinstance(e, A.Name):
            return self.name(e, env, action)
        if isinstance(e, A.Unary):
            t = self.expr(e.operand, env, action)
            if e.op == "not":
                self._expect_bool(e.operand, t)
                return T.BOOL
            self._expect_num(e.operand, t)
            return T.RAT
        if isinstance(e, A.Binary):
            return self.binary(e, env, action)
        if isinstance(e, A.Pair):
            left = self.expr(e.left, env, action)
            right = self.expr(e.right, env, action)
            if left is None or right is None:
                return None
            return T.PairT(left, right)
        if isinstance(e, A.SetDisplay):
            elem = T.ANY
            for x in e.elems:
                elem = self._unify(x, elem, self.expr(x, env, action), "set display")
                if elem is None:
                    return None
            return T.SetT(elem)
        if isinstance(e, A.Comprehension):
            inner = self._binders(e.binders, env, action)
            if e.cond is not None:
                self._expect_bool(e.cond, self.expr(e.cond, inner, action))
            t = self.expr(e.expr, inner, action)
            if e.kind == "sum":
                self._expect_num(e.expr, t)
                return T.RAT
            return None if t is None else T.SetT(t)
        if isinstance(e, A.Quant):
            inner = self._binders(e.binders, env, action)
            self._expect_bool(e.body, self.expr(e.body, inner, action))
            return T.BOOL
        if isinstance(e, A.Apply):
            ft = self.expr(e.fn, env, action)
            arg_types = [self.expr(a, env, action) for a in e.args]
            elem = self._expect_set(e.fn, ft)
            if elem is None or any(a is None for a in arg_types):
                return None
            if isinstance(elem, T.AnyT):
                return T.ANY
            if not isinstance(elem, T.PairT):
                self.error(e.fn, f"type mismatch: {ft} is not a function")
                return None
            key = arg_types[0]
            for a in arg_types[1:]:
                key = T.PairT(key, a)
            self._unify(e, elem.left, key, "function argument")
            return elem.right
        if isinstance(e, A.FunSpace):
            d = self._expect_set(e.dom, self.expr(e.dom, env, action))
            r = self._expect_set(e.ran, self.expr(e.ran, env, action))
            if d is None or r is None:
                return None
            return T.SetT(T.MapT(d, r))
        if isinstance(e, A.Builtin):
            t = self.expr(e.arg, env, action)
            elem = self._expect_set(e.arg, t)
            if e.name == "card":
                return T.RAT
            if elem is None:
                return None
            if isinstance(elem, T.AnyT):
                return T.SetT(T.ANY)
            if not isinstance(elem, T.PairT):
                self.error(e.arg, f"type mismatch: {t} is not a function")
                return None
            return T.SetT(elem.left if e.name == "dom" else elem.right)
        raise TypeError(f"unknown node {e!r}")

    def name(self, e: A.Name, env: dict, action: bool) -> Optional[T.Type]:
        if e.primed:
            if e.id not in self.var_types:
                self.error(e, f"primed name '{e.id}' is not a variable")
                return None
            if not action:
                self.error(e, f"primed variable in non-action context: {e.id}'")
            return self.var_types[e.id]
        if e.id in env:
            return env[e.id]
        if e.id in self.var_types:
            return self.var_types[e.id]
        if e.id in self.const_types:
            return self.const_types[e.id]
        if e.id in self.atom_owner:
            return T.AtomT(self.atom_owner[e.id])
        if e.id in self.set_names:
            return T.SetT(T.AtomT(e.id))
        if e.id == "RAT":
            self.uses_rat = True
            return T.SetT(T.RAT)
        if e.id == "NAT":
            self.uses_nat = True
            return T.SetT(T.NAT)
        if e.id == "BOOL":
            return T.SetT(T.BOOL)
        self.error(e, f"unknown identifier '{e.id}'")
        return None

    def binary(self, e: A.Binary, env: dict, action: bool) -> Optional[T.Type]:
        left = self.expr(e.left, env, action)
        right = self.expr(e.right, env, action)
        op = e.op
        if op in ("and", "or", "implies", "equiv"):
            self._expect_bool(e.left, left)
            self._expect_bool(e.right, right)
            return T.BOOL
        if op in ("eq", "neq"):
            self._unify(e, left, right, "comparison")
            return T.BOOL
        if op in ("lt", "le", "gt", "ge"):
            self._expect_num(e.left, left)
            self._expect_num(e.right, right)
            return T.BOOL
        if op in ("add", "sub", "mul", "div"):
            self._expect_num(e.left, left)
            self._expect_num(e.right, right)
            return T.RAT
        if op in ("in", "notin"):
            elem = self._expect_set(e.right, right)
            self._unify(e, left, elem, "membership")
            return T.BOOL
        if op == "subseteq":
            self._expect_set(e.left, left)
            self._expect_set(e.right, right)
            self._unify(e, left, right, "inclusion")
            return T.BOOL
        if op in ("union", "inter", "setminus", "override"):
            self._expect_set(e.left, left)
            self._expect_set(e.right, right)
            return self._unify(e, left, right, A.BINARY_OPS[op])
        if op == "times":
            a = self._expect_set(e.left, left)
            b = self._expect_set(e.right, right)
            if a is None or b is None:
                return None
            return T.SetT(T.PairT(a, b))
        raise TypeError(op)


def _resolve_atoms(spec: A.SystemSpec, bounds: Bounds, diags: list) -> dict:
    atoms: dict = {}
    for d in spec.sets:
        entry = bounds.get(d.name)
        if d.atoms is not None:
            atoms[d.name] = tuple(d.atoms)
            if entry is not None and entry.value != frozenset(d.atoms):
                diags.append(_at_entry(entry, f"bounds redefine the enumerated set '{d.name}'"))
        elif entry is None:
            diags.append(error_at(d.pos, f"unbounded carrier {d.name}"))
        elif not (isinstance(entry.value, frozenset) and all(isinstance(a, str) for a in entry.value)):
            diags.append(_at_entry(entry, f"bounds for '{d.name}' must be a set of atoms"))
        else:
            atoms[d.name] = tuple(sorted(entry.value))
    return atoms


def _rat_list(entry, diags: list) -> Optional[tuple]:
    if entry is None:
        return None
    v = entry.value
    if not (isinstance(v, frozenset) and all(isinstance(x, Rat) for x in v)):
        diags.append(_at_entry(entry, f"bounds for '{entry.key}' must be a set of numbers"))
        return None
    return tuple(sorted(v))


def typecheck(spec: A.SystemSpec, bounds: Bounds, file: str = "<input>",
              explosion_limit: Optional[int] = None) -> TypedSystem:
    """Resolve and type the system; raise SpecError listing all problems."""
    limit = explosion_limit_from_env() if explosion_limit is None else explosion_limit
    diags: list[Diagnostic] = []
    warnings: list[Diagnostic] = []
    set_names = {d.name for d in spec.sets}

    atoms = _resolve_atoms(spec, bounds, diags)
    atom_owner: dict = {}
    for s, items in atoms.items():
        for a in items:
            if a in atom_owner:
                diags.append(error_at(spec.pos, f"atom '{a}' belongs to both {atom_owner[a]} and {s}"))
            atom_owner[a] = s

    def check_type(t: T.Type, pos):
        for name in T.atom_sets(t):
            if name not in set_names:
                diags.append(error_at(pos, f"unknown set '{name}' in type {t}"))

    names_seen: dict = {}
    for kind, items in (("set", [(d.name, d.pos) for d in spec.sets]),
                        ("constant", [(d.name, d.pos) for d in spec.constants]),
                        ("variable", [(d.name, d.pos) for d in spec.variables])):
        for name, pos in items:
            if name in names_seen and names_seen[name] != kind:
                diags.append(error_at(pos, f"'{name}' declared both as {names_seen[name]} and {kind}"))
            names_seen[name] = kind
            if name in atom_owner:
                diags.append(error_at(pos, f"'{name}' is also an atom of {atom_owner[name]}"))

    for d in spec.constants + spec.variables:
        check_type(d.type, d.pos)
    for e in spec.events:
        for p in e.params:
            check_type(p.type, p.pos)
    if diags:
        raise SpecError(diags)

    var_types = {d.name: d.type for d in spec.variables}
    const_types = {d.name: d.type for d in spec.constants}

    const_values: dict = {}
    for d in spec.constants:
        entry = bounds.get(d.name)
        if entry is None:
            diags.append(error_at(d.pos, f"constant '{d.name}' has no value in the bounds"))
        elif not value_has_type(entry.value, d.type, atoms):
            diags.append(_at_entry(entry, f"value of constant '{d.name}' is not of type {d.type}"))
        else:
            const_values[d.name] = entry.value

    ck = _Checker(var_types, const_types, atom_owner, set_names)
    ck.pred(spec.assumption, {}, False, "assumption")
    ck.pred(spec.invariant, {}, False, "invariant")
    ck.pred(spec.initial, {}, False, "initial condition")
    for e in spec.events:
        env = {p.name: p.type for p in e.params}
        ck.pred(e.ba, env, True, f"body of event '{e.name}'")
        for clause in ("fairness", "permission", "prohibition", "right"):
            pred = getattr(e, clause)
            if pred is not None:
                ck.pred(pred, env, False, f"{clause} of '{e.name}'")
        if e.obligation is not None:
            ck.pred(e.obligation.pred, env, False, f"obligation of '{e.name}'")
    diags += ck.diags

    all_types = [d.type for d in spec.constants + spec.variables]
    all_types += [p.type for e in spec.events for p in e.params]
    needs_rat = ck.uses_rat or any(T.uses_rat(t) for t in all_types)
    rat = _rat_list(bounds.get("RAT"), diags)
    nat = _rat_list(bounds.get("NAT"), diags)
    if nat is not None and any(x.denominator != 1 or x < 0 for x in nat):
        diags.append(error_at(bounds.get("NAT").pos, "NAT domain must hold nonnegative integers"))
    if rat is None:
        rat = ()
        if needs_rat:
            diags.append(error_at(spec.pos, "unbounded carrier RAT"))
    if nat is None:
        nat = tuple(x for x in rat if x.denominator == 1 and x >= 0)

    event_names = {e.name for e in spec.events}
    param_domains: dict = {}
    if not diags:
        key = _CarrierKey(atoms, rat, nat)
        for d in spec.variables:
            size = _size(d.type, atoms, rat, nat)
            if size > limit:
                diags.append(error_at(d.pos, f"carrier of '{d.name}' has {size} values, "
                                      f"above the explosion limit {limit}"))
        for e in spec.events:
            doms = []
            count = 1
            for p in e.params:
                entry = bounds.get(f"{e.name}.{p.name}")
                if entry is not None:
                    if not isinstance(entry.value, frozenset):
                        diags.append(_at_entry(entry, f"bounds for '{entry.key}' must be a set"))
                        continue
                    bad = [v for v in entry.value if not value_has_type(v, p.type, atoms)]
                    if bad:
                        diags.append(_at_entry(entry, f"bounds for '{entry.key}' are not of type {p.type}"))
                        continue
                    doms.append(tuple(sorted_values(entry.value)))
                else:
                    size = _size(p.type, atoms, rat, nat)
                    if size > limit:
                        diags.append(error_at(p.pos, f"carrier of parameter '{e.name}.{p.name}' "
                                              f"has {size} values, above the explosion limit {limit}"))
                        continue
                    doms.append(_carrier(key, p.type))
                count *= len(doms[-1])
            if count > limit:
                diags.append(error_at(e.pos, f"event '{e.name}' has {count} instances, "
                                      f"above the explosion limit {limit}"))
            param_domains[e.name] = tuple(doms)
    if diags:
        raise SpecError(diags)

    known = set(set_names) | set(const_types) | {"RAT", "NAT"}
    for entry in bounds.entries:
        if entry.key in known:
            continue
        if "." in entry.key:
            ev, par = entry.key.split(".", 1)
            if ev in event_names and par in spec.event(ev).param_names:
                continue
        warnings.append(_at_entry(entry, f"unused bounds entry '{entry.key}'", "warning"))

    return TypedSystem(
        spec=spec, bounds=bounds, atoms=atoms, atom_owner=atom_owner,
        rat_domain=rat, nat_domain=nat, var_types=var_types, const_types=const_types,
        const_values=const_values, param_domains=param_domains, types=ck.types,
        warnings=[_with_file(w, file) for w in warnings], explosion_limit=limit, file=file,
    )


def _with_file(d: Diagnostic, file: str) -> Diagnostic:
    if d.file != "<input>":
        return d
    return Diagnostic(d.line, d.col, d.message, d.severity, file)


def _at_entry(entry, message: str, severity: str = "error") -> Diagnostic:
    """Diagnostic located in the bounds file that defined ``entry``."""
    line, col = entry.pos if entry.pos else (0, 0)
    return Diagnostic(line, col, message, severity, entry.file)


def _size(t: T.Type, atoms: dict, rat: tuple, nat: tuple) -> int:
    if isinstance(t, T.BoolT):
        return 2
    if isinstance(t, T.RatT):
        return len(rat)
    if isinstance(t, T.NatT):
        return len(nat)
    if isinstance(t, T.AtomT):
        return len(atoms[t.name])
    if isinstance(t, T.SetT):
        n = _size(t.elem, atoms, rat, nat)
        return 2 ** n if n < 4096 else 2 ** 4096
    if isinstance(t, T.MapT):
        k = _size(t.key, atoms, rat, nat)
        v = _size(t.val, atoms, rat, nat)
        return (v + 1) ** k if k < 4096 else 2 ** 4096
    if isinstance(t, T.PairT):
        return _size(t.left, atoms, rat, nat) * _size(t.right, atoms, rat, nat)
    raise TypeError(t)


def check_joint_predicate(pred: A.Expr, systems: list, what: str, pos=None) -> None:
    """Type a predicate over the variables of several systems at once.

    The systems must agree on shared set enumerations and constant values;
    their variables are assumed to be disjoint.
    """
    diags: list[Diagnostic] = []
    var_types: dict = {}
    const_types: dict = {}
    atom_owner: dict = {}
    set_names: set = set()
    atoms: dict = {}
    consts: dict = {}
    for ts in systems:
        for name, items in ts.atoms.items():
            if name in atoms and tuple(sorted(atoms[name])) != tuple(sorted(items)):
                diags.append(error_at(pos, f"systems disagree on the elements of set '{name}'"))
            atoms[name] = items
        for name, v in ts.const_values.items():
            if name in consts and consts[name] != v:
                diags.append(error_at(pos, f"systems disagree on the value of constant '{name}'"))
            consts[name] = v
        for name, t in ts.const_types.items():
            if name in const_types and const_types[name] != t:
                diags.append(error_at(pos, f"systems disagree on the type of constant '{name}'"))
            const_types[name] = t
        var_types.update(ts.var_types)
        atom_owner.update(ts.atom_owner)
        set_names |= set(ts.atoms)
    if tuple(systems[0].rat_domain) != tuple(systems[-1].rat_domain):
        diags.append(error_at(pos, "systems are bounded with different RAT domains"))
    ck = _Checker(var_types, const_types, atom_owner, set_names)
    ck.pred(pred, {}, False, what)
    diags += ck.diags
    if diags:
        raise SpecError(diags)
