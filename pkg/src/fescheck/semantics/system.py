"""Executable view of a typed system: states, instances, successors."""

from __future__ import annotations

from typing import NamedTuple, Optional

from ..lang import ast as A
from ..lang.typecheck import TypedSystem
from ..values import format_value, sort_key
from .compile import Compiler, NatView, RatView, Scope, guard_faults
from .solver import Solver, Target

CARRIER_SET_LIMIT = 50_000

CLAUSE_DEFAULTS = {"permission": True, "prohibition": False, "right": False, "fairness": False}


class EventInstance(NamedTuple):
    event: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.event}({', '.join(format_value(a) for a in self.args)})"


def instance_key(inst: EventInstance) -> tuple:
    return (inst.event, tuple(sort_key(a) for a in inst.args))


def constant_env(ts: TypedSystem) -> dict:
    env: dict = {}
    for name, items in ts.atoms.items():
        env[name] = frozenset(items)
        for a in items:
            env[a] = a
    env["RAT"] = RatView(ts.rat_domain)
    env["NAT"] = NatView(ts.nat_domain)
    env["BOOL"] = frozenset({False, True})
    env.update(ts.const_values)
    return env


MEMO_LIMIT = 500_000


def _split_frame(ba: A.Expr, var_slots: dict) -> tuple:
    """(rest of ba, slots of variables fixed by a frame condition)."""
    parts = A.conjuncts(ba)
    uses: dict = {}
    for c in parts:
        for key in A.free_names(c):
            if key[1]:
                uses[key[0]] = uses.get(key[0], 0) + 1
    copied = []
    rest = []
    for c in parts:
        if (isinstance(c, A.Binary) and c.op == "eq" and isinstance(c.left, A.Name)
                and isinstance(c.right, A.Name) and c.left.primed and not c.right.primed
                and c.left.id == c.right.id and (c.left.id, False) in var_slots
                and uses[c.left.id] == 1):
            copied.append(var_slots[(c.left.id, False)])
        else:
            rest.append(c)
    return A.conj(rest), frozenset(copied)


def _reads(pred: A.Expr, var_slots: dict) -> tuple:
    return tuple(sorted(var_slots[k] for k in A.free_names(pred) if k in var_slots))


def _memo_put(memo: dict, key, value) -> None:
    if len(memo) >= MEMO_LIMIT:
        memo.clear()
    memo[key] = value


class CompiledEvent:
    def __init__(self, system: "System", decl: A.EventDecl):
        ts = system.typed
        self.name = decl.name
        self.decl = decl
        self.var_slots = system.var_slots
        self.clause_memo: dict = {}
        self._clause_reads: dict = {}
        self.domains = ts.param_domains[decl.name]
        n = len(system.var_names)
        self.param_base = 2 * n
        slots = dict(system.var_slots)
        slots.update({(v, True): n + i for i, v in enumerate(system.var_names)})
        slots.update({(p, False): 2 * n + i for i, p in enumerate(decl.param_names)})
        self.scope = Scope(slots, system.consts, 2 * n + len(decl.params))
        self.compiler = Compiler(self.scope)
        limit = ts.explosion_limit
        param_targets = [
            Target((p, False), 2 * n + i, (lambda d=dom: d), frozenset(dom).__contains__)
            for i, (p, dom) in enumerate(zip(decl.param_names, self.domains))
        ]
        primed_targets = [
            Target((v, True), n + i, (lambda t=d.type: ts.carrier(t)))
            for i, (v, d) in enumerate(zip(system.var_names, system.spec.variables))
        ]
        self.param_targets = param_targets
        self.primed_targets = primed_targets
        self.steps_solver = Solver(self.compiler, decl.ba, param_targets + primed_targets, limit)
        self.succ_solver = Solver(self.compiler, decl.ba, primed_targets, limit)
        # Frame conditions ``v' = v`` are split off so that the remaining
        # predicate only reads some variables; its solutions are memoized
        # on the values of those variables.
        rest, copied = _split_frame(decl.ba, system.var_slots)
        self.copied = copied
        self.moved = tuple(i for i in range(n) if i not in copied)
        self.reads = _reads(rest, system.var_slots)
        moved_targets = [primed_targets[i] for i in self.moved]
        self.rest_solver = Solver(self.compiler, rest, param_targets + moved_targets, limit)
        self.steps_memo: dict = {}
        self.clauses: dict = {}
        self.clause_solvers: dict = {}
        for clause in ("fairness", "permission", "prohibition", "right"):
            pred = getattr(decl, clause)
            if pred is not None:
                self.clauses[clause] = guard_faults(self.compiler.compile(pred))
        if decl.obligation is not None:
            self.clauses["obligation"] = guard_faults(self.compiler.compile(decl.obligation.pred))
        self.limit = limit

    def clause_reads(self, clause: str) -> tuple:
        r = self._clause_reads.get(clause)
        if r is None:
            r = self._clause_reads[clause] = _reads(self.clause_pred(clause), self.var_slots)
        return r

    def clause_pred(self, clause: str) -> Optional[A.Expr]:
        if clause == "obligation":
            return self.decl.obligation.pred if self.decl.obligation else None
        return getattr(self.decl, clause)

    def clause_solver(self, clause: str) -> Solver:
        s = self.clause_solvers.get(clause)
        if s is None:
            s = Solver(self.compiler, self.clause_pred(clause), self.param_targets, self.limit)
            self.clause_solvers[clause] = s
        return s


class System:
    """Compiled system; every evaluation entry point takes canonical states.

    A state is a tuple of values in declaration order of the variables.
    """

    def __init__(self, typed: TypedSystem):
        self.typed = typed
        self.spec = typed.spec
        self.name = typed.spec.name
        self.var_names = typed.spec.var_names
        self.var_types = tuple(d.type for d in typed.spec.variables)
        self.var_slots = {(v, False): i for i, v in enumerate(self.var_names)}
        self.consts = constant_env(typed)
        n = len(self.var_names)
        self.state_scope = Scope(self.var_slots, self.consts, n)
        self.state_compiler = Compiler(self.state_scope)
        limit = typed.explosion_limit
        self._inv = guard_faults(self.state_compiler.compile(self.spec.invariant))
        self._inv_parts = []
        for c in A.conjuncts(self.spec.invariant):
            reads = tuple(sorted(self.var_slots[k] for k in A.free_names(c) if k in self.var_slots))
            self._inv_parts.append((reads, guard_faults(self.state_compiler.compile(c)), {}))
        self._members = [self._member_test(t) for t in self.var_types]
        self._init = guard_faults(self.state_compiler.compile(self.spec.initial))
        plain = [Target((v, False), i, (lambda t=t: typed.carrier(t)))
                 for i, (v, t) in enumerate(zip(self.var_names, self.var_types))]
        checked = [Target((v, False), i, (lambda t=t: typed.carrier(t)),
                          (lambda x, t=t: typed.in_carrier(x, t)))
                   for i, (v, t) in enumerate(zip(self.var_names, self.var_types))]
        self._init_solver = Solver(self.state_compiler, self.spec.initial, plain, limit)
        self._inv_solver = Solver(self.state_compiler, self.spec.invariant, checked, limit)
        self.events = {e.name: CompiledEvent(self, e) for e in self.spec.events}
        self.event_names = tuple(e.name for e in self.spec.events)
        self._pred_cache: dict = {}

    # frames --------------------------------------------------------------

    def _state_frame(self, state: tuple) -> list:
        f = list(state)
        f.extend([None] * (self.state_scope.size - len(f)))
        return f

    def _event_frame(self, ev: CompiledEvent, state: tuple, args: tuple = ()) -> list:
        n = len(state)
        f = list(state)
        f.extend([None] * n)
        f.extend(args)
        f.extend([None] * (ev.scope.size - len(f)))
        return f

    # states ----------------------------------------------------------------

    def state_dict(self, state: tuple) -> dict:
        return dict(zip(self.var_names, state))

    def state_from_dict(self, d: dict) -> tuple:
        return tuple(d[v] for v in self.var_names)

    def format_state(self, state: tuple) -> str:
        return ", ".join(f"{v}={format_value(x)}" for v, x in zip(self.var_names, state))

    def _member_test(self, t):
        # hashing into the materialized carrier is much faster than a
        # structural walk; values are well typed, so bool never meets Rat
        if self.typed.carrier_size(t) <= CARRIER_SET_LIMIT:
            return frozenset(self.typed.carrier(t)).__contains__
        return lambda v: self.typed.in_carrier(v, t)

    def in_carrier(self, state: tuple) -> bool:
        return all(m(v) for m, v in zip(self._members, state))

    def assumption_holds(self) -> bool:
        fn = guard_faults(self.state_compiler.compile(self.spec.assumption))
        return bool(fn(self._state_frame((None,) * len(self.var_names))))

    def inv(self, state: tuple) -> bool:
        return bool(self._inv(self._state_frame(state)))

    def inv_after(self, state: tuple, next: tuple) -> bool:
        """Inv(next), given Inv(state): only conjuncts reading changed variables
        are evaluated.  The skipped conjuncts see the same values as in
        ``state``, where they hold, so neither truth nor faults change."""
        changed = [a is not b and a != b for a, b in zip(state, next)]
        frame = None
        for reads, fn, memo in self._inv_parts:
            if any(changed[i] for i in reads):
                key = tuple([next[i] for i in reads])
                ok = memo.get(key)
                if ok is None:
                    if frame is None:
                        frame = self._state_frame(next)
                    ok = bool(fn(frame))
                    _memo_put(memo, key, ok)
                if not ok:
                    return False
        return True

    def init(self, state: tuple) -> bool:
        return bool(self._init(self._state_frame(state)))

    def _collect(self, solver: Solver) -> list:
        n = len(self.var_names)
        out: dict = {}
        frame = [None] * self.state_scope.size
        solver.run(frame, lambda f: out.setdefault(tuple(f[:n])))
        return list(out)

    def initial_states(self) -> list:
        return self._collect(self._init_solver)

    def invariant_states(self) -> list:
        """All carrier valuations satisfying the invariant, in solver order.

        The order is deterministic: the solver tries values canonically.
        """
        return self._collect(self._inv_solver)

    # instances -------------------------------------------------------------

    def instances(self, event: str) -> list:
        return [EventInstance(event, args) for args in self.typed.instances(event)]

    def all_instances(self) -> list:
        out = []
        for e in self.event_names:
            out.extend(self.instances(e))
        return out

    # transitions -------------------------------------------------------------

    def successors(self, state: tuple, inst: EventInstance) -> list:
        ev = self.events[inst.event]
        n = len(state)
        out: dict = {}
        frame = self._event_frame(ev, state, inst.args)
        ev.succ_solver.run(frame, lambda f: out.setdefault(tuple(f[n:2 * n])))
        return list(out)

    def fis(self, state: tuple, inst: EventInstance) -> bool:
        ev = self.events[inst.event]
        return ev.succ_solver.exists(self._event_frame(ev, state, inst.args))

    def event_steps(self, state: tuple, event: str) -> dict:
        """Feasible instances of ``event`` at ``state`` with their successors.

        Keys are argument tuples, values successor lists, both in solver
        emission order, which depends only on the input.
        """
        ev = self.events[event]
        key = tuple([state[i] for i in ev.reads])
        partial = ev.steps_memo.get(key)
        if partial is None:
            n = len(state)
            k = len(ev.decl.params)
            base = ev.param_base
            moved = [n + i for i in ev.moved]
            found: dict = {}

            def emit(f):
                found.setdefault(tuple(f[base:base + k]), {}).setdefault(
                    tuple([f[j] for j in moved]))

            ev.rest_solver.run(self._event_frame(ev, state), emit)
            partial = {a: list(nexts) for a, nexts in found.items()}
            _memo_put(ev.steps_memo, key, partial)
        if not ev.copied:
            return {a: list(nexts) for a, nexts in partial.items()}
        out = {}
        moved = ev.moved
        for a, nexts in partial.items():
            full = []
            for vals in nexts:
                t = list(state)
                for i, v in zip(moved, vals):
                    t[i] = v
                full.append(tuple(t))
            out[a] = full
        return out

    def steps(self, state: tuple) -> list:
        """All ``(instance, next state)`` pairs in deterministic order."""
        out = []
        for e in self.event_names:
            for args, nexts in self.event_steps(state, e).items():
                inst = EventInstance(e, args)
                out.extend((inst, t) for t in nexts)
        return out

    # clauses ---------------------------------------------------------------

    def has_clause(self, event: str, clause: str) -> bool:
        return clause in self.events[event].clauses

    def clause(self, clause: str, state: tuple, inst: EventInstance) -> Optional[bool]:
        """Truth of an event clause; defaults apply to absent clauses.

        Returns None for an absent obligation.
        """
        ev = self.events[inst.event]
        fn = ev.clauses.get(clause)
        if fn is None:
            return None if clause == "obligation" else CLAUSE_DEFAULTS[clause]
        return bool(fn(self._event_frame(ev, state, inst.args)))

    def clause_args(self, event: str, clause: str, state: tuple) -> list:
        """Argument tuples (solver order) for which a declared clause holds."""
        ev = self.events[event]
        if clause not in ev.clauses:
            raise KeyError(f"event {event} has no {clause} clause")
        memo_key = (clause, tuple([state[i] for i in ev.clause_reads(clause)]))
        hit = ev.clause_memo.get(memo_key)
        if hit is None:
            k = len(ev.decl.params)
            base = ev.param_base
            out: dict = {}
            ev.clause_solver(clause).run(self._event_frame(ev, state),
                                         lambda f: out.setdefault(tuple(f[base:base + k])))
            hit = list(out)
            _memo_put(ev.clause_memo, memo_key, hit)
        return list(hit)

    def fair_instances(self) -> list:
        """Instances whose fairness clause is not the literal false."""
        out = []
        for e in self.spec.events:
            if e.fairness != A.BoolLit(False):
                out.extend(self.instances(e.name))
        return out

    # generic evaluation --------------------------------------------------------

    def eval_pred(self, pred: A.Expr, state: tuple, next: Optional[tuple] = None,
                  inst: Optional[EventInstance] = None) -> bool:
        return bool(self.eval_expr(pred, state, next, inst))

    def eval_expr(self, expr: A.Expr, state: tuple, next: Optional[tuple] = None,
                  inst: Optional[EventInstance] = None):
        key = (id(expr), inst.event if inst else None)
        hit = self._pred_cache.get(key)
        if hit is None or hit[0] is not expr:
            if inst is None:
                scope = Scope(self.var_slots, self.consts, len(self.var_names))
                n = len(self.var_names)
                scope.slots.update({(v, True): n + i for i, v in enumerate(self.var_names)})
                scope.size = 2 * n
            else:
                ev = self.events[inst.event]
                scope = Scope(ev.scope.slots, self.consts, ev.scope.size)
            fn = guard_faults(Compiler(scope).compile(expr))
            hit = (expr, fn, scope)
            self._pred_cache[key] = hit
        _, fn, scope = hit
        n = len(state)
        frame = list(state)
        frame.extend(next if next is not None else [None] * n)
        if inst is not None:
            frame.extend(inst.args)
        frame.extend([None] * (scope.size - len(frame)))
        return fn(frame)


def evaluate(expr: A.Expr, env: Optional[dict] = None, system: Optional[System] = None):
    """Evaluate a closed expression; free names come from ``env``.

    Without a system, names not bound in ``env`` denote atoms.
    """
    env = dict(env or {})
    consts = dict(system.consts) if system is not None else {}
    if system is None:
        for name, primed in A.free_names(expr):
            if not primed and name not in env:
                consts.setdefault(name, name)
    consts.setdefault("RAT", RatView(()))
    consts.setdefault("NAT", NatView(()))
    consts.setdefault("BOOL", frozenset({False, True}))
    names = sorted(env)
    slots = {(k, False): i for i, k in enumerate(names)}
    scope = Scope(slots, consts, len(names))
    fn = guard_faults(Compiler(scope).compile(expr))
    frame = [env[k] for k in names]
    frame.extend([None] * (scope.size - len(frame)))
    return fn(frame)
