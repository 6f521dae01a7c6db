"""Refinement of an abstract system by a concrete one under a gluing invariant.

Verdict ids:

    glue-invariant             glued abstract states satisfy the abstract
                               invariant
    ref-init                   every concrete initial state glues to an
                               abstract initial state
    ref-event:E                every step of a refining concrete event E is
                               matched by its abstract event
    ref-new-event:E            every step of a new concrete event E leaves
                               the abstract state unchanged
    ref-fairness:A             fairness of abstract event A survives
    ref-right-init:A           a translated right of A grants a concrete
                               witness right
    ref-right-term:A           a started witness branch ends in A's refiners
                               unless the translated right lapses
    strong-right:A             a translated right of A makes a refiner
                               feasible at once (optional, usually too strong)
    run-translation            sampled concrete runs map to abstract runs

The glue set of a concrete state s holds the abstract states t with
``J(t, s)`` and the abstract invariant.  Abstract formulas are carried to
the concrete level by translating positive atoms to "some glued state
satisfies it" and negative atoms to "every glued state satisfies it".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .explorer import TransitionGraph, build_graph, path_to
from .lang import ast as A
from .lang.diagnostics import SpecError
from .lang.parser import check_refinement_structure
from .lang.typecheck import check_joint_predicate
from .liveness import (ANY, EdgePred, EventAtom, LivenessGraph, Not, Or, StatePred, any_of,
                       check_leadsto, liveness_graph, render_lasso)
from .monitor import FAIR, RAW, simulate
from .safety import (INVARIANT, REACHABLE, check_safety, fairness_declared, sources_for)
from .semantics.compile import Compiler, Scope, guard_faults
from .semantics.solver import Solver, Target
from .semantics.system import EventInstance, System
from .values import EvalFault
from .verdict import FAIL, FAULT, PASS, SKIPPED, Verdict, Witness


# --- translation of abstract formulas ----------------------------------------------


class OFormula:
    def eval(self, ctx: "RefinementContext", s: tuple, inst: Optional[EventInstance]) -> bool:
        raise NotImplementedError


@dataclass
class OAtom(OFormula):
    expr: A.Expr
    positive: bool

    def eval(self, ctx, s, inst):
        glue = ctx.glue(s)
        if self.positive:
            return any(ctx.abs.eval_pred(self.expr, t, None, inst) for t in glue)
        return all(ctx.abs.eval_pred(self.expr, t, None, inst) for t in glue)


@dataclass
class ONot(OFormula):
    a: OFormula

    def eval(self, ctx, s, inst):
        return not self.a.eval(ctx, s, inst)


@dataclass
class OAnd(OFormula):
    a: OFormula
    b: OFormula

    def eval(self, ctx, s, inst):
        return self.a.eval(ctx, s, inst) and self.b.eval(ctx, s, inst)


@dataclass
class OOr(OFormula):
    a: OFormula
    b: OFormula

    def eval(self, ctx, s, inst):
        return self.a.eval(ctx, s, inst) or self.b.eval(ctx, s, inst)


def translate_O(e: A.Expr, positive: bool = True) -> OFormula:
    """Descend through boolean connectives; every other subformula is an atom."""
    if isinstance(e, A.Unary) and e.op == "not":
        return ONot(translate_O(e.operand, not positive))
    if isinstance(e, A.Binary):
        if e.op == "and":
            return OAnd(translate_O(e.left, positive), translate_O(e.right, positive))
        if e.op == "or":
            return OOr(translate_O(e.left, positive), translate_O(e.right, positive))
        if e.op == "implies":
            return OOr(ONot(translate_O(e.left, not positive)), translate_O(e.right, positive))
        if e.op == "equiv":
            fwd = A.Binary("implies", e.left, e.right)
            bwd = A.Binary("implies", e.right, e.left)
            return OAnd(translate_O(fwd, positive), translate_O(bwd, positive))
    return OAtom(e, positive)


# --- context -------------------------------------------------------------------


@dataclass
class RefinementOptions:
    mode: str = REACHABLE
    strong_right: bool = False
    weak_new_events: bool = False
    runs: int = 100
    horizon: int = 40
    seed: int = 0


class RefinementContext:
    def __init__(self, abstract: System, concrete: System, ref: A.RefinementSpec,
                 abs_graph: Optional[TransitionGraph] = None,
                 conc_graph: Optional[TransitionGraph] = None):
        diags = check_refinement_structure(ref, abstract.spec, concrete.spec)
        if diags:
            raise SpecError(diags)
        check_joint_predicate(ref.gluing, [abstract.typed, concrete.typed], "gluing invariant",
                              ref.pos)
        self.abs = abstract
        self.conc = concrete
        self.ref = ref
        self.refines = ref.refines_map  # concrete event -> abstract event
        self.witnesses = ref.witness_map  # abstract event -> [concrete events]
        self._abs_graph = abs_graph
        self._conc_graph = conc_graph
        na, nc = len(abstract.var_names), len(concrete.var_names)
        self.na = na
        slots = {(v, False): i for i, v in enumerate(abstract.var_names)}
        slots.update({(v, False): na + j for j, v in enumerate(concrete.var_names)})
        consts = dict(abstract.consts)
        consts.update(concrete.consts)
        self.scope = Scope(slots, consts, na + nc)
        compiler = Compiler(self.scope)
        self._J = guard_faults(compiler.compile(ref.gluing))
        limit = abstract.typed.explosion_limit
        ts = abstract.typed
        targets = [Target((v, False), i, (lambda t=t: ts.carrier(t)))
                   for i, (v, t) in enumerate(zip(abstract.var_names, abstract.var_types))]
        self._glue_solver = Solver(compiler, ref.gluing, targets, limit)
        self._init_solver = Solver(compiler, A.conj([ref.gluing, abstract.spec.initial]),
                                   targets, limit)
        self._glue: dict = {}
        self.glue_inv_violations: dict = {}  # concrete state -> J-glued t with ~Inv_abs

    @property
    def abs_graph(self) -> TransitionGraph:
        if self._abs_graph is None:
            self._abs_graph = build_graph(self.abs)
        return self._abs_graph

    @property
    def conc_graph(self) -> TransitionGraph:
        if self._conc_graph is None:
            self._conc_graph = build_graph(self.conc)
        return self._conc_graph

    def _frame(self, t, s) -> list:
        f = list(t) if t is not None else [None] * self.na
        f.extend(s)
        f.extend([None] * (self.scope.size - len(f)))
        return f

    def _solve(self, solver: Solver, s: tuple) -> list:
        out: dict = {}
        na = self.na
        solver.run(self._frame(None, s), lambda f: out.setdefault(tuple(f[:na])))
        return list(out)

    def glue(self, s: tuple) -> list:
        hit = self._glue.get(s)
        if hit is None:
            hit = []
            for t in self._solve(self._glue_solver, s):
                if self.abs.inv(t):
                    hit.append(t)
                else:
                    self.glue_inv_violations.setdefault(s, t)
            self._glue[s] = hit
        return hit

    def glued_initial(self, s: tuple) -> list:
        return self._solve(self._init_solver, s)

    def J(self, t: tuple, s: tuple) -> bool:
        return bool(self._J(self._frame(t, s)))

    def abstract_instance(self, inst: EventInstance) -> EventInstance:
        ea = self.refines[inst.event]
        k = len(self.abs.events[ea].decl.params)
        return EventInstance(ea, inst.args[:k])

    def refiners(self, ea: str) -> list:
        return [c for c, a in self.ref.refines if a == ea]


def _abs_state(ctx: RefinementContext, t) -> dict:
    return ctx.abs.state_dict(t)


# --- safety-style conditions ---------------------------------------------------------


def check_ref_init(ctx: RefinementContext) -> Verdict:
    conc = ctx.conc
    try:
        inits = conc.initial_states()
        for s in inits:
            if not ctx.glued_initial(s):
                return Verdict("ref-init", FAIL, "reachable",
                               "concrete initial state has no glued abstract initial state",
                               Witness(conc.state_dict(s)))
    except EvalFault as exc:
        return Verdict("ref-init", FAULT, "reachable", f"evaluation faulted: {exc}")
    if not inits:
        return Verdict("ref-init", PASS, "reachable", "no concrete initial states (vacuous)")
    return Verdict("ref-init", PASS, "reachable",
                   f"all {len(inits)} concrete initial states are glued to abstract ones")


def check_glue_invariant(ctx: RefinementContext, mode: str = REACHABLE) -> Verdict:
    """The gluing invariant must imply the abstract invariant on checked states."""
    src = sources_for(ctx.conc, mode, ctx.conc_graph if mode == REACHABLE else None)
    try:
        for s in src.states:
            ctx.glue(s)
            t = ctx.glue_inv_violations.get(s)
            if t is not None:
                return Verdict("glue-invariant", FAIL, mode,
                               "a glued abstract state violates the abstract invariant",
                               Witness(ctx.conc.state_dict(s), abstract=_abs_state(ctx, t)))
    except EvalFault as exc:
        return Verdict("glue-invariant", FAULT, mode, f"evaluation faulted: {exc}")
    return Verdict("glue-invariant", PASS, mode,
                   f"glued abstract states satisfy the invariant on {len(src.states)} states")


def check_ref_events(ctx: RefinementContext, mode: str = REACHABLE,
                     weak_new_events: bool = False) -> list:
    conc = ctx.conc
    src = sources_for(conc, mode, ctx.conc_graph if mode == REACHABLE else None)
    verdicts: dict = {}
    for e in conc.event_names:
        vid = f"ref-event:{e}" if e in ctx.refines else f"ref-new-event:{e}"
        verdicts[e] = Verdict(vid, PASS, mode, "", details={"steps": 0, "violations": 0})
    empty_glue = 0
    for k, s in enumerate(src.states):
        try:
            glue = ctx.glue(s)
        except EvalFault as exc:
            for v in verdicts.values():
                if v.status != FAULT:
                    v.status, v.message = FAULT, f"glue evaluation faulted: {exc}"
            continue
        if not glue:
            empty_glue += 1
        for e in conc.event_names:
            v = verdicts[e]
            try:
                steps = src.steps[k][e] if src.steps is not None else conc.event_steps(s, e)
                for args, nexts in steps.items():
                    inst = EventInstance(e, args)
                    for s2 in nexts:
                        v.details["steps"] += 1
                        bad = _edge_violation(ctx, s, inst, s2, glue, weak_new_events)
                        if bad is not None:
                            v.details["violations"] += 1
                            if v.status == PASS:
                                v.status = FAIL
                                v.message, v.witness = bad
            except EvalFault as exc:
                if v.status != FAULT:
                    v.status = FAULT
                    v.message = f"evaluation faulted: {exc}"
                    v.witness = Witness(conc.state_dict(s))
    out = []
    for e in conc.event_names:
        v = verdicts[e]
        if v.status == PASS:
            kind = "matched by the abstract event" if e in ctx.refines else "invisible"
            v.message = f"{v.details['steps']} steps checked, all {kind}"
            if empty_glue:
                v.message += f"; {empty_glue} concrete states have an empty glue set"
        out.append(v)
    return out


def _edge_violation(ctx, s, inst, s2, glue, weak_new_events):
    conc = ctx.conc
    if inst.event in ctx.refines:
        ainst = ctx.abstract_instance(inst)
        for t in glue:
            if not any(ctx.J(t2, s2) for t2 in ctx.abs.successors(t, ainst)):
                return (f"no step of {ainst} from the glued abstract state reaches a state "
                        f"glued to the target",
                        Witness(conc.state_dict(s), inst, conc.state_dict(s2),
                                abstract=_abs_state(ctx, t)))
        return None
    for t in glue:
        ok = bool(ctx.glue(s2)) if weak_new_events else ctx.J(t, s2)
        if not ok:
            msg = ("target state has no glued abstract state" if weak_new_events
                   else "the unchanged abstract state is not glued to the target")
            return (msg, Witness(conc.state_dict(s), inst, conc.state_dict(s2),
                                 abstract=_abs_state(ctx, t)))
    return None


def _prefix_args(conc: System, event: str, x: tuple) -> list:
    return [inst for inst in conc.instances(event) if inst.args[:len(x)] == x]


def check_ref_right_init(ctx: RefinementContext, ea: str, mode: str = REACHABLE) -> Verdict:
    vid = f"ref-right-init:{ea}"
    conc = ctx.conc
    right = ctx.abs.events[ea].decl.right
    O = translate_O(right)
    witnesses = ctx.witnesses.get(ea, [])
    src = sources_for(conc, mode, ctx.conc_graph if mode == REACHABLE else None)
    checked = 0
    try:
        for s in src.states:
            granted = set()
            for ei in witnesses:
                if conc.has_clause(ei, "right"):
                    granted.update(EventInstance(ei, a) for a in conc.clause_args(ei, "right", s))
            for x in ctx.abs.instances(ea):
                checked += 1
                if not O.eval(ctx, s, x):
                    continue
                if not any(g.args[:len(x.args)] == x.args for g in granted):
                    note = "no witness events are declared" if not witnesses else ""
                    return Verdict(vid, FAIL, mode,
                                   f"translated right of {x} holds but no witness right is granted",
                                   Witness(conc.state_dict(s), x, note=note))
    except EvalFault as exc:
        return Verdict(vid, FAULT, mode, f"evaluation faulted: {exc}")
    return Verdict(vid, PASS, mode, f"holds for {checked} state and instance pairs")


def check_strong_right_refinement(ctx: RefinementContext, ea: str,
                                  mode: str = REACHABLE) -> Verdict:
    vid = f"strong-right:{ea}"
    conc = ctx.conc
    O = translate_O(ctx.abs.events[ea].decl.right)
    refiners = ctx.refiners(ea)
    src = sources_for(conc, mode, ctx.conc_graph if mode == REACHABLE else None)
    checked = 0
    try:
        for k, s in enumerate(src.states):
            feasible = []
            for er in refiners:
                steps = src.steps[k][er] if src.steps is not None else conc.event_steps(s, er)
                feasible.extend(steps)
            for x in ctx.abs.instances(ea):
                checked += 1
                if O.eval(ctx, s, x) and not any(a[:len(x.args)] == x.args for a in feasible):
                    return Verdict(vid, FAIL, mode,
                                   f"translated right of {x} holds but no refining event "
                                   f"is feasible", Witness(conc.state_dict(s), x))
    except EvalFault as exc:
        return Verdict(vid, FAULT, mode, f"evaluation faulted: {exc}")
    return Verdict(vid, PASS, mode, f"holds for {checked} state and instance pairs")


# --- liveness-style conditions --------------------------------------------------------


def _frontier_note(ctx: RefinementContext) -> str:
    n = len(ctx.conc_graph.frontier)
    return f"; {n} frontier states were not expanded" if n else ""


def check_ref_fairness(ctx: RefinementContext, ea: str,
                       lgraph: Optional[LivenessGraph] = None) -> Verdict:
    vid = f"ref-fairness:{ea}"
    abs_sys = ctx.abs
    fair = abs_sys.events[ea].decl.fairness
    refiners = ctx.refiners(ea)
    try:
        g = lgraph or liveness_graph(ctx.conc_graph)
        failed, first = 0, None
        for x in abs_sys.instances(ea):
            F = StatePred(lambda s, x=x: any(abs_sys.eval_pred(fair, t, None, x)
                                             for t in ctx.glue(s)), f"fair {x}")

            def trace(s, label, s2, x=x):
                if label is None or label.event not in refiners:
                    return False
                if ctx.abstract_instance(label) != x:
                    return False
                nexts = ctx.glue(s2)
                return all(t2 in abs_sys.successors(t, x) for t in ctx.glue(s) for t2 in nexts)

            G = Or(EdgePred(trace, f"trace of {x}"), Not(F))
            res = check_leadsto(g, F, G)
            if not res.passed:
                failed += 1
                if first is None:
                    first = (x, res.lasso)
    except EvalFault as exc:
        return Verdict(vid, FAULT, "reachable", f"evaluation faulted: {exc}")
    if first is None:
        return Verdict(vid, PASS, "reachable",
                       "abstract fairness is preserved" + _frontier_note(ctx),
                       details={"violations": 0})
    x, lasso = first
    return Verdict(vid, FAIL, "reachable", f"a fair concrete run starves {x}",
                   lasso=render_lasso(g, lasso, ctx.conc), details={"violations": failed})


def check_right_refinement_leadsto(ctx: RefinementContext, ea: str,
                                   lgraph: Optional[LivenessGraph] = None) -> Verdict:
    vid = f"ref-right-term:{ea}"
    conc = ctx.conc
    O = translate_O(ctx.abs.events[ea].decl.right)
    refiners = ctx.refiners(ea)
    try:
        g = lgraph or liveness_graph(ctx.conc_graph)
        failed, first, checks = 0, None, 0
        for x in ctx.abs.instances(ea):
            right = StatePred(lambda s, x=x: O.eval(ctx, s, x), f"right {x}")
            G = Or(Not(right), any_of([EventAtom(er, x.args) for er in refiners]))
            for ei in ctx.witnesses.get(ea, []):
                for z in _prefix_args(conc, ei, x.args):
                    checks += 1
                    res = check_leadsto(g, EventAtom(ei, z.args), G)
                    if not res.passed:
                        failed += 1
                        if first is None:
                            first = (z, res.lasso)
    except EvalFault as exc:
        return Verdict(vid, FAULT, "reachable", f"evaluation faulted: {exc}")
    if first is None:
        return Verdict(vid, PASS, "reachable",
                       f"all {checks} witness branches terminate" + _frontier_note(ctx),
                       details={"checks": checks, "violations": 0})
    z, lasso = first
    return Verdict(vid, FAIL, "reachable",
                   f"after {z} a fair run never reaches a refining event while the right holds",
                   lasso=render_lasso(g, lasso, conc), details={"checks": checks, "violations": failed})


# --- run translation -------------------------------------------------------------------


@dataclass
class Translation:
    ok: bool
    abstract: list = field(default_factory=list)  # abstract states t_0 .. t_k
    stuck_at: Optional[int] = None  # index of the concrete step that could not be matched


def translate_run(ctx: RefinementContext, states: list, labels: list) -> Translation:
    """Greedily build glued abstract states along a finite concrete run.

    ``labels[i]`` leads from ``states[i]`` to ``states[i + 1]``; None is a
    stutter step.  The first candidate in solver order is always taken.
    """
    start = ctx.glued_initial(states[0])
    if not start:
        return Translation(False, [], 0)
    t = start[0]
    out = [t]
    for i, label in enumerate(labels):
        s2 = states[i + 1]
        if label is None:
            nxt = t if ctx.J(t, s2) else None
        elif label.event in ctx.refines:
            ainst = ctx.abstract_instance(label)
            nxt = next((t2 for t2 in ctx.abs.successors(t, ainst) if ctx.J(t2, s2)), None)
        else:
            nxt = t if ctx.J(t, s2) else None
        if nxt is None:
            return Translation(False, out, i)
        t = nxt
        out.append(t)
    return Translation(True, out)


def spot_check_run_translation(ctx: RefinementContext, seed: int = 0, runs: int = 100,
                               horizon: int = 40) -> Verdict:
    try:
        for r in range(runs):
            trace = simulate(ctx.conc, RAW, seed + r, horizon, FAIR)
            states = [p.state for p in trace.positions] + [trace.final]
            labels = [p.chosen for p in trace.positions]
            tr = translate_run(ctx, states, labels)
            if not tr.ok:
                i = tr.stuck_at
                w = Witness(ctx.conc.state_dict(states[i]), labels[i] if i < len(labels) else None,
                            ctx.conc.state_dict(states[i + 1]) if i < len(labels) else None,
                            note=f"run seed {seed + r}, step {i}")
                return Verdict("run-translation", FAIL, "reachable",
                               "a sampled concrete run has no glued abstract run", w)
    except (EvalFault, ValueError) as exc:
        return Verdict("run-translation", FAULT, "reachable", f"simulation faulted: {exc}")
    return Verdict("run-translation", PASS, "reachable",
                   f"{runs} sampled runs of {horizon} steps translate to abstract runs",
                   details={"runs": runs, "horizon": horizon, "seed": seed})


def run_to_witness(ctx: RefinementContext, witness: Witness) -> tuple:
    """The shortest graph run ending with the witness edge: (states, labels)."""
    g = ctx.conc_graph
    src = g.index[ctx.conc.state_from_dict(witness.state)]
    dst = ctx.conc.state_from_dict(witness.next)
    path = path_to(g, src)
    states = [g.states[g.edges[path[0]].src]] if path else [g.states[src]]
    labels = []
    for k in path:
        labels.append(g.edges[k].label)
        states.append(g.states[g.edges[k].dst])
    labels.append(witness.instance)
    states.append(dst)
    return states, labels


# --- orchestration ----------------------------------------------------------------------


def check_refinement(ctx: RefinementContext, opts: Optional[RefinementOptions] = None) -> list:
    opts = opts or RefinementOptions()
    verdicts: list = []
    for sysm, graph in ((ctx.abs, ctx.abs_graph), (ctx.conc, ctx.conc_graph)):
        for v in check_safety(sysm, opts.mode, graph if opts.mode == REACHABLE else None):
            v.id = f"{sysm.name}/{v.id}"
            verdicts.append(v)
    verdicts.append(check_ref_init(ctx))
    verdicts.append(check_glue_invariant(ctx, opts.mode))
    try:
        verdicts.extend(check_ref_events(ctx, opts.mode, opts.weak_new_events))
    except EvalFault as exc:
        verdicts.append(Verdict("ref-events", FAULT, opts.mode, f"evaluation faulted: {exc}"))
    lg = liveness_graph(ctx.conc_graph)
    for ea in ctx.abs.event_names:
        if fairness_declared(ctx.abs, ea):
            verdicts.append(check_ref_fairness(ctx, ea, lg))
    for ea in ctx.abs.event_names:
        if not ctx.abs.has_clause(ea, "right"):
            continue
        verdicts.append(check_ref_right_init(ctx, ea, opts.mode))
        verdicts.append(check_right_refinement_leadsto(ctx, ea, lg))
        if opts.strong_right:
            verdicts.append(check_strong_right_refinement(ctx, ea, opts.mode))
    core = [v for v in verdicts if v.id == "ref-init" or v.id.startswith("ref-event")
            or v.id.startswith("ref-new-event")]
    if all(v.status == PASS for v in core):
        verdicts.append(spot_check_run_translation(ctx, opts.seed, opts.runs, opts.horizon))
    else:
        verdicts.append(Verdict("run-translation", SKIPPED, "reachable",
                                "skipped because the step conditions do not all pass"))
    return verdicts
