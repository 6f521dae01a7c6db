"""State-level checks: well-formedness, permissions, prohibitions, rights.

Verdict ids name the condition and, where it is per event, the event:

    init-inv                 every initial state satisfies the invariant
    inv-preserved:E          every step of E from an Inv-state lands in Inv
    fair-feasible:E          fairness of E(x) implies E(x) is feasible
    fair-policy:E            fairness of E(x) implies perm and not proh
    permission:E             a feasible E(x) is permitted
    prohibition:E            a prohibited E(x) is not feasible
    right:E                  a granted right makes E(x) feasible

Two modes choose the source states.  ``reachable`` uses the in-carrier
states of the explored graph; ``invariant`` uses every carrier valuation
satisfying the invariant.  The reachable states are a subset of the
invariant ones, so an invariant-mode pass implies a reachable-mode pass.
All conditions are evaluated in one sweep over the source states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .explorer import TransitionGraph
from .lang import ast as A
from .semantics.system import EventInstance, System
from .values import EvalFault
from .verdict import FAIL, FAULT, PASS, SKIPPED, Verdict, Witness

REACHABLE, INVARIANT = "reachable", "invariant"

WELLFORMEDNESS = ("init-inv", "inv-preserved", "fair-feasible", "fair-policy")
POLICY = ("permission", "prohibition", "right")
ALL_FAMILIES = WELLFORMEDNESS + POLICY


@dataclass
class _Tally:
    vid: str
    status: str = PASS
    witness: Optional[Witness] = None
    message: str = ""
    violations: int = 0
    checked: int = 0

    def fail(self, witness: Witness, message: str) -> None:
        self.violations += 1
        if self.status == PASS:
            self.status = FAIL
            self.witness = witness
            self.message = message

    def fault(self, witness: Witness, message: str) -> None:
        if self.status != FAULT:
            self.status = FAULT
            self.witness = witness
            self.message = message


@dataclass
class SourceStates:
    """States a sweep starts from, with their grouped steps when known."""

    mode: str
    states: list
    steps: Optional[list] = None  # per state: {event: {args: [next states]}}
    inv_set: Optional[set] = None
    notes: list = field(default_factory=list)


def fairness_declared(system: System, event: str) -> bool:
    return system.events[event].decl.fairness != A.BoolLit(False)


def reachable_sources(graph: TransitionGraph) -> SourceStates:
    states, steps = [], []
    for i, s in enumerate(graph.states):
        if i in graph.frontier:
            continue
        grouped: dict = {e: {} for e in graph.system.event_names}
        for k in graph.out[i]:
            edge = graph.edges[k]
            if edge.label is not None:
                grouped[edge.label.event].setdefault(edge.label.args, []).append(
                    graph.states[edge.dst])
        states.append(s)
        steps.append(grouped)
    notes = []
    if graph.frontier:
        notes.append(f"{len(graph.frontier)} frontier states outside the bounded carriers "
                     f"were not expanded")
    return SourceStates(REACHABLE, states, steps, notes=notes)


def invariant_sources(system: System) -> SourceStates:
    states = system.invariant_states()
    return SourceStates(INVARIANT, states, None, inv_set=set(states))


def sources_for(system: System, mode: str, graph: Optional[TransitionGraph]) -> SourceStates:
    if mode == REACHABLE:
        if graph is None:
            raise ValueError("reachable mode needs a graph")
        return reachable_sources(graph)
    if mode == INVARIANT:
        return invariant_sources(system)
    raise ValueError(f"unknown mode {mode!r}")


def check_safety(system: System, mode: str, graph: Optional[TransitionGraph] = None,
                 families: Iterable[str] = ALL_FAMILIES,
                 sources: Optional[SourceStates] = None) -> list:
    """Run the requested condition families in a single sweep."""
    fams = set(families)
    if sources is None:
        try:
            sources = sources_for(system, mode, graph)
        except EvalFault as exc:
            return [Verdict("source-states", FAULT, mode,
                            f"enumerating source states failed: {exc}")]
    return _Sweep(system, sources, fams).run()


def check_wellformedness(system, mode, graph=None, sources=None) -> list:
    return check_safety(system, mode, graph, WELLFORMEDNESS, sources)


def check_permissions(system, mode, graph=None, sources=None) -> list:
    return check_safety(system, mode, graph, ("permission",), sources)


def check_prohibitions(system, mode, graph=None, sources=None) -> list:
    return check_safety(system, mode, graph, ("prohibition",), sources)


def check_rights(system, mode, graph=None, sources=None) -> list:
    return check_safety(system, mode, graph, ("right",), sources)


class _Sweep:
    def __init__(self, system: System, sources: SourceStates, families: set):
        self.system = system
        self.src = sources
        self.mode = sources.mode
        self.tallies: dict = {}
        self.order: list = []
        self.inv_memo: dict = {}
        names = system.event_names
        self.plan = {}
        for e in names:
            fair = fairness_declared(system, e)
            has_perm = system.has_clause(e, "permission")
            has_proh = system.has_clause(e, "prohibition")
            wanted = []
            if "inv-preserved" in families:
                wanted.append("inv-preserved")
            if "fair-feasible" in families and fair:
                wanted.append("fair-feasible")
            if "fair-policy" in families and fair and (has_perm or has_proh):
                wanted.append("fair-policy")
            for clause in POLICY:
                if clause in families and system.has_clause(e, clause):
                    wanted.append(clause)
            self.plan[e] = wanted
        self.init_wanted = "init-inv" in families
        if self.init_wanted:
            self._tally("init-inv")
        for e in names:
            for fam in self.plan[e]:
                self._tally(f"{fam}:{e}")

    def _tally(self, vid: str) -> _Tally:
        t = self.tallies.get(vid)
        if t is None:
            t = _Tally(vid)
            self.tallies[vid] = t
            self.order.append(vid)
        return t

    def _state(self, s: tuple) -> dict:
        return self.system.state_dict(s)

    def inv_ok(self, s: tuple, t: tuple) -> bool:
        """Inv(t) for a successor t of the Inv-state s."""
        inv_set = self.src.inv_set
        if inv_set is not None and t in inv_set:
            return True
        hit = self.inv_memo.get(t)
        if hit is None:
            if inv_set is not None and self.system.in_carrier(t):
                hit = False  # every carrier state with Inv is in the set
            else:
                hit = self.system.inv_after(s, t)
            self.inv_memo[t] = hit
        return hit

    def run(self) -> list:
        sysm = self.system
        if self.init_wanted:
            self._check_init()
        for k, s in enumerate(self.src.states):
            if self.src.steps is None:
                # invariant mode: sources satisfy Inv by construction
                grouped = None
            else:
                try:
                    if not sysm.inv(s):
                        continue
                except EvalFault:
                    continue  # the fault is reported against the incoming step
                grouped = self.src.steps[k]
            for e in sysm.event_names:
                if self.plan[e]:
                    self._check_event(s, e, None if grouped is None else grouped[e])
        out = []
        for vid in self.order:
            t = self.tallies[vid]
            details = {"checked": t.checked, "violations": t.violations}
            message = t.message or _pass_message(vid, t.checked)
            out.append(Verdict(vid, t.status, self.mode, message, t.witness, details=details))
        return out

    def _check_init(self) -> None:
        sysm = self.system
        tally = self.tallies["init-inv"]
        try:
            inits = sysm.initial_states()
        except EvalFault as exc:
            tally.fault(Witness({}), f"enumerating initial states: {exc}")
            return
        if not inits:
            tally.message = "no initial states (vacuous)"
        for s in inits:
            tally.checked += 1
            try:
                ok = sysm.inv(s)
            except EvalFault as exc:
                tally.fault(Witness(self._state(s)), f"invariant faulted on an initial state: {exc}")
                continue
            if not ok:
                tally.fail(Witness(self._state(s)), "initial state violates the invariant")

    def _check_event(self, s: tuple, e: str, steps: Optional[dict]) -> None:
        sysm = self.system
        wanted = self.plan[e]
        if steps is None:
            try:
                steps = sysm.event_steps(s, e)
            except EvalFault as exc:
                self._event_fault(s, e, exc)
                return
        for fam in wanted:
            self.tallies[f"{fam}:{e}"].checked += 1

        if "inv-preserved" in wanted:
            tally = self.tallies[f"inv-preserved:{e}"]
            for args, nexts in steps.items():
                for t in nexts:
                    try:
                        ok = self.inv_ok(s, t)
                    except EvalFault as exc:
                        tally.fault(Witness(self._state(s), EventInstance(e, args), self._state(t)),
                                    f"invariant faulted on a successor: {exc}")
                        continue
                    if not ok:
                        tally.fail(Witness(self._state(s), EventInstance(e, args), self._state(t)),
                                   "step leaves the invariant")

        feasible = steps.keys()
        need_fair = "fair-feasible" in wanted or "fair-policy" in wanted
        fair_args: list = []
        if need_fair:
            try:
                fair_args = sysm.clause_args(e, "fairness", s)
            except EvalFault as exc:
                for fam in ("fair-feasible", "fair-policy"):
                    if fam in wanted:
                        self.tallies[f"{fam}:{e}"].fault(Witness(self._state(s)),
                                                         f"fairness clause faulted: {exc}")
                fair_args = []
        if "fair-feasible" in wanted:
            tally = self.tallies[f"fair-feasible:{e}"]
            for a in fair_args:
                if a not in feasible:
                    tally.fail(Witness(self._state(s), EventInstance(e, a)),
                               "fairness holds but the instance is infeasible")
        if "fair-policy" in wanted:
            tally = self.tallies[f"fair-policy:{e}"]
            for a in fair_args:
                inst = EventInstance(e, a)
                try:
                    ok = sysm.clause("permission", s, inst) and not sysm.clause("prohibition", s, inst)
                except EvalFault as exc:
                    tally.fault(Witness(self._state(s), inst), f"policy clause faulted: {exc}")
                    continue
                if not ok:
                    tally.fail(Witness(self._state(s), inst),
                               "fairness holds but the policy forbids the instance")
        if "permission" in wanted:
            tally = self.tallies[f"permission:{e}"]
            for a in feasible:
                inst = EventInstance(e, a)
                try:
                    ok = sysm.clause("permission", s, inst)
                except EvalFault as exc:
                    tally.fault(Witness(self._state(s), inst), f"permission faulted: {exc}")
                    continue
                if not ok:
                    tally.fail(Witness(self._state(s), inst), "feasible instance is not permitted")
        if "prohibition" in wanted:
            tally = self.tallies[f"prohibition:{e}"]
            for a in feasible:
                inst = EventInstance(e, a)
                try:
                    bad = sysm.clause("prohibition", s, inst)
                except EvalFault as exc:
                    tally.fault(Witness(self._state(s), inst), f"prohibition faulted: {exc}")
                    continue
                if bad:
                    tally.fail(Witness(self._state(s), inst), "prohibited instance is feasible")
        if "right" in wanted:
            tally = self.tallies[f"right:{e}"]
            try:
                granted = sysm.clause_args(e, "right", s)
            except EvalFault as exc:
                tally.fault(Witness(self._state(s)), f"right clause faulted: {exc}")
                granted = []
            for a in granted:
                if a not in feasible:
                    tally.fail(Witness(self._state(s), EventInstance(e, a)),
                               "right holds but the instance is infeasible")

    def _event_fault(self, s: tuple, e: str, exc: Exception) -> None:
        # locate the faulting instance for the report
        sysm = self.system
        culprit = None
        for inst in sysm.instances(e):
            try:
                sysm.successors(s, inst)
            except EvalFault:
                culprit = inst
                break
        w = Witness(self._state(s), culprit)
        where = f" at {culprit}" if culprit is not None else ""
        for fam in self.plan[e]:
            self.tallies[f"{fam}:{e}"].fault(w, f"evaluating {e}{where} faulted: {exc}")


def _pass_message(vid: str, checked: int) -> str:
    return f"holds on {checked} checked states"


def confirm_witness(system: System, verdict: Verdict) -> bool:
    """Re-evaluate a failing verdict's witness from scratch."""
    w = verdict.witness
    if w is None:
        return False
    fam = verdict.id.split(":")[0]
    s = system.state_from_dict(w.state)
    inst = w.instance
    if fam == "init-inv":
        return system.init(s) and not system.inv(s)
    if not system.inv(s):
        return False
    if fam == "inv-preserved":
        t = system.state_from_dict(w.next)
        return t in system.successors(s, inst) and not system.inv(t)
    if fam == "fair-feasible":
        return system.clause("fairness", s, inst) and not system.fis(s, inst)
    if fam == "fair-policy":
        return system.clause("fairness", s, inst) and not (
            system.clause("permission", s, inst) and not system.clause("prohibition", s, inst))
    if fam == "permission":
        return system.fis(s, inst) and not system.clause("permission", s, inst)
    if fam == "prohibition":
        return system.fis(s, inst) and system.clause("prohibition", s, inst)
    if fam == "right":
        return system.clause("right", s, inst) and not system.fis(s, inst)
    return False


def skipped(ids: Iterable[str], mode: str, reason: str) -> list:
    return [Verdict(i, SKIPPED, mode, reason) for i in ids]


def planned_ids(system: System, families: Iterable[str] = ALL_FAMILIES) -> list:
    """The verdict ids a sweep over ``families`` would report, in report order."""
    return list(_Sweep(system, SourceStates(REACHABLE, []), set(families)).order)
