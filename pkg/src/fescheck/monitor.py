"""Run-time view of policies: guard enforcement, move filtering, simulation.

Two ways to respect permissions and prohibitions are offered and must
agree: ``enforce_guards`` rewrites each event to require ``perm`` and
``~proh``, while ``permitted_moves`` filters the feasible moves of the
unchanged system at run time.  The monitor never adds behaviour, it only
withholds feasible moves.
"""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, field
from typing import Optional

from .lang import ast as A
from .lang.typecheck import TypedSystem, typecheck
from .semantics.system import EventInstance, System
from .values import EvalFault

RAW, MONITORED = "raw", "monitored"
RANDOM, FAIR = "random", "fair"


def enforce_guards(typed: TypedSystem) -> TypedSystem:
    """Conjoin ``perm /\\ ~proh`` to every event that declares either clause."""
    events = []
    for e in typed.spec.events:
        parts = [e.ba]
        if e.permission is not None:
            parts.append(e.permission)
        if e.prohibition is not None:
            parts.append(A.Unary("not", e.prohibition))
        events.append(dataclasses.replace(e, ba=A.conj(parts)) if len(parts) > 1 else e)
    spec = dataclasses.replace(typed.spec, events=tuple(events))
    return typecheck(spec, typed.bounds, file=typed.file, explosion_limit=typed.explosion_limit)


@dataclass(frozen=True)
class Move:
    inst: EventInstance
    allowed: bool
    reason: str = ""


def policy_verdict(system: System, state: tuple, inst: EventInstance) -> tuple:
    """(allowed, reason); a prohibition is named before a missing permission."""
    try:
        if system.clause("prohibition", state, inst):
            return False, "prohibition"
        if not system.clause("permission", state, inst):
            return False, "permission"
    except EvalFault as exc:
        return False, f"fault: {exc}"
    return True, ""


def permitted_moves(system: System, state: tuple) -> list:
    """Every feasible instance, tagged with the monitor's decision."""
    out = []
    for e in system.event_names:
        for args in system.event_steps(state, e):
            inst = EventInstance(e, args)
            allowed, reason = policy_verdict(system, state, inst)
            out.append(Move(inst, allowed, reason))
    return out


@dataclass
class Position:
    state: tuple
    chosen: Optional[EventInstance]  # None is a stutter step
    filtered: list = field(default_factory=list)  # [(instance, reason)]


@dataclass(frozen=True)
class Violation:
    kind: str  # right-denied | obligation-pending-at-horizon | prohibited-attempt
    position: int
    inst: EventInstance


@dataclass
class Trace:
    system: System
    seed: int
    mode: str
    scheduler: str
    horizon: int
    positions: list
    final: tuple
    violations: list

    def to_json(self) -> dict:
        from .verdict import _fmt_state
        sysm = self.system
        return {
            "system": sysm.name,
            "seed": self.seed,
            "mode": self.mode,
            "scheduler": self.scheduler,
            "horizon": self.horizon,
            "positions": [
                {
                    "state": _fmt_state(sysm.state_dict(p.state)),
                    "step": "stutter" if p.chosen is None else str(p.chosen),
                    "filtered": [{"instance": str(i), "reason": r} for i, r in p.filtered],
                }
                for p in self.positions
            ],
            "final": _fmt_state(sysm.state_dict(self.final)),
            "violations": [
                {"kind": v.kind, "position": v.position, "instance": str(v.inst)}
                for v in self.violations
            ],
        }


def simulate(system: System, mode: str = MONITORED, seed: int = 0, horizon: int = 50,
             scheduler: str = FAIR) -> Trace:
    """One finite run of ``horizon`` steps, deterministic given the arguments.

    The fair scheduler forces the instance whose fairness predicate has held
    longest without the instance occurring, once that wait reaches
    ``horizon // number of fairness instances`` steps.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if mode not in (RAW, MONITORED):
        raise ValueError(f"unknown mode {mode!r}")
    if scheduler not in (RANDOM, FAIR):
        raise ValueError(f"unknown scheduler {scheduler!r}")
    rng = random.Random(seed)
    inits = system.initial_states()
    if not inits:
        raise ValueError("the system has no initial state")
    state = inits[rng.randrange(len(inits))]
    fair = system.fair_instances()
    waited = [0] * len(fair)
    threshold = max(1, horizon // max(1, len(fair)))
    rights = [e for e in system.event_names if system.has_clause(e, "right")]
    obligations = [(inst, system.events[inst.event].decl.obligation.mode)
                   for e in system.event_names if system.events[e].decl.obligation is not None
                   for inst in system.instances(e)]
    pending: dict = {}
    positions: list = []
    violations: list = []

    for i in range(horizon):
        steps = system.steps(state)
        by_inst: dict = {}
        for inst, t in steps:
            by_inst.setdefault(inst, []).append(t)
        filtered = []
        allowed_insts = []
        for inst in by_inst:
            ok, reason = policy_verdict(system, state, inst)
            if ok:
                allowed_insts.append(inst)
            else:
                filtered.append((inst, reason))
        allowed = set(allowed_insts)
        candidates = allowed_insts if mode == MONITORED else list(by_inst)
        # a granted right must not be blocked by the monitor
        for e in rights:
            for args in system.clause_args(e, "right", state):
                inst = EventInstance(e, args)
                if inst not in (allowed if mode == MONITORED else by_inst):
                    violations.append(Violation("right-denied", i, inst))

        chosen = None
        if candidates:
            forced = None
            if scheduler == FAIR:
                best = -1
                cand = set(candidates)
                for k, f in enumerate(fair):
                    if waited[k] >= threshold and f in cand and waited[k] > best:
                        forced, best = f, waited[k]
            chosen = forced if forced is not None else candidates[rng.randrange(len(candidates))]
        if chosen is not None and mode == RAW and chosen not in allowed:
            violations.append(Violation("prohibited-attempt", i, chosen))
        for k, f in enumerate(fair):
            if f == chosen or not system.clause("fairness", state, f):
                waited[k] = 0
            else:
                waited[k] += 1
        for inst, omode in obligations:
            holds = system.clause("obligation", state, inst)
            if holds and inst not in pending:
                pending[inst] = i
            if inst in pending and (chosen == inst or (omode == "weak" and not holds)):
                del pending[inst]
        positions.append(Position(state, chosen, filtered))
        if chosen is not None:
            nexts = by_inst[chosen]
            state = nexts[rng.randrange(len(nexts))]

    for inst, omode in obligations:
        if inst in pending and omode == "weak" and not system.clause("obligation", state, inst):
            del pending[inst]
    for inst, at in sorted(pending.items(), key=lambda kv: kv[1]):
        violations.append(Violation("obligation-pending-at-horizon", at, inst))
    return Trace(system, seed, mode, scheduler, horizon, positions, state, violations)
