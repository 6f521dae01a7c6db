import pytest

from conftest import graph, system
from fescheck.lang.bounds import parse_bounds
from fescheck.lang.parser import parse_system
from fescheck.lang.typecheck import typecheck
from fescheck.monitor import (FAIR, MONITORED, RANDOM, RAW, enforce_guards, permitted_moves,
                              policy_verdict, simulate)
from fescheck.semantics.system import EventInstance, System
from fescheck.values import rat

RISK = ("bank_riskpolicy.fes", "bank-policy.bounds")


def make(text, bounds=""):
    return System(typecheck(parse_system(text), parse_bounds(bounds)))


def test_high_risk_loan_is_denied_by_prohibition():
    s = system(*RISK)
    (s0,) = s.initial_states()
    moves = {str(m.inst): m for m in permitted_moves(s, s0)}
    m = moves["newLoan(c1, l1, 3, 1, 0)"]
    assert not m.allowed and m.reason == "prohibition"
    assert moves["newLoan(c1, l1, 0, 1, 0)"].allowed


def test_no_feasible_instance_gives_no_moves():
    s = make("system S variables x: BOOL invariant true initial x = false\n"
             "event e = x /\\ x' = x\nend")
    (s0,) = s.initial_states()
    assert permitted_moves(s, s0) == []


def test_extra_payments_are_never_filtered():
    s = system(*RISK)
    g = graph(*RISK)
    for i, st in enumerate(g.states[:2000]):
        if i in g.frontier:
            continue
        for m in permitted_moves(s, st):
            if m.inst.event == "extraPayBack":
                assert m.allowed


def test_missing_permission_is_named():
    s = system(*RISK)
    (s0,) = s.initial_states()
    inst = EventInstance("newLoan", ("c1", "l1", rat(0), rat(1), rat(1)))
    assert policy_verdict(s, s0, inst) == (False, "permission")


def test_trivial_policy_leaves_transitions_unchanged():
    text = ("system S variables x: BOOL, n: RAT invariant true initial x = false /\\ n = 0\n"
            "event e(k: RAT) = x' = ~x /\\ n' = k\npermission true\nprohibition false\nend")
    raw = make(text, "RAT = {0, 1}")
    enforced = System(enforce_guards(raw.typed))
    for st in raw.invariant_states():
        for inst in raw.all_instances():
            assert sorted(raw.successors(st, inst)) == sorted(enforced.successors(st, inst))


def test_monitored_run_has_no_prohibited_steps():
    s = system(*RISK)
    enforced = System(enforce_guards(s.typed))
    t = simulate(s, MONITORED, 42, 50, FAIR)
    assert len(t.positions) == 50
    assert not [v for v in t.violations if v.kind == "prohibited-attempt"]
    states = [p.state for p in t.positions] + [t.final]
    for i, p in enumerate(t.positions):
        if p.chosen is not None:
            assert policy_verdict(s, p.state, p.chosen)[0]
            assert states[i + 1] in enforced.successors(p.state, p.chosen)
        for inst, reason in p.filtered:
            assert s.fis(p.state, inst) and reason in ("permission", "prohibition")


def test_raw_runs_record_prohibited_attempts():
    s = system(*RISK)
    found = any(v.kind == "prohibited-attempt"
                for seed in range(10) for v in simulate(s, RAW, seed, 30, RANDOM).violations)
    assert found


def test_horizon_must_be_positive():
    s = system(*RISK)
    with pytest.raises(ValueError):
        simulate(s, MONITORED, 0, 0, FAIR)


def test_simulation_is_deterministic():
    s = system(*RISK)
    a = simulate(s, MONITORED, 5, 40, FAIR).to_json()
    b = simulate(s, MONITORED, 5, 40, FAIR).to_json()
    assert a == b


def test_fair_scheduler_forces_long_waiting_instances():
    s = make("system S variables x: BOOL, y: BOOL invariant true initial x = false /\\ y = false\n"
             "event tick = x' = x /\\ y' = y\n"
             "event gox = ~x /\\ x' = true /\\ y' = y\nfairness ~x\n"
             "event goy = ~y /\\ y' = true /\\ x' = x\nfairness ~y\nend")
    horizon = 40
    threshold = horizon // 2
    for seed in range(30):
        t = simulate(s, MONITORED, seed, horizon, FAIR)
        for e in ("gox", "goy"):
            at = [i for i, p in enumerate(t.positions) if p.chosen == EventInstance(e, ())]
            assert at and at[0] <= threshold + 1


def test_weak_obligation_pending_only_near_horizon():
    s = system("bank_obl_weak.fes", "bank-small.bounds")
    horizon = 120
    n_fair = len(s.fair_instances())
    threshold = horizon // n_fair
    for seed in range(20):
        for v in simulate(s, MONITORED, seed, horizon, FAIR).violations:
            assert v.kind == "obligation-pending-at-horizon"
            assert v.position >= horizon - threshold - n_fair


def test_denied_right_is_reported():
    s = make("system S variables x: BOOL invariant true initial x = false\n"
             "event e = x' = ~x\nprohibition true\nright true\nend")
    t = simulate(s, MONITORED, 0, 3, FAIR)
    assert [v.kind for v in t.violations] == ["right-denied"] * 3
