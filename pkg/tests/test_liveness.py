import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graph, system
from graphs import LABELS, Table, random_graph, random_table
from oracle import lasso_violation
from fescheck.liveness import (ANY, FALSE, TRUE, EventAtom, LivenessGraph, Not, Or, StatePred,
                               check_leadsto, check_obligation, liveness_graph,
                               obligation_formulas, validate_lasso)
from fescheck.semantics.system import EventInstance
from fescheck.verdict import FAIL, PASS

A_ = EventInstance("a", ())


def oracle(g, F, G):
    return not lasso_violation(g.n, g.init, g.edges, g.fair, F.table(g), G.table(g))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_engine_agrees_with_lasso_oracle(seed):
    rng = random.Random(seed)
    g = random_graph(rng)
    F, G = random_table(rng, g), random_table(rng, g)
    res = check_leadsto(g, F, G)
    assert res.passed == oracle(g, F, G)
    if not res.passed:
        assert validate_lasso(g, F, G, res.lasso)


def test_false_leads_to_anything():
    rng = random.Random(7)
    for _ in range(50):
        g = random_graph(rng)
        assert check_leadsto(g, FALSE, random_table(rng, g)).passed


def test_formula_leads_to_itself():
    rng = random.Random(8)
    for _ in range(50):
        g = random_graph(rng)
        F = random_table(rng, g)
        assert check_leadsto(g, F, F).passed


def two_states(fair_a: bool) -> LivenessGraph:
    edges = [(0, None, 0), (0, A_, 1), (1, None, 1)]
    return LivenessGraph(2, [0], edges, [(A_, [fair_a, False])])


def test_fair_step_is_eventually_taken():
    at0 = StatePred(lambda s: s == 0)
    assert check_leadsto(two_states(True), at0, EventAtom("a")).passed


def test_unfair_step_may_be_postponed_forever():
    at0 = StatePred(lambda s: s == 0)
    g = two_states(False)
    res = check_leadsto(g, at0, EventAtom("a"))
    assert not res.passed
    assert validate_lasso(g, at0, EventAtom("a"), res.lasso)
    assert [g.edges[k] for k in res.lasso.cycle] == [(0, None, 0)]


def test_stutter_never_matches_events_or_discharges_fairness():
    g = LivenessGraph(1, [0], [(0, None, 0)], [(A_, [True])])
    # the only run stutters forever while a stays fair: no fair run exists
    assert check_leadsto(g, TRUE, FALSE).passed
    assert EventAtom("a").table(g) == [False]


def test_event_atom_matches_by_prefix_and_wildcard():
    inst = EventInstance("e", ("x", "y"))
    g = LivenessGraph(1, [0], [(0, inst, 0)])
    assert EventAtom("e", ("x",)).table(g) == [True]
    assert EventAtom("e", (ANY, "y")).table(g) == [True]
    assert EventAtom("e", ("y",)).table(g) == [False]
    assert EventAtom("f").table(g) == [False]


def test_dead_ends_are_not_runs():
    g = LivenessGraph(2, [0], [(0, A_, 1)])
    assert check_leadsto(g, TRUE, FALSE).passed


# --- semantic forms of the proof rules -----------------------------------------------------


def rule_instances(seed, count):
    rng = random.Random(seed)
    for _ in range(count):
        g = random_graph(rng)
        yield g, random_table(rng, g), random_table(rng, g), random_table(rng, g)


def test_refl_rule():
    for g, F, G, _ in rule_instances(11, 200):
        assert check_leadsto(g, F, F | G).passed


def test_trans_rule():
    for g, F, G, H in rule_instances(12, 200):
        if check_leadsto(g, F, G).passed and check_leadsto(g, G, H).passed:
            assert check_leadsto(g, F, H).passed


def test_disj_rule():
    for g, F, G, H in rule_instances(13, 200):
        if check_leadsto(g, F, H).passed and check_leadsto(g, G, H).passed:
            assert check_leadsto(g, F | G, H).passed


# --- obligations -------------------------------------------------------------------------


def test_weak_obligation_on_pay_rate_holds():
    s = system("bank_obl_weak.fes", "bank-small.bounds")
    v = check_obligation(s, graph("bank_obl_weak.fes", "bank-small.bounds"), "payRate")
    assert v.id == "obligation-weak:payRate"
    assert v.status == PASS


def test_strict_obligation_fails_when_extra_payment_clears_debt():
    s = system("bank_obl_strict.fes", "bank-small.bounds")
    tg = graph("bank_obl_strict.fes", "bank-small.bounds")
    v = check_obligation(s, tg, "payRate")
    assert v.status == FAIL and v.lasso is not None
    steps = [p[1] for p in v.lasso.stem + v.lasso.cycle]
    assert any(step.startswith("extraPayBack") for step in steps)
    # replay the raw lasso for the first failing instance
    g = liveness_graph(tg)
    for inst in s.instances("payRate"):
        F, G = obligation_formulas(s, inst, "strict")
        res = check_leadsto(g, F, G)
        if not res.passed:
            assert validate_lasso(g, F, G, res.lasso)
            break
    else:
        pytest.fail("no failing instance")


def test_false_obligation_holds_in_both_modes():
    from fescheck.lang.bounds import parse_bounds
    from fescheck.lang.parser import parse_system
    from fescheck.lang.typecheck import typecheck
    from fescheck.explorer import build_graph
    from fescheck.semantics.system import System
    for mode in ("strict", "weak"):
        s = System(typecheck(parse_system(
            "system S variables x: BOOL invariant true initial x = false\n"
            f"event e = x' = ~x\nobligation {mode} false\nend"), parse_bounds("")))
        assert check_obligation(s, build_graph(s), "e").status == PASS


def test_liveness_graph_turns_frontier_into_dead_ends(bank_micro):
    from fescheck.explorer import build_graph
    tg = build_graph(bank_micro)
    g = liveness_graph(tg)
    for u, label, v in g.edges:
        assert not (label is None and u in tg.frontier)
    for _, fair_at in g.fair:
        assert not any(fair_at[i] for i in tg.frontier)


def test_not_and_or_tables():
    g = LivenessGraph(1, [0], [(0, None, 0), (0, A_, 0)])
    t = Table([True, False])
    assert Not(t).table(g) == [False, True]
    assert Or(t, Not(t)).table(g) == [True, True]
    assert LABELS[0] == A_
