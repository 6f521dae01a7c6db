import json

import pytest

from oracle import BankModel, to_py
from fescheck.explorer import StateLimitError, build_graph, fairness_registry, path_to
from fescheck.lang.bounds import parse_bounds
from fescheck.lang.parser import parse_expr, parse_system
from fescheck.lang.typecheck import typecheck
from fescheck.semantics.system import EventInstance, System, evaluate


def make(text, bounds=""):
    return System(typecheck(parse_system(text), parse_bounds(bounds)))


def edge_set(g):
    py = [to_py(s) for s in g.states]
    return {(py[e.src], (e.label.event,) + tuple(to_py(a) for a in e.label.args), py[e.dst])
            for e in g.edges if e.label is not None}


def test_bank_small_graph_matches_hand_written_model(bank_small_graph):
    g = bank_small_graph
    states, edges, frontier = BankModel(["c1"], ["l1", "l2"], [0, 1, 2, 3], 3, [1, 2]).explore()
    assert {to_py(s) for s in g.states} == states
    assert edge_set(g) == edges
    assert {to_py(g.states[i]) for i in g.frontier} == frontier
    # regression values fixed by the model above
    assert (len(states), len(edges), len(frontier)) == (18521, 39968, 14792)


def test_bank_micro_graph_matches_hand_written_model(bank_micro):
    g = build_graph(bank_micro)
    states, edges, frontier = BankModel(["c1"], ["l1"], [0, 1], 1, [1]).explore()
    assert {to_py(s) for s in g.states} == states
    assert edge_set(g) == edges
    assert {to_py(g.states[i]) for i in g.frontier} == frontier


def test_pay_rate_chain_from_seeded_loan(bank_small):
    vals = dict(clt="{l1 |-> c1}", loans="{l1}", due="{l1 |-> 2}", rate="{l1 |-> 1}",
                maxExtra="{l1 |-> 0}", extra="{l1 |-> 0}")
    s = tuple(evaluate(parse_expr(vals[v])) for v in bank_small.var_names)
    g = build_graph(bank_small, events=["payRate"], init=[s])
    dues = [to_py(dict(st)["l1"]) for st in (x[2] for x in g.states)]
    # due 2 -> 1 -> 0 and on to -1, which leaves the RAT bound and is not expanded
    assert dues[:3] == [2, 1, 0]
    inside = [i for i in range(len(g.states)) if i not in g.frontier]
    assert len(inside) == 3
    assert [str(e.label) for e in g.edges if e.label is not None] == ["payRate(l1)"] * 3


def test_system_without_events_has_only_stutter_loops():
    s = make("system S variables x: BOOL invariant true initial x \\in {true, false} end")
    g = build_graph(s)
    assert len(g.states) == 2 and sorted(g.init) == [0, 1]
    assert all(e.label is None and e.src == e.dst for e in g.edges)


def test_unsatisfiable_init_gives_empty_graph():
    s = make("system S variables x: BOOL invariant true initial x = true /\\ x = false end")
    g = build_graph(s)
    assert g.states == [] and g.init == []


def test_every_state_has_a_stutter_loop_and_edges_are_genuine(bank_micro):
    g = build_graph(bank_micro)
    loops = {e.src for e in g.edges if e.label is None and e.src == e.dst}
    assert loops == set(range(len(g.states)))
    for e in g.edges:
        if e.label is not None:
            assert g.states[e.dst] in bank_micro.successors(g.states[e.src], e.label)


def test_reachable_set_is_closed(bank_micro):
    g = build_graph(bank_micro)
    for i, s in enumerate(g.states):
        if i in g.frontier:
            continue
        for inst in bank_micro.all_instances():
            for t in bank_micro.successors(s, inst):
                assert t in g.index


def test_build_is_deterministic(bank_micro):
    a = json.dumps(build_graph(bank_micro).to_json(), sort_keys=True)
    b = json.dumps(build_graph(bank_micro).to_json(), sort_keys=True)
    assert a == b


def test_state_limit_is_an_error_not_a_truncation(bank_small):
    with pytest.raises(StateLimitError):
        build_graph(bank_small, max_states=100)


def test_state_limit_from_environment(bank_small, monkeypatch):
    monkeypatch.setenv("FESCHECK_STATE_LIMIT", "50")
    with pytest.raises(StateLimitError):
        build_graph(bank_small)


def test_fairness_registry_has_one_entry_per_fair_instance(bank_small):
    reg = fairness_registry(bank_small)
    assert [str(f.inst) for f in reg] == ["payRate(l1)", "payRate(l2)"]


def test_json_export_embeds_full_states(bank_micro):
    j = build_graph(bank_micro).to_json()
    assert j["system"] == "Bank"
    assert set(j["states"][0]) == set(bank_micro.var_names)
    assert all("event" in e for e in j["edges"])


def test_dot_export_elides_stutter_loops_by_default(bank_micro):
    g = build_graph(bank_micro)
    plain = g.to_dot()
    full = g.to_dot(stutter=True)
    assert plain.startswith("digraph")
    assert plain.count(" -> s") == sum(1 for e in g.edges if e.label is not None)
    assert full.count(" -> s") == len(g.edges)


def test_invariant_state_enumeration_small_cases():
    s = make("system S variables x: BOOL invariant true initial true end")
    assert len(s.invariant_states()) == 2
    s = make("system S variables x: BOOL invariant false initial true end")
    assert s.invariant_states() == []


def test_path_to_finds_shortest_run(bank_micro):
    g = build_graph(bank_micro)
    target = max(range(len(g.states)), key=lambda i: i)
    path = path_to(g, target)
    assert g.edges[path[-1]].dst == target
    assert g.edges[path[0]].src in g.init
    for a, b in zip(path, path[1:]):
        assert g.edges[a].dst == g.edges[b].src


def test_stutter_edges_never_carry_labels(bank_micro):
    g = build_graph(bank_micro)
    assert all(isinstance(e.label, (EventInstance, type(None))) for e in g.edges)
