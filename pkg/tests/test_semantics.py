import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import system
from oracle import all_valuations, brute_initial, brute_invariant, brute_successors, carrier
from fescheck import corpus
from fescheck.lang.bounds import parse_bounds
from fescheck.lang.parser import parse_expr, parse_system
from fescheck.lang.typecheck import typecheck
from fescheck.semantics.system import EventInstance, System, evaluate
from fescheck.values import EvalFault, format_value, override, rat, sort_key, sorted_values


def ev(text, **env):
    return evaluate(parse_expr(text), {k: (evaluate(parse_expr(v)) if isinstance(v, str) and
                                           v.startswith("{") else v) for k, v in env.items()})


def make(text, bounds=""):
    return System(typecheck(parse_system(text), parse_bounds(bounds)))


def state(sysm, **vals):
    return tuple(evaluate(parse_expr(vals[v])) if isinstance(vals[v], str) else vals[v]
                 for v in sysm.var_names)


# --- values ----------------------------------------------------------------------------

VALUES = st.recursive(
    st.one_of(st.booleans(), st.fractions(max_denominator=5).map(rat),
              st.sampled_from(["a", "b", "c"])),
    lambda ch: st.one_of(st.tuples(ch, ch), st.frozensets(ch, max_size=3)),
    max_leaves=8,
)


@given(st.lists(VALUES, max_size=6))
def test_sort_key_is_a_total_order_consistent_with_equality(vs):
    s = sorted_values(vs)
    assert all(sort_key(a) <= sort_key(b) for a, b in zip(s, s[1:]))
    for a, b in itertools.product(vs, repeat=2):
        if type(a) is type(b) and a == b:
            assert sort_key(a) == sort_key(b)


# well-typed collections never mix booleans and rationals in one position;
# Python would equate True with 1 there
TYPES = st.recursive(
    st.sampled_from(["bool", "rat", "atom"]),
    lambda ch: st.one_of(st.tuples(st.just("pair"), ch, ch), st.tuples(st.just("set"), ch)),
    max_leaves=4,
)


def values_of(t):
    if t == "bool":
        return st.booleans()
    if t == "rat":
        return st.fractions(max_denominator=5).map(rat)
    if t == "atom":
        return st.sampled_from(["a", "b", "c"])
    if t[0] == "pair":
        return st.tuples(values_of(t[1]), values_of(t[2]))
    return st.frozensets(values_of(t[1]), max_size=3)


@given(st.data())
def test_format_is_order_insensitive(data):
    vs = data.draw(st.lists(values_of(data.draw(TYPES)), max_size=5))
    assert format_value(frozenset(vs)) == format_value(frozenset(reversed(vs)))


def test_true_and_one_do_not_share_a_sort_key():
    assert sort_key(True) != sort_key(rat(1))


def test_override_replaces_existing_key():
    assert override(frozenset({("l1", rat(2))}), frozenset({("l1", rat(1))})) == \
        frozenset({("l1", rat(1))})


# --- evaluation ----------------------------------------------------------------------------


def test_override_expression():
    assert ev("{l1 |-> 2} (+) {l1 |-> 1}") == frozenset({("l1", rat(1))})


def test_sum_counts_equal_debts_twice():
    got = ev("SUM{ due(ll) : ll \\in loans | clt(ll) = c }", loans=frozenset({"l1", "l2"}),
             due="{l1 |-> 2, l2 |-> 2}", clt="{l1 |-> c, l2 |-> c}", c="c")
    assert got == rat(4)


def test_application_outside_domain_faults():
    with pytest.raises(EvalFault, match="outside domain"):
        ev("due(l3)", due="{l1 |-> 2}")


def test_division_by_zero_faults():
    with pytest.raises(EvalFault):
        ev("1 / x", x=rat(0))


def test_empty_quantifier_is_true():
    assert ev("forall x \\in {} : false") is True


def test_exact_rational_arithmetic():
    assert ev("1/3 + 1/6") == rat("1/2")


@settings(max_examples=100)
@given(st.permutations(["1", "2", "3", "(1 |-> 2)", "(2 |-> 3)"]))
def test_set_display_is_order_insensitive(elems):
    assert ev("{" + ", ".join(elems) + "}") == ev("{1, 2, 3, 1 |-> 2, 2 |-> 3}")


def test_bank_invariant_holds_on_initial_state(bank_small):
    (s0,) = bank_small.initial_states()
    assert all(v == frozenset() for v in s0)
    assert bank_small.inv(s0)


def test_pay_rate_ba_on_hand_computed_step(bank_small):
    s = state(bank_small, clt="{l1 |-> c1}", loans="{l1}", due="{l1 |-> 2}",
              rate="{l1 |-> 1}", maxExtra="{l1 |-> 0}", extra="{l1 |-> 0}")
    t = s[:2] + (evaluate(parse_expr("{l1 |-> 1}")),) + s[3:]
    ba = bank_small.events["payRate"].decl.ba
    assert bank_small.eval_pred(ba, s, t, EventInstance("payRate", ("l1",)))
    assert bank_small.successors(s, EventInstance("payRate", ("l1",))) == [t]


# --- instances, successors, feasibility ------------------------------------------------------


def test_pay_rate_instances(bank_small):
    assert [str(i) for i in bank_small.instances("payRate")] == ["payRate(l1)", "payRate(l2)"]


def test_parameterless_event_has_one_instance():
    s = make("system S variables x: BOOL invariant true initial x = false\n"
             "event flip = x' = ~x\nend")
    assert s.instances("flip") == [EventInstance("flip", ())]


def test_new_loan_has_64_instances(bank_small):
    assert len(bank_small.instances("newLoan")) == 64


def test_pay_rate_on_empty_state_is_infeasible(bank_small):
    (s0,) = bank_small.initial_states()
    assert bank_small.successors(s0, EventInstance("payRate", ("l1",))) == []
    assert not bank_small.fis(s0, EventInstance("payRate", ("l1",)))


def test_nondeterministic_ba_has_two_successors():
    s = make("system S variables x: BOOL, y: BOOL invariant true initial x = false /\\ y = false\n"
             "event pick = x' \\in {true, false} /\\ y' = y\nend")
    (s0,) = s.initial_states()
    assert sorted(s.successors(s0, EventInstance("pick", ()))) == [(False, False), (True, False)]


def test_extra_pay_back_feasible_on_existing_loan(bank_small):
    s = state(bank_small, clt="{l1 |-> c1}", loans="{l1}", due="{l1 |-> 2}",
              rate="{l1 |-> 1}", maxExtra="{l1 |-> 0}", extra="{l1 |-> 0}")
    assert bank_small.fis(s, EventInstance("extraPayBack", ("l1", rat(1))))


def test_debt_ceiling_decides_new_loan_feasibility():
    s = System(typecheck(parse_system(corpus.read("bank.fes")), parse_bounds(
        "Client = {c1}\nLoan = {l1}\nRAT = {0, 1, 2, 3, 4}\nmaxDebt = 3\nnewLoan.dur = {1}")))
    (s0,) = s.initial_states()
    r = rat
    assert s.fis(s0, EventInstance("newLoan", ("c1", "l1", r(3), r(1), r(0))))
    assert not s.fis(s0, EventInstance("newLoan", ("c1", "l1", r(4), r(1), r(0))))


# --- oracle equivalence -----------------------------------------------------------------------


def test_initial_and_invariant_states_match_enumeration(bank_micro):
    assert set(bank_micro.initial_states()) == brute_initial(bank_micro)
    inv = brute_invariant(bank_micro)
    assert set(bank_micro.invariant_states()) == inv
    # frozen from the enumerator: the empty state plus 16 one-loan states
    assert len(inv) == 17


def test_successors_match_enumeration_on_micro_bounds(bank_micro):
    universe = all_valuations(bank_micro)
    assert len(universe) == 324
    typed = bank_micro.typed
    for s in brute_invariant(bank_micro):
        for inst in bank_micro.all_instances():
            got = bank_micro.successors(s, inst)
            assert len(got) == len(set(got))
            inside = {t for t in got if typed.state_in_carrier(t)}
            assert inside == brute_successors(bank_micro, s, inst, universe)
            ba = bank_micro.events[inst.event].decl.ba
            assert all(bank_micro.eval_pred(ba, s, t, inst) for t in got)
            assert bank_micro.fis(s, inst) == bool(got)


ENUMERATED = """
system Mixed
  variables x: BOOL, y: BOOL, n: RAT
  invariant true
  initial x = false /\\ y = false /\\ n = 0
  event a = (x' \\/ y') /\\ n' <= n + 1 /\\ n' >= n /\\ (x' => ~x)
  event b(k: RAT) = n' = k /\\ x' = y /\\ y' = x
  event c = x' /= y' /\\ n' + n = 1
end
"""


def test_generic_ba_matches_enumeration():
    s = make(ENUMERATED, "RAT = {0, 1/2, 1}")
    universe = all_valuations(s)
    for st_ in universe:
        for inst in s.all_instances():
            got = {t for t in s.successors(st_, inst) if s.typed.state_in_carrier(t)}
            assert got == brute_successors(s, st_, inst, universe), (st_, inst)


def test_oracle_carrier_agrees_with_typechecker(bank_micro):
    for t in bank_micro.var_types:
        assert set(carrier(t, bank_micro.typed)) == set(bank_micro.typed.carrier(t))


# --- typed specs never hit evaluator type errors --------------------------------------------

CORPUS = [("bank.fes", "bank-micro.bounds"), ("bank_right.fes", "bank-micro.bounds"),
          ("bank_conc.fes", "bank-micro.bounds"), ("bank_obl_strict.fes", "bank-micro.bounds")]


@pytest.mark.parametrize("spec,bounds", CORPUS)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_typed_corpus_evaluation_only_faults(spec, bounds, data):
    s = system(spec, bounds)
    pools = [carrier(t, s.typed) for t in s.var_types]
    st0 = tuple(data.draw(st.sampled_from(p)) for p in pools)
    st1 = tuple(data.draw(st.sampled_from(p)) for p in pools)
    preds = [s.spec.invariant, s.spec.initial]
    try:
        for p in preds:
            s.eval_pred(p, st0)
    except EvalFault:
        pass
    for e in s.spec.events:
        inst = data.draw(st.sampled_from(s.instances(e.name)))
        for clause in (e.ba, e.fairness, e.permission, e.prohibition, e.right):
            if clause is None:
                continue
            try:
                s.eval_pred(clause, st0, st1, inst)
            except EvalFault:
                pass
