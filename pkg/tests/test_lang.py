import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fescheck import corpus
from fescheck.lang import ast as A
from fescheck.lang import types as T
from fescheck.lang.bounds import parse_bounds
from fescheck.lang.diagnostics import SpecError
from fescheck.lang.parser import parse_expr, parse_refinement, parse_system, parse_type
from fescheck.lang.printer import pretty, pretty_refinement, pretty_system
from fescheck.lang.typecheck import typecheck
from fescheck.values import rat

BANK = corpus.read("bank.fes")
SMALL = corpus.read("bank-small.bounds")


# --- parser --------------------------------------------------------------------------


def test_bank_parses_with_three_events():
    s = parse_system(BANK)
    assert s.name == "Bank"
    assert [e.name for e in s.events] == ["newLoan", "payRate", "extraPayBack"]
    fair = {e.name: e.fairness for e in s.events}
    assert fair["payRate"] != A.BoolLit(False)
    assert fair["newLoan"] == A.BoolLit(False)
    assert fair["extraPayBack"] == A.BoolLit(False)


def test_minimal_system_has_no_events():
    s = parse_system("system S variables x: BOOL invariant true initial x = false end")
    assert s.events == ()
    assert s.var_names == ("x",)


def test_primed_variable_in_invariant_is_rejected():
    text = BANK.replace("loans \\subseteq Loan", "loans \\subseteq Loan /\\ due' = due")
    with pytest.raises(SpecError) as exc:
        parse_system(text)
    assert "primed variable in non-action context" in str(exc.value)


def test_absent_fairness_defaults_to_false():
    s = parse_system("system S variables x: BOOL invariant true initial x = false\n"
                     "event flip = x' = ~x\nend")
    assert s.events[0].fairness == A.BoolLit(False)


@pytest.mark.parametrize("text", [
    "system S variables x: BOOL x: BOOL invariant true initial true end",
    "system S variables x: BOOL invariant true initial true\n"
    "event e = x' = x\nevent e = x' = x\nend",
    "system S variables x: BOOL invariant true initial true\n"
    "event e(a: BOOL, a: BOOL) = x' = a\nend",
])
def test_duplicate_declarations_are_rejected(text):
    with pytest.raises(SpecError) as exc:
        parse_system(text)
    assert "duplicate" in str(exc.value)


def test_diagnostics_carry_line_and_column():
    with pytest.raises(SpecError) as exc:
        parse_system("system S\n  variables x: BOOL\n  invariant (true\n  initial true end")
    d = exc.value.diagnostics[0]
    assert d.line >= 3 and d.col > 0
    assert str(d).startswith("<input>:")


def test_bank_refinement_maps():
    a = parse_system(corpus.read("bank_right.fes"))
    c = parse_system(corpus.read("bank_conc.fes"))
    r = parse_refinement(corpus.read("bank_ref.fes"), a, c)
    assert r.refines_map == {"newLoan": "newLoan", "payRate": "payRate",
                             "approvePayback": "extraPayBack"}
    assert "askPayback" not in r.refines_map and "rejectPayback" not in r.refines_map
    assert r.witness_map == {"extraPayBack": ["askPayback"]}


def test_degenerate_refinement_is_valid():
    a = parse_system("system A variables x: BOOL invariant true initial true end")
    c = parse_system("system C variables y: BOOL invariant true initial true end")
    r = parse_refinement("refinement R abstract A concrete C gluing true end", a, c)
    assert r.refines_map == {}


def test_refines_entry_without_parameter_prefix_is_rejected():
    a = parse_system(corpus.read("bank_right.fes"))
    c = parse_system(corpus.read("bank_conc.fes"))
    text = corpus.read("bank_ref.fes").replace("approvePayback -> extraPayBack",
                                               "approvePayback -> newLoan")
    with pytest.raises(SpecError) as exc:
        parse_refinement(text, a, c)
    assert "must start with the parameters" in str(exc.value)


def test_unknown_event_in_refines_map_is_rejected():
    a = parse_system(corpus.read("bank_right.fes"))
    c = parse_system(corpus.read("bank_conc.fes"))
    text = corpus.read("bank_ref.fes").replace("approvePayback -> extraPayBack",
                                               "grantPayback -> extraPayBack")
    with pytest.raises(SpecError) as exc:
        parse_refinement(text, a, c)
    assert "unknown concrete event 'grantPayback'" in str(exc.value)


# --- typechecker ----------------------------------------------------------------------


def test_new_loan_instance_count_is_product_of_domains():
    ts = typecheck(parse_system(BANK), parse_bounds(SMALL))
    # Client * Loan * RAT * dur * RAT
    assert ts.instance_count("newLoan") == 1 * 2 * 4 * 2 * 4 == 64
    assert ts.instance_count("payRate") == 2
    assert ts.instance_count("extraPayBack") == 2 * 4


def test_set_of_bool_has_four_values():
    s = parse_system("system S variables x: SET of BOOL invariant true initial x = {} end")
    ts = typecheck(s, parse_bounds(""))
    assert ts.carrier_size(s.variables[0].type) == 4


def test_missing_rat_bound_is_reported():
    with pytest.raises(SpecError) as exc:
        typecheck(parse_system(BANK), parse_bounds("Client = {c1}\nLoan = {l1}\nmaxDebt = 1"))
    assert "unbounded carrier RAT" in str(exc.value)


def test_type_mismatch_is_reported():
    s = parse_system("system S variables x: BOOL invariant x = 1 initial true end")
    with pytest.raises(SpecError):
        typecheck(s, parse_bounds("RAT = {0, 1}"))


def test_unresolved_name_is_reported():
    s = parse_system("system S variables x: BOOL invariant y initial true end")
    with pytest.raises(SpecError) as exc:
        typecheck(s, parse_bounds(""))
    assert "y" in str(exc.value)


def test_explosion_limit_refuses_large_carriers():
    s = parse_system("system S variables x: SET of RAT invariant true initial x = {} end")
    with pytest.raises(SpecError) as exc:
        typecheck(s, parse_bounds("RAT = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}"), explosion_limit=100)
    assert "explosion limit" in str(exc.value)


def test_duplicate_rat_bound_is_rejected():
    with pytest.raises(SpecError):
        parse_bounds("RAT = {0, 1, 1}")


def test_nat_domain_is_nonnegative_integers_of_rat_domain():
    s = parse_system("system S variables x: NAT invariant true initial x = 0 end")
    ts = typecheck(s, parse_bounds("RAT = {-1, 0, 1/2, 1, 2}"))
    assert ts.nat_domain == (rat(0), rat(1), rat(2))


def test_unused_bounds_entry_warns_with_bounds_file():
    from fescheck.load import load_typed
    ts = load_typed(corpus.path("bank.fes"), corpus.path("bank-policy.bounds"))
    assert any("unused bounds entry" in str(w) and "bank-policy.bounds" in str(w)
               for w in ts.warnings)


def test_every_corpus_system_typechecks():
    from fescheck.load import load_typed
    pairs = {
        "bank.fes": "bank-small.bounds", "bank_right.fes": "bank-small.bounds",
        "bank_obl_weak.fes": "bank-small.bounds", "bank_obl_strict.fes": "bank-small.bounds",
        "bank_riskpolicy.fes": "bank-policy.bounds", "bank_conc.fes": "bank-ref.bounds",
        "bank_conc_right.fes": "bank-ref.bounds", "mut_bank_nodebt.fes": "bank-small.bounds",
        "mut_bank_payrate_policy.fes": "bank-small.bounds",
        "mut_conc_overpay.fes": "bank-ref.bounds", "mut_conc_unfair.fes": "bank-ref.bounds",
    }
    for spec, bounds in pairs.items():
        assert load_typed(corpus.path(spec), corpus.path(bounds)).spec.events


def test_parse_type_forms():
    assert parse_type("MAP Loan to RAT") == T.MapT(T.AtomT("Loan"), T.RAT)
    assert parse_type("SET of (Loan * RAT)") == T.SetT(T.PairT(T.AtomT("Loan"), T.RAT))


# --- printer round trip -------------------------------------------------------------------

NAMES = st.sampled_from(["x", "y", "loans", "due", "l1"])


def _binders(children):
    return st.lists(st.builds(A.Binder, st.sampled_from(["a", "b"]), children),
                    min_size=1, max_size=2, unique_by=lambda b: b.name).map(tuple)


def _extend(children):
    return st.one_of(
        st.builds(A.Unary, st.sampled_from(["not", "neg"]), children),
        st.builds(A.Binary, st.sampled_from(sorted(A.BINARY_OPS)), children, children),
        st.builds(A.Pair, children, children),
        st.builds(A.SetDisplay, st.lists(children, max_size=3).map(tuple)),
        st.builds(A.Apply, st.builds(A.Name, NAMES), st.lists(children, min_size=1, max_size=2).map(tuple)),
        st.builds(A.Quant, st.sampled_from(["forall", "exists"]), _binders(children), children),
        st.builds(A.Comprehension, st.sampled_from(["set", "sum"]), children, _binders(children),
                  st.none() | children),
        st.builds(A.FunSpace, children, children),
        st.builds(A.Builtin, st.sampled_from(["dom", "ran", "card"]), children),
    )


EXPRS = st.recursive(
    st.one_of(
        st.builds(A.BoolLit, st.booleans()),
        st.builds(A.NumLit, st.integers(0, 99).map(rat)),
        st.builds(A.Name, NAMES, st.booleans()),
    ),
    _extend, max_leaves=12,
)


@settings(max_examples=400, suppress_health_check=[HealthCheck.too_slow])
@given(EXPRS)
def test_pretty_then_parse_is_identity(e):
    assert parse_expr(pretty(e)) == e


def test_corpus_systems_round_trip():
    for name in ("bank.fes", "bank_right.fes", "bank_conc.fes", "bank_riskpolicy.fes",
                 "bank_obl_weak.fes", "bank_conc_right.fes"):
        s = parse_system(corpus.read(name))
        assert parse_system(pretty_system(s)) == s


def test_corpus_refinement_round_trips():
    a = parse_system(corpus.read("bank_right.fes"))
    c = parse_system(corpus.read("bank_conc.fes"))
    r = parse_refinement(corpus.read("bank_ref.fes"), a, c)
    assert parse_refinement(pretty_refinement(r), a, c) == r


@settings(max_examples=300)
@given(st.binary(max_size=200))
def test_arbitrary_bytes_give_ast_or_diagnostics(data):
    text = data.decode("utf-8", errors="replace")
    try:
        parse_system(text)
    except SpecError as exc:
        assert exc.diagnostics


@settings(max_examples=300)
@given(st.lists(st.sampled_from(
    ["system", "S", "variables", "x", ":", "BOOL", "invariant", "initial", "event", "e", "=",
     "x'", "/\\", "(", ")", "{", "}", "true", "end", "\\in", "forall", "|->", ",", "SUM", "|"]),
    max_size=40))
def test_token_soup_gives_ast_or_diagnostics(tokens):
    try:
        parse_system(" ".join(tokens))
    except SpecError as exc:
        assert exc.diagnostics
