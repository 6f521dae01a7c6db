import json

import pytest

from fescheck import __version__, corpus
from fescheck.cli import main


def c(name):
    return str(corpus.path(name))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def test_check_bank_passes(capsys):
    code, rep = run_json(capsys, "check", c("bank.fes"), "--bounds", c("bank-small.bounds"))
    assert code == 0 and rep["exit_code"] == 0
    assert rep["tool"] == "fescheck" and rep["version"] == __version__
    assert rep["summary"].get("fail", 0) == 0
    assert rep["inputs"]["spec"]["sha256"] and rep["inputs"]["bounds"]["path"]
    assert any("not expanded" in w for w in rep["warnings"])


def test_check_risk_policy_fails_then_passes_when_enforced(capsys):
    args = ["check", c("bank_riskpolicy.fes"), "--bounds", c("bank-policy.bounds")]
    code, rep = run_json(capsys, *args)
    assert code == 1
    ids = {v["id"]: v for v in rep["verdicts"]}
    assert ids["permission:newLoan"]["status"] == "fail"
    assert ids["permission:newLoan"]["witness"]["instance"].startswith("newLoan(")
    code, rep = run_json(capsys, *args, "--enforce-guards")
    assert code == 0


def test_text_output_lists_verdicts_and_exit_code(capsys):
    code, out, _ = run(capsys, "check", c("bank_obl_strict.fes"), "--bounds",
                       c("bank-small.bounds"))
    assert code == 1
    assert "FAIL" in out and "obligation-strict:payRate" in out
    assert "extraPayBack" in out
    assert out.rstrip().endswith("exit 1")


def test_invariant_mode_is_recorded(capsys):
    code, rep = run_json(capsys, "check", c("bank.fes"), "--bounds", c("bank-small.bounds"),
                         "--states", "invariant")
    assert code == 0
    assert rep["flags"]["states"] == "invariant"
    assert {v["mode"] for v in rep["verdicts"] if v["id"] == "init-inv"} == {"invariant"}


def test_missing_file_is_a_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "check", str(tmp_path / "none.fes"))
    assert code == 2 and "cannot read" in err


def test_syntax_error_exits_2_with_position(capsys, tmp_path):
    p = tmp_path / "bad.fes"
    p.write_text("system S variables x: BOOL invariant true initial x = end\n")
    code, _, err = run(capsys, "check", str(p))
    assert code == 2 and "bad.fes:1:" in err


def test_state_limit_exits_2(capsys):
    code, _, err = run(capsys, "check", c("bank.fes"), "--bounds", c("bank-small.bounds"),
                       "--max-states", "10")
    assert code == 2 and "state limit" in err


def test_false_assumption_skips_every_check(capsys, tmp_path):
    p = tmp_path / "s.fes"
    p.write_text("system S constants k: RAT assumption k > 1 variables x: BOOL\n"
                 "invariant true initial x = false\nevent e = x' = ~x\nend\n")
    b = tmp_path / "s.bounds"
    b.write_text("RAT = {0, 1}\nk = 0\n")
    code, rep = run_json(capsys, "check", str(p), "--bounds", str(b))
    assert code == 0
    assert rep["verdicts"] and {v["status"] for v in rep["verdicts"]} == {"skipped"}
    assert any("assumption is false" in w for w in rep["warnings"])


def test_no_initial_states_is_warned(capsys, tmp_path):
    p = tmp_path / "s.fes"
    p.write_text("system S variables x: BOOL invariant true initial x /\\ ~x\n"
                 "event e = x' = ~x\nend\n")
    code, rep = run_json(capsys, "check", str(p))
    assert code == 0
    assert any("no initial states" in w for w in rep["warnings"])


def test_fault_verdict_exits_2(capsys, tmp_path):
    p = tmp_path / "s.fes"
    p.write_text("system S variables f: MAP BOOL to RAT invariant true initial f = {}\n"
                 "event e = f' = f\npermission f(true) = 0\nend\n")
    b = tmp_path / "s.bounds"
    b.write_text("RAT = {0}\n")
    code, rep = run_json(capsys, "check", str(p), "--bounds", str(b))
    assert code == 2 and rep["summary"]["fault"] == 1


def test_refine_passes_and_strong_right_fails(capsys):
    args = ["refine", c("bank_right.fes"), c("bank_conc.fes"), c("bank_ref.fes"),
            "--bounds", c("bank-ref.bounds"), "--runs", "5", "--horizon", "10"]
    code, rep = run_json(capsys, *args)
    assert code == 0
    ids = {v["id"] for v in rep["verdicts"]}
    assert {"BankRight/init-inv", "BankRef/init-inv", "ref-init", "run-translation"} <= ids
    code, rep = run_json(capsys, *args, "--strong-right")
    assert code == 1
    failed = [v["id"] for v in rep["verdicts"] if v["status"] == "fail"]
    assert failed == ["strong-right:extraPayBack"]


def test_refine_mismatched_systems_exit_2(capsys):
    code, _, err = run(capsys, "refine", c("bank.fes"), c("bank_conc.fes"), c("bank_ref.fes"),
                       "--bounds", c("bank-ref.bounds"))
    assert code == 2 and "refinement names" in err


def test_explore_writes_graph_and_dot(capsys, tmp_path):
    g, d = tmp_path / "g.json", tmp_path / "g.dot"
    code, rep = run_json(capsys, "explore", c("bank.fes"), "--bounds", c("bank-micro.bounds"),
                         "--graph", str(g), "--dot", str(d))
    assert code == 0
    art = rep["artifacts"]
    graph = json.loads(g.read_text())
    assert art["states"] == len(graph["states"])
    assert art["edges"] == sum(1 for e in graph["edges"] if e["event"] is not None)
    assert d.read_text().startswith("digraph")


def test_simulate_reports_trace(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, text, _ = run(capsys, "simulate", c("bank_riskpolicy.fes"), "--bounds",
                        c("bank-policy.bounds"), "--seed", "3", "--horizon", "12",
                        "--json", str(out))
    assert code == 0
    rep = json.loads(out.read_text())
    assert len(rep["artifacts"]["trace"]["positions"]) == 12
    assert rep["flags"] == {"mode": "monitored", "seed": 3, "horizon": 12, "scheduler": "fair"}
    assert "exit 0" in text


@pytest.mark.parametrize("horizon", ["0", "-3"])
def test_simulate_rejects_non_positive_horizon(capsys, horizon):
    code, _, err = run(capsys, "simulate", c("bank.fes"), "--bounds", c("bank-micro.bounds"),
                       "--horizon", horizon)
    assert code == 2 and "horizon" in err


def test_jobs_must_be_positive(capsys):
    code, _, _ = run(capsys, "check", c("bank.fes"), "--jobs", "0")
    assert code == 2


def test_json_report_is_reproducible(capsys):
    args = ["check", c("bank_obl_strict.fes"), "--bounds", c("bank-micro.bounds")]
    assert run(capsys, *args, "--format", "json")[1] == run(capsys, *args, "--format", "json")[1]
