import os
import stat
from dataclasses import replace

import pytest

from conftest import STEMS, corpus_override, corpus_path, needs_solver
from cutoffsmith import smt
from cutoffsmith.pipeline import synthesize_path


def synth(stem, override=True):
    return synthesize_path(corpus_path(stem), corpus_override(stem) if override else None)


def answers(s):
    return {v.name: v.answer for v in smt.check_all(smt.encode_all(s), timeout=60)}


def balanced(text):
    depth = 0
    in_bar = False
    for ch in text:
        if ch == "|":
            in_bar = not in_bar
        elif not in_bar and ch == "(":
            depth += 1
        elif not in_bar and ch == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0 and not in_bar


def test_condition_names():
    names = [s.name for s in smt.encode_all(synth("sharded_kv"))]
    assert names == ["init", "step:reshard", "step:drop_transfer_msg", "step:retransmit",
                     "step:recv_transfer_msg", "step:send_ack", "step:drop_ack_msg", "step:recv_ack_msg",
                     "step:put", "safety"]


@pytest.mark.parametrize("stem", STEMS)
def test_scripts_are_well_formed_and_deterministic(stem):
    a = [s.text for s in smt.encode_all(synth(stem))]
    b = [s.text for s in smt.encode_all(synth(stem))]
    assert a == b
    for t in a:
        assert balanced(t)
        assert t.count("(check-sat)") == 1


def test_symbol_quoting():
    assert smt.q("L.table") == "|L.table|"
    with pytest.raises(smt.EncodingError):
        smt.q("bad|name")


@needs_solver
@pytest.mark.parametrize("stem", STEMS)
def test_corpus_conditions_are_unsat(stem):
    res = answers(synth(stem))
    assert set(res.values()) == {"unsat"}, res


@needs_solver
def test_dropping_any_sharded_kv_gamma_clause_breaks_a_condition():
    s = synth("sharded_kv")
    assert len(s.gamma) == 5
    for i, g in enumerate(s.gamma):
        mutant = replace(s, gamma=s.gamma[:i] + s.gamma[i + 1:])
        res = answers(mutant)
        assert "sat" in res.values(), g.label()


@needs_solver
def test_basic_kv_needs_its_precondition():
    without = answers(synth("basic_kv", override=False))
    assert without["step:recv_transfer_msg"] == "sat"
    assert set(answers(synth("basic_kv")).values()) == {"unsat"}


@needs_solver
def test_two_phase_commit_needs_its_override():
    assert "sat" in answers(synth("two_phase_commit", override=False)).values()


@needs_solver
def test_sat_answer_carries_a_model():
    s = synth("basic_kv", override=False)
    script = next(x for x in smt.encode_all(s) if x.name == "step:recv_transfer_msg")
    v = smt.run_solver(script, timeout=60)
    assert v.answer == "sat" and not v.holds
    assert "define-fun" in v.detail


def fake_solver(tmp_path, body):
    p = tmp_path / "solver.sh"
    p.write_text("#!/bin/sh\n" + body + "\n")
    p.chmod(p.stat().st_mode | stat.S_IEXEC)
    return [str(p)]


def test_missing_solver_is_unknown(monkeypatch):
    monkeypatch.setenv("CUTOFFSMITH_SOLVER", "/nonexistent/solver")
    assert smt.find_solver() is None
    monkeypatch.setenv("PATH", "/nonexistent")
    monkeypatch.delenv("CUTOFFSMITH_SOLVER")
    v = smt.run_solver("(check-sat)")
    assert v.answer == "unknown" and "no SMT solver" in v.detail


def test_solver_timeout_is_unknown(tmp_path):
    v = smt.run_solver("(check-sat)", fake_solver(tmp_path, "sleep 5"), timeout=0.3)
    assert v.answer == "unknown" and "timeout" in v.detail


def test_solver_garbage_is_unknown(tmp_path):
    v = smt.run_solver("(check-sat)", fake_solver(tmp_path, "echo oops; exit 1"))
    assert (v.answer, v.detail) == ("unknown", "oops")
    v = smt.run_solver("(check-sat)", fake_solver(tmp_path, "echo unknown"))
    assert v.answer == "unknown"


def test_solver_from_environment(tmp_path, monkeypatch):
    cmd = fake_solver(tmp_path, "echo unsat")
    monkeypatch.setenv("CUTOFFSMITH_SOLVER", cmd[0])
    assert smt.find_solver() == cmd
    assert smt.run_solver("(check-sat)").holds


def test_write_scripts(tmp_path):
    paths = smt.write_scripts(smt.encode_all(synth("leader_election_ring")), str(tmp_path / "out"))
    assert sorted(os.path.basename(p) for p in paths) == \
        ["init.smt2", "safety.smt2", "step_accept.smt2", "step_hand_off.smt2"]
