"""One test per acceptance criterion; the terminal summary prints a pass/fail line for each."""

import time
from dataclasses import replace

import pytest

import test_analysis
import test_semantics
import test_synthesis
from conftest import (SKV_BOUNDS, SKV_CUTOFF_STATES, STEMS, corpus_override, corpus_path, needs_solver,
                      skv_without_recvd_guard)
from cutoffsmith import smt
from cutoffsmith.analysis import initial_clauses, static_analysis
from cutoffsmith.fol import STAR
from cutoffsmith.pipeline import CORPUS_DIR, PROVED, Config, bench, fuzz_conformance, model_check, synthesize_path
from cutoffsmith.semantics import Instance

TABLE2 = {
    # cutoff, simulated/total actions, automated, |gamma| where pinned
    "sharded_kv": (2, (4, 8), True, 5),
    "leader_election_ring": (2, (2, 2), True, 2),
    "centralized_lock_server": (2, (5, 5), True, None),
    "ricart_agrawala": (2, (4, 4), True, None),
    "basic_kv": (2, (2, 2), False, None),
    "two_phase_commit": (3, (7, 7), False, None),
    "distributed_lock_server": (2, (2, 2), False, None),
}


def note(request, text):
    request.node.criterion_note = text


def answers(s):
    return {v.name: v.answer for v in smt.check_all(smt.encode_all(s), timeout=60)}


@pytest.mark.criterion(1, "sharded-KV static analysis equals the golden S and A")
def test_criterion_1_golden_analysis(request, skv_meta):
    t = time.perf_counter()
    s_init, _, _ = initial_clauses(skv_meta)
    res = static_analysis(skv_meta, s_init)
    elapsed = time.perf_counter() - t
    note(request, f"{len(res.S)} clauses, {len(res.A)} invocations, {elapsed:.3f}s")
    assert set(res.S) == test_analysis.GOLDEN_S
    assert {str(a) for a in res.A} == test_analysis.GOLDEN_A
    assert elapsed < 1.0


@pytest.mark.criterion(2, "worked examples of the analysis primitives")
def test_criterion_2_worked_examples(request, skv_meta):
    import test_frontend
    test_frontend.TestPreprocess().test_reshard_metadata(skv_meta)
    test_analysis.test_pattern_match_examples()
    test_analysis.test_guards_for_reshard(skv_meta)
    test_analysis.test_actions_that_set_unacked(skv_meta)


@needs_solver
@pytest.mark.criterion(3, "corpus table: cutoffs, lockstep sizes, automation, all conditions unsat")
def test_criterion_3_table(request):
    t = time.perf_counter()
    rows = bench(CORPUS_DIR, Config(skip_model_check=True, timeout=60))
    elapsed = time.perf_counter() - t
    note(request, f"{len(rows)} protocols in {elapsed:.1f}s")
    assert [r.error for r in rows] == [""] * len(STEMS)
    reps = {r.report.protocol: r.report for r in rows}
    assert list(reps) == list(STEMS)
    for stem, (size, tau, automated, gamma) in TABLE2.items():
        rep = reps[stem]
        assert rep.cutoff == size, stem
        assert (rep.tau, rep.actions) == tau, stem
        assert rep.automated == automated, stem
        if gamma is not None:
            assert rep.gamma == gamma, stem
        assert rep.verdicts and all(v.answer == "unsat" for v in rep.verdicts), stem
        assert rep.status == PROVED, stem
    assert elapsed < 60


@pytest.mark.criterion(4, "every cutoff instance is safe by exhaustive search")
def test_criterion_4_model_check(request):
    parts = []
    for stem in STEMS:
        synth = synthesize_path(corpus_path(stem), corpus_override(stem))
        bounds = SKV_BOUNDS if stem == "sharded_kv" else None
        mc = model_check(synth, bounds)
        assert mc.safe is True, (stem, mc.note)
        if stem == "sharded_kv":
            assert mc.bounds == SKV_BOUNDS
            assert mc.states == SKV_CUTOFF_STATES
            assert mc.seconds < 30
            parts.append(f"sharded_kv {mc.states} states in {mc.seconds:.1f}s")
    note(request, ", ".join(parts))


@needs_solver
@pytest.mark.criterion(5, "mutations are caught by the model checker and the conditions")
def test_criterion_5_mutations(request):
    # (a)
    r = Instance(skv_without_recvd_guard(), SKV_BOUNDS).model_check()
    assert r.safe is False and r.trace is not None
    # (b)
    s = synthesize_path(corpus_path("sharded_kv"))
    for i, g in enumerate(s.gamma):
        assert "sat" in answers(replace(s, gamma=s.gamma[:i] + s.gamma[i + 1:])).values(), g.label()
    # (c)
    without = answers(synthesize_path(corpus_path("basic_kv")))
    assert any(k.startswith("step:") and v == "sat" for k, v in without.items())
    assert set(answers(synthesize_path(corpus_path("basic_kv"), corpus_override("basic_kv"))).values()) == {"unsat"}
    note(request, f"counterexample of {len(r.trace)} steps; {len(s.gamma)} gamma drops all sat")


@pytest.mark.criterion(6, "1000 replayed traces per protocol with 0 failures")
def test_criterion_6_fuzz(request):
    slowest = 0.0
    for stem in STEMS:
        t = time.perf_counter()
        rep = fuzz_conformance(corpus_path(stem), corpus_override(stem), nodes=4, trials=1000, seed=7, length=30)
        elapsed = time.perf_counter() - t
        assert rep.ok, (stem, rep.failures[0].reason)
        assert elapsed < 120, stem
        slowest = max(slowest, elapsed)
    note(request, f"slowest protocol {slowest:.1f}s")


@pytest.mark.criterion(7, "property suites: subsumption, analysis soundness, frame diffing, deterministic dumps")
def test_criterion_7_properties(request):
    test_analysis.test_clause_subsumption_equivalence()
    test_analysis.test_invocation_subsumption_equivalence()
    for stem in STEMS:
        assert test_analysis.soundness_violation(stem) is None, stem
    test_semantics.test_step_matches_naive_interpreter()
    test_semantics.test_diff_lists_exactly_the_changed_atoms()
    for stem in STEMS:
        test_synthesis.test_dumps_are_byte_identical_across_processes(stem)
