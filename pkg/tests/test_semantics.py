import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import ORACLE_STATES, SKV_BOUNDS, STEMS, corpus_override, corpus_path, skv_without_recvd_guard
from cutoffsmith import pipeline
from cutoffsmith.conformance import default_bounds
from cutoffsmith.frontend import load_protocol
from cutoffsmith.semantics import DomainError, Instance, StateCapExceeded, Trace, parse_bounds
from oracle import Naive, from_naive, to_naive

_instances = {}


def l_instance(stem, nodes=3):
    key = (stem, nodes)
    if key not in _instances:
        ast = load_protocol(corpus_path(stem))
        _instances[key] = Instance(ast, default_bounds(ast, nodes))
    return _instances[key]


@pytest.mark.parametrize("stem", sorted(ORACLE_STATES))
def test_cutoff_reachable_counts_match_oracle(stem):
    synth = pipeline.synthesize_path(corpus_path(stem), corpus_override(stem))
    mc = pipeline.model_check(synth)
    assert mc.safe is True
    assert mc.states == ORACLE_STATES[stem]


@pytest.mark.parametrize("stem,nodes", [("leader_election_ring", 3), ("ricart_agrawala", 2),
                                        ("two_phase_commit", 2), ("distributed_lock_server", 2)])
def test_initial_states_match_brute_force(stem, nodes):
    ast = load_protocol(corpus_path(stem))
    sizes = default_bounds(ast, nodes)
    if "epoch" in sizes:
        sizes["epoch"] = 2
    inst = Instance(ast, sizes)
    naive = Naive(ast, sizes)
    expect = sorted(from_naive(inst, s) for s in naive.initial())
    assert sorted(inst.initial_states()) == expect


@settings(max_examples=40, deadline=None)
@given(stem=st.sampled_from(STEMS), seed=st.integers(0, 10 ** 6), pick=st.integers(0, 10 ** 6))
def test_step_matches_naive_interpreter(stem, seed, pick):
    inst = l_instance(stem)
    naive = Naive(inst.ast, inst.sizes)
    tr = inst.random_trace(12, seed)
    s = tr.states[pick % len(tr.states)]
    st_ = to_naive(inst, s)
    assert inst.safe(s) == naive.safe(st_)
    expect = {}
    for t, lab in naive.successors(st_):
        expect[lab] = from_naive(inst, t)
    got = dict((lab, t) for t, lab in inst.successors(s))
    assert got == expect
    for lab, t in expect.items():
        assert inst.step(s, *lab) == t


@settings(max_examples=25, deadline=None)
@given(stem=st.sampled_from(STEMS), seed=st.integers(0, 10 ** 6))
def test_diff_lists_exactly_the_changed_atoms(stem, seed):
    inst = l_instance(stem)
    tr = inst.random_trace(10, seed)
    assert inst.validate_trace(tr)
    for a, b in zip(tr.states, tr.states[1:]):
        before, after = inst.atoms(a), inst.atoms(b)
        changed = {k for k in before if before[k] != after[k]}
        lines = inst.diff(a, b)
        assert len(lines) == len(changed)
        for line in lines:
            key = line[1:] if line[0] in "+-" else line.split(" = ")[0]
            assert key in changed


def test_random_trace_is_deterministic():
    inst = l_instance("sharded_kv")
    a = inst.random_trace(30, 7)
    b = inst.random_trace(30, random.Random(7))
    assert a == b
    assert inst.validate_trace(a)


def test_validate_trace_rejects_tampering():
    inst = l_instance("sharded_kv")
    tr = inst.random_trace(5, 3)
    assert len(tr) == 5
    bad = Trace(list(tr.states), list(tr.labels))
    bad.states[-1] ^= 1
    assert not inst.validate_trace(bad)


def test_dump_format():
    inst = l_instance("leader_election_ring")
    tr = inst.random_trace(3, 1)
    lines = inst.dump_trace(tr).splitlines()
    assert lines[0].startswith("#init: ")
    steps = [x for x in lines if x.startswith("#step")]
    assert steps == [f"#step {i + 1}: {inst.show_label(l)}" for i, l in enumerate(tr.labels)]
    assert all(x.startswith("  ") for x in lines[1:] if not x.startswith("#"))


def test_dropping_recvd_guard_gives_counterexample():
    inst = Instance(skv_without_recvd_guard(), SKV_BOUNDS)
    r = inst.model_check()
    assert r.safe is False
    assert inst.validate_trace(r.trace)
    assert not inst.safe(r.trace.states[-1])
    assert all(inst.safe(s) for s in r.trace.states[:-1])
    # the shortest violation re-delivers a transfer after the key moved on
    names = [lab[0] for lab in r.trace.labels]
    assert names.count("recv_transfer_msg") >= 2


def test_state_cap_is_enforced():
    inst = l_instance("centralized_lock_server", 2)
    with pytest.raises(StateCapExceeded):
        inst.model_check(cap=100)


def test_missing_or_empty_domain():
    ast = load_protocol(corpus_path("sharded_kv"))
    with pytest.raises(DomainError, match="no domain size for sort 'value'"):
        Instance(ast, {"node": 2, "key": 1, "seqnum": 3})
    with pytest.raises(DomainError, match="empty"):
        Instance(ast, {**SKV_BOUNDS, "key": 0})


def test_parse_bounds():
    assert parse_bounds(["key=1", "seqnum = 3"]) == {"key": 1, "seqnum": 3}
    for bad in ("key", "key=", "=2", "key=x"):
        with pytest.raises(ValueError):
            parse_bounds([bad])
