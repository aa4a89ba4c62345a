import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cutoffsmith import pipeline, smt
from cutoffsmith.frontend import load_protocol, preprocess

CORPUS = pipeline.CORPUS_DIR
STEMS = pipeline.TABLE_ORDER


def corpus_path(stem):
    return os.path.join(CORPUS, stem + ".rml")


def corpus_override(stem):
    p = os.path.join(CORPUS, stem + ".override")
    return p if os.path.exists(p) else None


needs_solver = pytest.mark.skipif(smt.find_solver() is None, reason="no SMT solver on PATH")


@pytest.fixture(scope="session")
def skv_ast():
    return load_protocol(corpus_path("sharded_kv"))


@pytest.fixture(scope="session")
def skv_meta(skv_ast):
    return preprocess(skv_ast)


def skv_source():
    with open(corpus_path("sharded_kv"), encoding="utf-8") as fh:
        return fh.read()


def skv_without_recvd_guard():
    """Sharded KV with ~seqnum_recvd(s) removed from recv_transfer_msg's guard."""
    from cutoffsmith.frontend import parse_protocol
    src = skv_source()
    guard = "require transfer_msg(src, dst, k, v, s) & ~seqnum_recvd(s)"
    assert src.count(guard) == 1
    return parse_protocol(src.replace(guard, "require transfer_msg(src, dst, k, v, s)"), "sharded_kv_mutant.rml")


# reachable cutoff states, counted by the naive interpreter in tests/oracle.py
ORACLE_STATES = {
    "leader_election_ring": 5,
    "ricart_agrawala": 20,
    "two_phase_commit": 1792,
    "basic_kv": 81,
    "distributed_lock_server": 114,
    "centralized_lock_server": 12960,
}

# sharded KV cutoff at {node: 2, key: 1, value: 2, seqnum: 3}, same oracle
SKV_BOUNDS = {"node": 2, "key": 1, "value": 2, "seqnum": 3}
SKV_CUTOFF_STATES = 322813


# ---------------------------------------------------------------- acceptance summary

ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "call" or rep.failed or rep.skipped:
        note = getattr(item, "criterion_note", "")
        if rep.failed:
            note = (note + "; " if note else "") + str(rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash") else rep.longrepr).splitlines()[0]
        verdict = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        ACCEPTANCE[m.args[0]] = (m.args[1], verdict, note)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, verdict, note = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n} {verdict}: {title}" + (f" ({note})" if note else ""))
