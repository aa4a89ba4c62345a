import json
import os
import shutil
import stat
import subprocess
import sys

import pytest

from conftest import corpus_override, corpus_path, needs_solver
from cutoffsmith.cli import main

BAD_SAFETY = """type node @node
relation on(node)
safety exists n: node. on(n)
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@needs_solver
def test_verify_proved(capsys):
    code, out, _ = run(capsys, "verify", corpus_path("leader_election_ring"), "--emit-analysis")
    assert code == 0
    assert "protocol leader_election_ring: proved" in out
    assert "S:\n  leader(*)" in out
    assert "model check: safe, 5 states at {node=2}" in out


@needs_solver
def test_verify_condition_failed(capsys):
    code, out, _ = run(capsys, "verify", corpus_path("two_phase_commit"))
    assert code == 2
    assert "condition-failed" in out and "is sat" in out


@needs_solver
def test_verify_keep_going_reports_every_condition(capsys):
    code, out, _ = run(capsys, "verify", corpus_path("two_phase_commit"), "--keep-going", "--skip-model-check")
    assert code == 2
    assert sum(line.startswith("  step:") for line in out.splitlines()) == 7


@needs_solver
def test_emit_smt_and_synthesis(capsys, tmp_path):
    d = tmp_path / "smt"
    code, out, _ = run(capsys, "verify", corpus_path("basic_kv"), "--override", corpus_override("basic_kv"),
                       "--emit-smt", str(d), "--emit-synthesis", "--skip-model-check")
    assert code == 0
    assert "precondition: " in out
    assert sorted(os.listdir(d)) == ["init.smt2", "safety.smt2", "step_recv_transfer_msg.smt2", "step_reshard.smt2"]


def test_parse_error_location(capsys, tmp_path):
    p = tmp_path / "bad.rml"
    p.write_text(BAD_SAFETY)
    code, _, err = run(capsys, "verify", str(p))
    assert code == 4
    assert err.startswith(f"{p}:3:1: parse: ")


def test_override_error_location(capsys, tmp_path):
    ov = tmp_path / "x.override"
    ov.write_text("[gamma]\n\ndrop nothing\n")
    code, _, err = run(capsys, "verify", corpus_path("sharded_kv"), "--override", str(ov))
    assert code == 4
    assert err.startswith(f"{ov}:3:1: override: ")


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "verify", str(tmp_path / "nope.rml"))
    assert code == 4 and "parse: cannot read" in err


@pytest.mark.parametrize("argv", [
    ["verify"],
    ["frobnicate"],
    ["verify", "x.rml", "--timeout", "soon"],
])
def test_usage_errors_exit_4(capsys, argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 4


def test_bad_bounds(capsys):
    code, _, err = run(capsys, "verify", corpus_path("sharded_kv"), "--bounds", "key")
    assert code == 4 and "bad bound" in err


def test_fuzz_ignores_node_bound_but_rejects_empty_domain(capsys):
    code, _, err = run(capsys, "fuzz", corpus_path("leader_election_ring"), "--trials", "2", "--bounds", "node=0")
    assert code == 0
    code, _, err = run(capsys, "fuzz", corpus_path("sharded_kv"), "--trials", "2", "--bounds", "key=0")
    assert code == 4 and "empty" in err


def test_missing_solver_is_unknown(capsys):
    code, _, err = run(capsys, "verify", corpus_path("sharded_kv"), "--solver-path", "/nonexistent/z3")
    assert code == 3 and "smt: solver '/nonexistent/z3' not found" in err


def test_solver_timeout_is_unknown(capsys, tmp_path):
    exe = tmp_path / "slow.sh"
    exe.write_text("#!/bin/sh\nsleep 5\n")
    exe.chmod(exe.stat().st_mode | stat.S_IEXEC)
    code, out, _ = run(capsys, "verify", corpus_path("leader_election_ring"), "--solver-path", str(exe),
                       "--timeout", "0.2")
    assert code == 3
    assert "protocol leader_election_ring: unknown" in out and "timeout" in out


@needs_solver
def test_state_cap_is_unknown(capsys):
    code, out, _ = run(capsys, "verify", corpus_path("centralized_lock_server"), "--state-cap", "50")
    assert code == 3 and "state cap exceeded" in out


def test_fuzz_command(capsys):
    code, out, _ = run(capsys, "fuzz", corpus_path("leader_election_ring"), "--trials", "20")
    assert code == 0
    assert out.startswith("fuzz: 20 trials, 0 failures")
    code, _, _ = run(capsys, "fuzz", corpus_path("leader_election_ring"), "--nodes", "0")
    assert code == 4


def test_bench_empty_directory(capsys, tmp_path):
    code, out, err = run(capsys, "bench", str(tmp_path))
    assert code == 4 and "no .rml protocols" in err


@needs_solver
def test_bench_json(capsys, tmp_path):
    for stem in ("leader_election_ring", "basic_kv"):
        shutil.copy(corpus_path(stem), tmp_path)
    shutil.copy(corpus_override("basic_kv"), tmp_path)
    (tmp_path / "broken.rml").write_text(BAD_SAFETY)
    out_json = tmp_path / "bench.json"
    code, out, _ = run(capsys, "bench", str(tmp_path), "--json", str(out_json))
    assert code == 4
    rows = json.loads(out_json.read_text())
    assert [r["protocol"] for r in rows] == ["leader_election_ring", "basic_kv", "broken"]
    le, bkv, broken = rows
    assert (le["cutoff"], le["gamma"], le["tau"], le["actions"], le["automated"]) == (2, 2, 2, 2, True)
    assert bkv["override"] == "basic_kv.override" and bkv["automated"] is False
    assert all(c["answer"] == "unsat" for c in bkv["conditions"])
    assert bkv["model_check"]["states"] == 81
    assert "parse" in broken["error"]
    assert "leader_election_ring  2" in out


def test_console_script_entry_point(tmp_path):
    p = tmp_path / "bad.rml"
    p.write_text(BAD_SAFETY)
    proc = subprocess.run([sys.executable, "-m", "cutoffsmith.cli", "verify", str(p)], capture_output=True, text=True)
    assert proc.returncode == 4
    assert ": parse: " in proc.stderr
