import os
import subprocess
import sys

import pytest

from conftest import STEMS, corpus_override, corpus_path
from cutoffsmith.fol import Var
from cutoffsmith.frontend import ParseError, parse_protocol, preprocess
from cutoffsmith.pipeline import synthesize_path
from cutoffsmith.synthesis import SynthesisError, parse_override, synthesize

# frozen output of the automated synthesis for sharded KV
SKV_DUMP = """\
protocol: sharded_kv
cutoff: 2
cutoff nodes: a_C, b_C
violation: a_L: node, b_L: node, K_L: key, v1_L: value, v2_L: value
sim: collapse
  sim(a_L) = a_C
  sim(b_L) = b_C
  sim(n) = b_C for every other node n
gamma (5):
  [synthesized] ~seqnum_recvd(*): forall v1: seqnum. ~L.seqnum_recvd(v1) -> ~C.seqnum_recvd(v1)
  [synthesized] ~seqnum_sent(*): forall v1: seqnum. ~L.seqnum_sent(v1) -> ~C.seqnum_sent(v1)
  [synthesized] table(*,K_L,*): forall v1: node, v2: value. L.table(v1, K_L, v2) -> C.table(sim(v1), K_L, v2)
  [synthesized] transfer_msg(*,*,K_L,*,*): forall v1: node, v2: node, v3: value, v4: seqnum. L.transfer_msg(v1, v2, K_L, v3, v4) -> C.transfer_msg(sim(v1), sim(v2), K_L, v3, v4)
  [synthesized] unacked(*,*,K_L,*,*): forall v1: node, v2: node, v3: value, v4: seqnum. L.unacked(v1, v2, K_L, v3, v4) -> C.unacked(sim(v1), sim(v2), K_L, v3, v4)
tau (4/8):
  [synthesized] put(v1, K_L, v2) => put(sim(v1), K_L, v2)
  [synthesized] recv_transfer_msg(v1, v2, K_L, v3, v4) => recv_transfer_msg(sim(v1), sim(v2), K_L, v3, v4)
  [synthesized] reshard(v1, v2, K_L, v3, v4) => reshard(sim(v1), sim(v2), K_L, v3, v4)
  [synthesized] retransmit(v1, v2, K_L, v3, v4) => retransmit(sim(v1), sim(v2), K_L, v3, v4)
stutter: drop_transfer_msg, send_ack, drop_ack_msg, recv_ack_msg
"""

# cutoff, |gamma| (None when not pinned), simulated actions, total actions, automated
TABLE = {
    "sharded_kv": (2, 5, 4, 8, True),
    "leader_election_ring": (2, 2, 2, 2, True),
    "centralized_lock_server": (2, None, 5, 5, True),
    "ricart_agrawala": (2, None, 4, 4, True),
    "basic_kv": (2, None, 2, 2, False),
    "two_phase_commit": (3, None, 7, 7, False),
    "distributed_lock_server": (2, None, 2, 2, False),
}


def synth(stem, override=True):
    return synthesize_path(corpus_path(stem), corpus_override(stem) if override else None)


def test_sharded_kv_golden_dump():
    assert synth("sharded_kv").dump() == SKV_DUMP


@pytest.mark.parametrize("stem", STEMS)
def test_table_row(stem):
    r = synth(stem)
    size, gamma, sim, total, automated = TABLE[stem]
    assert r.size == size
    if gamma is not None:
        assert len(r.gamma) == gamma
    assert (len(r.simulated_actions), len(r.ast.actions)) == (sim, total)
    assert (not r.overridden) == automated
    assert r.size == len(r.sim.c_nodes)


@pytest.mark.parametrize("stem", STEMS)
def test_dumps_are_byte_identical_across_processes(stem):
    code = ("import sys; sys.path.insert(0, 'tests'); from conftest import *; "
            "from cutoffsmith.pipeline import synthesize_path; "
            f"sys.stdout.write(synthesize_path(corpus_path({stem!r}), corpus_override({stem!r})).dump())")
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    outs = []
    for seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        outs.append(subprocess.run([sys.executable, "-c", code], cwd=root, env=env, capture_output=True,
                                   check=True).stdout)
    assert outs[0] == outs[1]
    assert outs[0].decode() == synth(stem).dump()


def test_stutter_partition():
    r = synth("sharded_kv")
    assert set(r.simulated_actions) | set(r.stutter_actions) == {a.name for a in r.ast.actions}
    assert not set(r.simulated_actions) & set(r.stutter_actions)


def test_sim_schemes():
    ra = synth("ricart_agrawala")
    assert ra.sim.scheme == "exact" and ra.sim.sink is None
    skv = synth("sharded_kv")
    assert skv.sim.scheme == "collapse" and skv.sim.sink == "b_C"
    for r in (ra, skv):
        assert len(set(r.sim.images)) == len(r.sim.violating)


def test_two_phase_override_drops_and_extends():
    r = synth("two_phase_commit")
    labels = [g.label() for g in r.gamma]
    for dropped in ("alive(*)", "~alive(*)", "voted_no(*)", "~voted_yes(*)"):
        assert dropped not in labels
    assert "override:18" in labels
    assert r.sim.c_nodes[-1] == "f_C"
    # the catch-all skip rules replace the synthesized vote_no/fail rules
    assert [str(t) for t in r.tau if t.action == "fail"] == \
        ["fail(n1_L) => fail(n1_C)", "fail(n2_L) => fail(n2_C)", "fail(n) => skip"]
    assert all(t.provenance == "override" for t in r.tau if t.action in ("go_commit", "go_abort"))


def test_two_phase_without_override_has_two_nodes():
    r = synth("two_phase_commit", override=False)
    assert r.size == 2 and not r.overridden


MINI = """type node @node
relation on(node)
init forall n: node. ~on(n)
action flip(n: node) { on(n) := true }
safety forall n: node. on(n) | ~on(n)
"""


def mini_override(text):
    return synthesize(preprocess(parse_protocol(MINI, "mini.rml")), parse_override(text, "x.override"))


@pytest.mark.parametrize("text,line,msg", [
    ("[bogus]\n", 1, "unknown override section"),
    ("on(n)\n", 1, "before any section"),
    ("[extra-nodes]\n\n1bad\n", 3, "bad node name"),
    ("[gamma]\ndrop nothing(*)\n", 2, "no gamma clause labelled"),
    ("[axioms]\nforall n: node. on(n)\n", 2, "static symbols"),
    ("[tau]\nzap(n) => skip\n", 2, "unknown action"),
])
def test_override_errors(text, line, msg):
    with pytest.raises(ParseError, match=msg) as e:
        mini_override(text)
    assert e.value.line == line


def test_override_continuation_lines_and_skip():
    spec = parse_override("[tau]\nflip(n) =>\n    skip  # comment\n")
    assert spec.items("tau") == [(2, "flip(n) => skip")]
    r = mini_override("[tau]\nflip(n) => skip\n")
    assert r.simulated_actions == [] and r.tau[0].steps == ()
    assert r.tau[0].args == (Var("n", "node"),)


def test_safety_without_nodes_has_no_cutoff():
    src = MINI.replace("safety forall n: node. on(n) | ~on(n)", "safety true")
    with pytest.raises(SynthesisError, match="no nodes"):
        synthesize(preprocess(parse_protocol(src, "mini.rml")))
