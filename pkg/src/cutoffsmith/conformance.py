"""Concrete lockstep replay: random L traces are mirrored in the cutoff instance.

This is an executable counterpart to the SMT conditions.  For each L trace
we pick a valuation of the violation constants, find an initial C state
related to the initial L state, push every L step through the lockstep and
check gamma after each step.  Whenever the L state violates safety the C
state has to violate it too.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import fol
from .fol import App, Const, Formula, Term, Var
from .frontend import ProtocolAST
from .semantics import CompileContext, Instance, Trace, compile_predicate
from .synthesis import SIM, SynthesisResult, TauRule, c_sort


ORDERED_SORT_HINTS = ("seq", "epoch")


def default_bounds(ast: ProtocolAST, nodes: int) -> Dict[str, int]:
    """Two elements per data sort, three for sequence-number-like sorts."""
    out = {}
    for s in ast.sorts:
        if s.kind == "node":
            out[s.name] = nodes
        elif any(h in s.name.lower() for h in ORDERED_SORT_HINTS):
            out[s.name] = 3
        else:
            out[s.name] = 2
    return out


def with_axioms(ast: ProtocolAST, extra: Sequence[Formula]) -> ProtocolAST:
    return replace(ast, axioms=tuple(ast.axioms) + tuple(extra)) if extra else ast


def cutoff_instance(synth: SynthesisResult, bounds: Optional[Mapping[str, int]] = None) -> Instance:
    c_ast = with_axioms(synth.c_ast, synth.axioms)
    sizes = default_bounds(c_ast, synth.c_node_count)
    sizes.update(bounds or {})
    sizes[c_ast.node_sort] = synth.c_node_count
    return Instance(c_ast, sizes, {c_ast.node_sort: list(synth.sim.c_nodes)})


@dataclass
class StepFailure:
    trial: int
    step: int
    reason: str
    dump: str = ""


@dataclass
class ReplayVerdict:
    ok: bool
    failure: Optional[StepFailure] = None
    l_violation: bool = False


@dataclass
class FuzzReport:
    trials: int
    failures: List[StepFailure] = field(default_factory=list)
    violations_seen: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures


class Replayer:
    def __init__(self, synth: SynthesisResult, l_inst: Instance, c_inst: Instance):
        self.s = synth
        self.L = l_inst
        self.C = c_inst
        ast = synth.ast
        self.node = ast.node_sort
        self.cnode = c_sort(ast, self.node)
        self.c_index = {n: i for i, n in enumerate(synth.sim.c_nodes)}
        sizes = dict(l_inst.sizes)
        sizes[self.cnode] = c_inst.sizes[c_inst.ast.node_sort]
        self.ctx = CompileContext(sizes)
        self.ctx.bind_layout("sL", l_inst.layout, "L.")
        self.ctx.bind_layout("sC", c_inst.layout, "C.")
        self.ctx.tables[SIM] = "SIM"
        for c in synth.vi.constants:
            self.ctx.consts[c.name] = f"VAL[{c.name!r}]"
        for n, i in self.c_index.items():
            self.ctx.consts[n] = str(i)
        self.gamma = [(g.label(), compile_predicate(self.ctx, g.formula, ["sL", "sC", "SIM", "VAL"]))
                      for g in synth.gamma]
        plain = CompileContext(l_inst.sizes)
        plain.bind_layout("s", l_inst.layout)
        for c in synth.vi.constants:
            plain.consts[c.name] = f"VAL[{c.name!r}]"
        self.pre = [compile_predicate(plain, p, ["s", "VAL"]) for p in synth.preconditions]

    # -- valuations
    def witnesses(self, s: int) -> List[Dict[str, int]]:
        """Valuations of the safety variables under which state s violates safety."""
        vs, body = fol.strip_foralls(self.s.ast.safety)
        names = [fol.violation_name(v.name) for v in vs]
        out = []
        for combo in itertools.product(*(range(self.L.sizes[v.sort]) for v in vs)):
            if not self.L.evaluate(body, s, {v.name: x for v, x in zip(vs, combo)}):
                out.append(dict(zip(names, combo)))
        nodes = [c.name for c in self.s.vi.node_constants]
        out.sort(key=lambda w: len(set(w[n] for n in nodes)) != len(nodes))
        return out

    def random_valuation(self, rng: random.Random) -> Dict[str, int]:
        val: Dict[str, int] = {}
        nodes = list(range(self.L.sizes[self.node]))
        k = len(self.s.vi.node_constants)
        picked = rng.sample(nodes, k) if k <= len(nodes) else [rng.choice(nodes) for _ in range(k)]
        for c, x in zip(self.s.vi.node_constants, picked):
            val[c.name] = x
        for c in self.s.vi.data_constants:
            val[c.name] = rng.randrange(self.L.sizes[c.sort])
        return val

    def sim_table(self, val: Mapping[str, int]) -> List[int]:
        sim = self.s.sim
        sink = self.c_index[sim.sink or sim.images[-1]]
        table = [sink] * self.L.sizes[self.node]
        for l, c in zip(sim.violating, sim.images):
            table[val[l]] = self.c_index[c]
        return table

    # -- terms of lockstep rules
    def _eval(self, t: Term, env: Mapping[Var, int], val: Mapping[str, int], SIMT: Sequence[int]) -> int:
        if isinstance(t, Var):
            return env[t]
        if isinstance(t, Const):
            if t.name in self.c_index and t.sort == self.cnode:
                return self.c_index[t.name]
            return val[t.name]
        if isinstance(t, App) and t.func == SIM:
            return SIMT[self._eval(t.args[0], env, val, SIMT)]
        raise ValueError(f"unsupported term {t} in lockstep rule")

    def match(self, label, val: Mapping[str, int]) -> Optional[Tuple[TauRule, Dict[Var, int]]]:
        name, args = label
        for r in self.s.tau:
            if r.action != name:
                continue
            env: Dict[Var, int] = {}
            ok = True
            for a, x in zip(r.args, args):
                if isinstance(a, Var):
                    if env.setdefault(a, x) != x:
                        ok = False
                        break
                elif val[a.name] != x:
                    ok = False
                    break
            if ok:
                return r, env
        return None

    def gamma_failure(self, sL: int, sC: int, SIMT, val) -> Optional[str]:
        for label, fn in self.gamma:
            if not fn(sL, sC, SIMT, val):
                return label
        return None

    def replay(self, tr: Trace, val: Mapping[str, int], trial: int = 0) -> ReplayVerdict:
        SIMT = self.sim_table(val)
        s0 = tr.states[0]
        sC = next((c for c in self.C.initial_states() if self.gamma_failure(s0, c, SIMT, val) is None), None)
        if sC is None:
            return ReplayVerdict(False, StepFailure(trial, 0, "no initial cutoff state is related to the initial L state",
                                                    self.L.dump_trace(Trace([s0], []))))
        c_states, c_labels = [sC], []
        violated = False
        for i, lab in enumerate(tr.labels):
            pre = tr.states[i]
            if not self.L.safe(pre):
                break
            for k, p in enumerate(self.pre):
                if not p(pre, val):
                    return ReplayVerdict(False, StepFailure(trial, i, f"override precondition {k + 1} fails on a reachable L state",
                                                            self._dump(tr, i, c_states, c_labels)))
            m = self.match(lab, val)
            if m is not None:
                r, env = m
                for cname, cargs in r.steps:
                    xs = tuple(self._eval(t, env, val, SIMT) for t in cargs)
                    nxt = self.C.step(sC, cname, xs)
                    if nxt is None:
                        return ReplayVerdict(False, StepFailure(
                            trial, i + 1, f"cutoff action {self.C.show_label((cname, xs))} is blocked",
                            self._dump(tr, i + 1, c_states, c_labels)))
                    sC = nxt
                    c_labels.append((cname, xs))
            c_states.append(sC)
            bad = self.gamma_failure(tr.states[i + 1], sC, SIMT, val)
            if bad is not None:
                return ReplayVerdict(False, StepFailure(trial, i + 1, f"gamma clause {bad} fails",
                                                        self._dump(tr, i + 1, c_states, c_labels)))
            if not self.L.safe(tr.states[i + 1]):
                violated = True
                if self.C.safe(sC):
                    return ReplayVerdict(False, StepFailure(trial, i + 1, "L violates safety but the cutoff state does not",
                                                            self._dump(tr, i + 1, c_states, c_labels)), True)
                break
        return ReplayVerdict(True, None, violated)

    def _dump(self, tr: Trace, upto: int, c_states, c_labels) -> str:
        sub = Trace(tr.states[:upto + 1], tr.labels[:upto])
        out = ["L trace:", self.L.dump_trace(sub), "C trace:"]
        out.append(self.C.dump_trace(Trace(c_states[:1], [])))
        st = c_states[0]
        for j, lab in enumerate(c_labels):
            nxt = self.C.step(st, *lab)
            out.append(f"#step {j + 1}: {self.C.show_label(lab)}")
            out += [f"  {d}" for d in self.C.diff(st, nxt)]
            st = nxt
        return "\n".join(out)


def fuzz(synth: SynthesisResult, nodes: int = 4, trials: int = 1000, length: int = 30, seed: int = 7,
         bounds: Optional[Mapping[str, int]] = None, stop_at_first: bool = True) -> FuzzReport:
    ast = with_axioms(synth.ast, synth.axioms)
    sizes = default_bounds(ast, nodes)
    sizes.update({k: v for k, v in (bounds or {}).items() if k != ast.node_sort})
    l_inst = Instance(ast, sizes)
    c_bounds = {k: v for k, v in sizes.items() if k != ast.node_sort}
    c_inst = cutoff_instance(synth, c_bounds)
    rp = Replayer(synth, l_inst, c_inst)
    rng = random.Random(seed)
    report = FuzzReport(trials)
    for t in range(trials):
        tr = l_inst.random_trace(length, rng)
        bad = next((i for i, s in enumerate(tr.states) if not l_inst.safe(s)), None)
        if bad is not None:
            ws = rp.witnesses(tr.states[bad])
            val = ws[0]
        else:
            val = rp.random_valuation(rng)
        v = rp.replay(tr, val, t)
        if v.l_violation:
            report.violations_seen += 1
        if not v.ok:
            report.failures.append(v.failure)
            if stop_at_first:
                break
    return report
