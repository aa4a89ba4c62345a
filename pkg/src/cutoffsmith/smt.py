"""SMT-LIB2 encodings of the cutoff conditions and a solver process driver.

Each condition becomes one script whose unsatisfiability means the
condition holds:

* ``init``: every initial L state has an initial C state related by gamma.
  The C state is built constructively from the L state (see ``_witness``).
* ``step:<action>``: gamma, safety of L and the L transition, followed by
  the C transition(s) the lockstep prescribes, preserve gamma and every
  prescribed C guard holds.
* ``safety``: gamma and an L violation at the violation constants force a C
  violation.

Vocabularies are prefixed ``L.``, ``L+.`` (post state), ``C.``, ``C+.`` and
``C#i.j.`` (intermediate states of a multi-step lockstep rule).
"""

from __future__ import annotations

import os
import shutil
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from . import fol
from .fol import (And, App, BoolLit, Const, Eq, Exists, Forall, Formula, Iff, Implies, Not, Or, Rel, Term, Var)
from .frontend import ActionDecl, ProtocolAST, SymbolDecl, Update
from .synthesis import SIM, GammaClause, SynthesisResult, TauRule, c_sort

DEFAULT_TIMEOUT = 10.0


class EncodingError(ValueError):
    pass


def q(name: str) -> str:
    """Quote an identifier as an SMT-LIB symbol."""
    if "|" in name or "\\" in name:
        raise EncodingError(f"cannot quote identifier {name!r}")
    return f"|{name}|"


# ---------------------------------------------------------------- formula printing

def term_smt(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return q(t.name)
    if isinstance(t, App):
        if not t.args:
            return q(t.func)
        return f"({q(t.func)} {' '.join(term_smt(a) for a in t.args)})"
    raise TypeError(t)


def formula_smt(f: Formula) -> str:
    if isinstance(f, BoolLit):
        return "true" if f.value else "false"
    if isinstance(f, Rel):
        if not f.args:
            return q(f.name)
        return f"({q(f.name)} {' '.join(term_smt(a) for a in f.args)})"
    if isinstance(f, Eq):
        return f"(= {term_smt(f.left)} {term_smt(f.right)})"
    if isinstance(f, Not):
        return f"(not {formula_smt(f.body)})"
    if isinstance(f, And):
        if not f.items:
            return "true"
        return f"(and {' '.join(formula_smt(x) for x in f.items)})" if len(f.items) > 1 else formula_smt(f.items[0])
    if isinstance(f, Or):
        if not f.items:
            return "false"
        return f"(or {' '.join(formula_smt(x) for x in f.items)})" if len(f.items) > 1 else formula_smt(f.items[0])
    if isinstance(f, Implies):
        return f"(=> {formula_smt(f.left)} {formula_smt(f.right)})"
    if isinstance(f, Iff):
        return f"(= {formula_smt(f.left)} {formula_smt(f.right)})"
    if isinstance(f, (Forall, Exists)):
        if not f.vars:
            return formula_smt(f.body)
        kw = "forall" if isinstance(f, Forall) else "exists"
        bs = " ".join(f"({q(v.name)} {q(v.sort)})" for v in f.vars)
        return f"({kw} ({bs}) {formula_smt(f.body)})"
    raise TypeError(f)


# ---------------------------------------------------------------- vocabularies

class Vocab:
    """Names one copy of a protocol's symbols inside a script."""

    def __init__(self, ast: ProtocolAST, prefix: str, base: str, side: str, node_sort: str):
        self.ast = ast
        self.prefix = prefix      # e.g. "L+"
        self.base = base          # unprimed copy that owns the static symbols
        self.side = side          # "L" or "C"
        self.node_sort = node_sort

    def name(self, x: str) -> str:
        d = self.ast.symbol(x)
        if not d.mutable:
            if self.node_sort not in d.args and d.out != self.node_sort:
                return f"S.{x}"
            return f"{self.base}.{x}"
        return f"{self.prefix}.{x}"

    def sort(self, s: str) -> str:
        return f"C.{s}" if self.side == "C" and s == self.node_sort else s

    def retag(self, f: Formula) -> Formula:
        return fol.retag(f, self.name, {self.node_sort: self.sort(self.node_sort)})

    def bind(self, binding: Mapping[Var, Term]) -> Dict[Var, Term]:
        return {Var(p.name, self.sort(p.sort)): t for p, t in binding.items()}


def _retag_term(t: Term, v: Vocab) -> Term:
    if isinstance(t, Var):
        return Var(t.name, v.sort(t.sort))
    if isinstance(t, Const):
        return Const(t.name, v.sort(t.sort))
    return App(v.name(t.func), tuple(_retag_term(a, v) for a in t.args), v.sort(t.sort))


# ---------------------------------------------------------------- scripts

@dataclass
class Script:
    name: str
    lines: List[str] = field(default_factory=list)

    def add(self, s: str) -> None:
        self.lines.append(s)

    def comment(self, s: str) -> None:
        self.lines.append(f"; {s}")

    def assert_(self, f: Union[Formula, str], note: Optional[str] = None) -> None:
        if note:
            self.comment(note)
        self.lines.append(f"(assert {f if isinstance(f, str) else formula_smt(f)})")

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


class Encoder:
    def __init__(self, synth: SynthesisResult):
        self.s = synth
        self.ast = synth.ast
        self.c_ast = synth.c_ast
        self.node = self.ast.node_sort
        self.cnode = c_sort(self.ast, self.node)
        self.consts = synth.constants()

    # -- shared preamble
    def _vocab(self, side: str, prefix: str, base: Optional[str] = None) -> Vocab:
        ast = self.ast if side == "L" else self.c_ast
        return Vocab(ast, prefix, base or side, side, self.node)

    def _declare_vocab(self, sc: Script, v: Vocab, only_mutable: bool = False, declared: Optional[set] = None) -> None:
        declared = declared if declared is not None else set()
        for d in v.ast.symbols:
            if only_mutable and not d.mutable:
                continue
            n = v.name(d.name)
            if n in declared:
                continue
            declared.add(n)
            args = " ".join(q(v.sort(a)) for a in d.args)
            out = "Bool" if d.is_relation else q(v.sort(d.out))
            sc.add(f"(declare-fun {q(n)} ({args}) {out})")

    def preamble(self, name: str, declare_c: bool = True) -> Tuple[Script, set]:
        sc = Script(name)
        sc.comment(f"condition {name} for protocol {self.ast.name}")
        sc.add("(set-logic ALL)")
        for srt in self.ast.sorts:
            if srt.kind == "data":
                sc.add(f"(declare-sort {q(srt.name)} 0)")
        sc.add(f"(declare-sort {q(self.node)} 0)")
        ctors = " ".join(f"({q(n)})" for n in self.s.sim.c_nodes)
        sc.add(f"(declare-datatypes (({q(self.cnode)} 0)) (({ctors})))")
        for c in self.s.vi.constants:
            sc.add(f"(declare-const {q(c.name)} {q(c.sort)})")
        if len(self.s.vi.node_constants) > 1:
            sc.assert_(f"(distinct {' '.join(q(c.name) for c in self.s.vi.node_constants)})", "violating nodes are distinct")
        sc.add(f"(declare-fun {q(SIM)} ({q(self.node)}) {q(self.cnode)})")
        sim = self.s.sim
        for l, c in zip(sim.violating, sim.images):
            sc.assert_(f"(= ({q(SIM)} {q(l)}) {q(c)})")
        if sim.scheme == "collapse":
            others = " ".join(f"(distinct |n| {q(l)})" for l in sim.violating)
            guard = f"(and {others})" if len(sim.violating) > 1 else others
            sc.assert_(f"(forall ((|n| {q(self.node)})) (=> {guard} (= ({q(SIM)} |n|) {q(sim.sink)})))",
                       "every other node collapses onto the sink")
        declared: set = set()
        self._declare_vocab(sc, self._vocab("L", "L"), declared=declared)
        if declare_c:
            self._declare_vocab(sc, self._vocab("C", "C"), declared=declared)
        else:
            self._declare_statics(sc, self._vocab("C", "C"), declared)
        self._axioms(sc)
        return sc, declared

    def _declare_statics(self, sc: Script, v: Vocab, declared: set) -> None:
        for d in v.ast.symbols:
            if d.mutable:
                continue
            n = v.name(d.name)
            if n in declared:
                continue
            declared.add(n)
            args = " ".join(q(v.sort(a)) for a in d.args)
            out = "Bool" if d.is_relation else q(v.sort(d.out))
            sc.add(f"(declare-fun {q(n)} ({args}) {out})")

    def _axioms(self, sc: Script) -> None:
        lv, cv = self._vocab("L", "L"), self._vocab("C", "C")
        for a in self.ast.axioms:
            sc.assert_(lv.retag(a), "axiom (L)")
        for a in self.c_ast.axioms:
            sc.assert_(cv.retag(a), "axiom (C)")
        for a in self.s.axioms:
            sc.assert_(lv.retag(a), "override axiom (L)")
            sc.assert_(cv.retag(a), "override axiom (C)")

    # -- gamma over arbitrary vocabularies
    def gamma(self, lv: Vocab, cv: Vocab, clauses: Optional[Sequence[GammaClause]] = None) -> Formula:
        clauses = self.s.gamma if clauses is None else clauses

        def rename(x: str) -> str:
            if x == SIM:
                return SIM
            side, _, sym = x.partition(".")
            return (lv if side == "L" else cv).name(sym)

        return fol.conj([fol.retag(g.formula, rename) for g in clauses])

    # -- transitions
    def _update_equations(self, ast: ProtocolAST, act: ActionDecl, binding: Mapping[Var, Term],
                          pre: Vocab, post: Vocab) -> List[Formula]:
        """Post-state equations: each written row takes the last value written, all else is framed."""
        out: List[Formula] = []
        by_sym: Dict[str, List[Update]] = {}
        for u in act.body:
            by_sym.setdefault(u.target, []).append(u)
        b = pre.bind(binding)
        sub = lambda t: fol.subst_term(_retag_term(t, pre), b)
        for d in ast.symbols:
            if not d.mutable:
                continue
            ys = tuple(Var(f"y{i + 1}", pre.sort(s)) for i, s in enumerate(d.args))
            if d.is_relation:
                cur: Union[Formula, Term] = Rel(pre.name(d.name), ys)
                post_atom: Union[Formula, Term] = Rel(post.name(d.name), ys)
            else:
                cur = App(pre.name(d.name), ys, pre.sort(d.out))
                post_atom = App(post.name(d.name), ys, pre.sort(d.out))
            expr = _Ite.wrap(cur)
            for u in by_sym.get(d.name, []):
                conds = [Eq(y, sub(a)) for y, a in zip(ys, u.args) if a is not None]
                val = BoolLit(u.value) if isinstance(u.value, bool) else sub(u.value)
                expr = _Ite(fol.conj(conds), _Ite.wrap(val), expr)
            out.append(_Equation(ys, post_atom, expr))
        return out

    def _guard(self, ast: ProtocolAST, act: ActionDecl, binding: Mapping[Var, Term], v: Vocab) -> Formula:
        return fol.substitute(v.retag(act.guard), v.bind(binding))

    def _state_eq(self, ast: ProtocolAST, a: Vocab, b: Vocab) -> List["_Equation"]:
        out = []
        for d in ast.symbols:
            if not d.mutable:
                continue
            ys = tuple(Var(f"y{i + 1}", a.sort(s)) for i, s in enumerate(d.args))
            if d.is_relation:
                out.append(_Equation(ys, Rel(b.name(d.name), ys), _Ite.wrap(Rel(a.name(d.name), ys))))
            else:
                out.append(_Equation(ys, App(b.name(d.name), ys, a.sort(d.out)),
                                     _Ite.wrap(App(a.name(d.name), ys, a.sort(d.out)))))
        return out

    # -- conditions
    def encode_init(self) -> Script:
        sc, declared = self.preamble("init", declare_c=False)
        lv, cv = self._vocab("L", "L"), self._vocab("C", "C")
        for f in self.ast.init:
            sc.assert_(lv.retag(f), "initial condition (L)")
        self._witness(sc)
        goal = fol.conj([cv.retag(f) for f in self.c_ast.init] + [self.gamma(lv, cv)])
        sc.assert_(Not(goal), "negated goal: the witness is initial and related by gamma")
        sc.add("(check-sat)")
        return sc

    def _witness(self, sc: Script) -> None:
        """Define the C initial state from the L initial state.

        Each C row copies the L row at a representative L node (violating
        images map back to their violating constant, extra nodes to a fresh
        node).  Rows constrained by a gamma implication are then forced to
        the implied value whenever some L row mapping onto them demands it.
        """
        sim = self.s.sim
        rep_cases = list(zip(sim.images, sim.violating))
        extras = [n for n in sim.c_nodes if n not in sim.images]
        for e in extras:
            sc.add(f"(declare-const {q('rep.' + e)} {q(self.node)})")
        body = q("rep." + extras[-1]) if extras else q(rep_cases[-1][1])
        for c, l in reversed(rep_cases if not extras else rep_cases):
            body = f"(ite (= |c| {q(c)}) {q(l)} {body})"
        for e in extras[:-1]:
            body = f"(ite (= |c| {q(e)}) {q('rep.' + e)} {body})"
        sc.add(f"(define-fun |rep| ((|c| {q(self.cnode)})) {q(self.node)} {body})")

        lv, cv = self._vocab("L", "L"), self._vocab("C", "C")
        by_sym: Dict[str, List[GammaClause]] = {}
        for g in self.s.gamma:
            if g.source is not None:
                by_sym.setdefault(g.source.x, []).append(g)
        for d in self.c_ast.symbols:
            if not d.mutable:
                continue
            cs = [Var(f"c{i + 1}", cv.sort(s)) for i, s in enumerate(d.args)]
            params = " ".join(f"({q(v.name)} {q(v.sort)})" for v in cs)

            def to_l(v: Var) -> str:
                return f"(|rep| {q(v.name)})" if v.sort == self.cnode else q(v.name)

            lname = q(lv.name(d.name)) if self.ast.has_symbol(d.name) else None
            if d.is_relation:
                base = "false" if lname is None else (
                    lname if not cs else f"({lname} {' '.join(to_l(v) for v in cs)})")
                trues, falses = [], []
                for g in by_sym.get(d.name, []):
                    c = g.source
                    if c.o is True or c.o == fol.STAR:
                        trues.append(self._preimage(d, c, cs, True))
                    if c.o is False or c.o == fol.STAR:
                        falses.append(self._preimage(d, c, cs, False))
                expr = base
                if falses:
                    expr = f"(and {expr} {' '.join(f'(not {x})' for x in falses)})"
                if trues:
                    expr = f"(or {expr} {' '.join(trues)})"
                sc.add(f"(define-fun {q(cv.name(d.name))} ({params}) Bool {expr})")
            else:
                if lname is None:
                    raise EncodingError(f"cutoff-only function '{d.name}' has no initial witness")
                val = lname if not cs else f"({lname} {' '.join(to_l(v) for v in cs)})"
                if d.out == self.node:
                    val = f"({q(SIM)} {val})"
                sc.add(f"(define-fun {q(cv.name(d.name))} ({params}) {q(cv.sort(d.out))} {val})")

    def _preimage(self, d: SymbolDecl, c: fol.Clause, cs: Sequence[Var], value: bool) -> str:
        """Some L row matching clause c maps onto C row cs and has the given truth value."""
        lv = self._vocab("L", "L")
        bound: List[str] = []
        conds: List[str] = []
        largs: List[str] = []
        for i, (a, s, cvar) in enumerate(zip(c.args, d.args, cs)):
            if s == self.node:
                if a == fol.STAR:
                    nv = f"m{i + 1}"
                    bound.append(f"({q(nv)} {q(self.node)})")
                    conds.append(f"(= ({q(SIM)} {q(nv)}) {q(cvar.name)})")
                    largs.append(q(nv))
                else:
                    conds.append(f"(= ({q(SIM)} {q(a)}) {q(cvar.name)})")
                    largs.append(q(a))
            else:
                if a != fol.STAR:
                    conds.append(f"(= {q(a)} {q(cvar.name)})")
                largs.append(q(cvar.name))
        atom = f"({q(lv.name(d.name))} {' '.join(largs)})" if largs else q(lv.name(d.name))
        conds.append(atom if value else f"(not {atom})")
        body = f"(and {' '.join(conds)})" if len(conds) > 1 else conds[0]
        return f"(exists ({' '.join(bound)}) {body})" if bound else body

    def encode_safety(self) -> Script:
        sc, _ = self.preamble("safety")
        lv, cv = self._vocab("L", "L"), self._vocab("C", "C")
        sc.assert_(self.gamma(lv, cv), "gamma")
        ground, _ = fol.negate_and_skolemize_safety(self.ast.safety, self.node)
        sc.assert_(lv.retag(ground), "L violates safety at the violation constants")
        sc.assert_(cv.retag(self.c_ast.safety), "C is safe")
        sc.add("(check-sat)")
        return sc

    def encode_step(self, act: ActionDecl) -> Script:
        sc, declared = self.preamble(f"step:{act.name}")
        lv, cv = self._vocab("L", "L"), self._vocab("C", "C")
        lpost = self._vocab("L", "L+", "L")
        cpost = self._vocab("C", "C+", "C")
        self._declare_vocab(sc, lpost, only_mutable=True, declared=declared)
        self._declare_vocab(sc, cpost, only_mutable=True, declared=declared)
        params = {}
        for p in act.params:
            cname = f"p.{p.name}"
            sc.add(f"(declare-const {q(cname)} {q(p.sort)})")
            params[p] = Const(cname, p.sort)
        sc.assert_(self.gamma(lv, cv), "gamma holds before the step")
        sc.assert_(lv.retag(self.ast.safety), "L is safe before the step")
        for pre in self.s.preconditions:
            sc.assert_(lv.retag(pre), "override precondition")
        sc.assert_(self._guard(self.ast, act, params, lv), f"guard of {act.name} (L)")
        for eq in self._update_equations(self.ast, act, params, lv, lpost):
            sc.assert_(eq.smt())

        rules = [r for r in self.s.tau if r.action == act.name]
        matches: List[Formula] = []
        obligations: List[Formula] = []
        for i, r in enumerate(rules, 1):
            m = self._match(r, act, params)
            sel = fol.conj([m] + [Not(x) for x in matches])
            matches.append(m)
            chain = [cv] + [self._vocab("C", f"C#{i}.{j}", "C") for j in range(1, len(r.steps))] + [cpost]
            for v in chain[1:-1]:
                self._declare_vocab(sc, v, only_mutable=True, declared=declared)
            binding = self._rule_binding(r, act, params)
            effects: List[str] = []
            guards: List[Formula] = []
            for j, (cact_name, cargs) in enumerate(r.steps):
                cact = self.c_ast.action(cact_name)
                cb = {p: fol.subst_term(t, binding) for p, t in zip(cact.params, cargs)}
                guards.append(self._guard(self.c_ast, cact, cb, chain[j]))
                effects += [e.smt_body() for e in self._update_equations(self.c_ast, cact, cb, chain[j], chain[j + 1])]
            if not r.steps:
                effects += [e.smt_body() for e in self._state_eq(self.c_ast, cv, cpost)]
            sc.assert_(f"(=> {formula_smt(sel)} (and {' '.join(effects) or 'true'}))", f"lockstep rule {r}")
            obligations.append(Implies(sel, fol.conj(guards)))
        none = fol.conj([Not(x) for x in matches])
        frame = [e.smt_body() for e in self._state_eq(self.c_ast, cv, cpost)]
        sc.assert_(f"(=> {formula_smt(none)} (and {' '.join(frame) or 'true'}))", "no rule applies: C stutters")
        goal = fol.conj([self.gamma(lpost, cpost)] + obligations)
        sc.assert_(Not(goal), "negated goal: gamma after the step and every C guard")
        sc.add("(check-sat)")
        return sc

    def _match(self, r: TauRule, act: ActionDecl, params: Mapping[Var, Const]) -> Formula:
        conds: List[Formula] = []
        first: Dict[Var, Const] = {}
        for p, a in zip(act.params, r.args):
            pc = params[p]
            if isinstance(a, Var):
                if a in first:
                    conds.append(Eq(pc, first[a]))
                else:
                    first[a] = pc
            else:
                conds.append(Eq(pc, a))
        return fol.conj(conds)

    def _rule_binding(self, r: TauRule, act: ActionDecl, params: Mapping[Var, Const]) -> Dict[Var, Term]:
        b: Dict[Var, Term] = {}
        for p, a in zip(act.params, r.args):
            if isinstance(a, Var) and a not in b:
                b[a] = params[p]
        return b

    def scripts(self) -> List[Script]:
        out = [self.encode_init()]
        out += [self.encode_step(a) for a in self.ast.actions]
        out.append(self.encode_safety())
        return out


# -- helper expression nodes for update equations (kept out of fol on purpose)

@dataclass(frozen=True)
class _Ite:
    cond: Formula
    then: "_Ite"
    other: "_Ite"

    @staticmethod
    def wrap(x) -> "_Leaf":
        return _Leaf(x)

    def smt(self) -> str:
        return f"(ite {formula_smt(self.cond)} {self.then.smt()} {self.other.smt()})"


@dataclass(frozen=True)
class _Leaf:
    value: Union[Formula, Term]

    def smt(self) -> str:
        v = self.value
        if isinstance(v, (Var, Const, App)):
            return term_smt(v)
        return formula_smt(v)


@dataclass(frozen=True)
class _Equation:
    ys: Tuple[Var, ...]
    post: Union[Formula, Term]
    rhs: Union[_Ite, _Leaf]

    def smt_body(self) -> str:
        lhs = _Leaf(self.post).smt()
        eq = f"(= {lhs} {self.rhs.smt()})"
        if not self.ys:
            return eq
        bs = " ".join(f"({q(v.name)} {q(v.sort)})" for v in self.ys)
        return f"(forall ({bs}) {eq})"

    def smt(self) -> str:
        return self.smt_body()


def encode_all(synth: SynthesisResult) -> List[Script]:
    return Encoder(synth).scripts()


# ---------------------------------------------------------------- solver driver

@dataclass
class Verdict:
    name: str
    answer: str          # "unsat", "sat" or "unknown"
    seconds: float
    detail: str = ""     # model text on sat, reason on unknown

    @property
    def holds(self) -> bool:
        return self.answer == "unsat"


def find_solver(explicit: Optional[str] = None) -> Optional[List[str]]:
    """Solver command line: explicit path, then CUTOFFSMITH_SOLVER, then z3 on PATH."""
    cand = explicit or os.environ.get("CUTOFFSMITH_SOLVER")
    if cand:
        parts = cand.split()
        exe = shutil.which(parts[0]) or (parts[0] if os.path.exists(parts[0]) else None)
        return [exe] + parts[1:] if exe else None
    for name in ("z3", "cvc5"):
        exe = shutil.which(name)
        if exe:
            return [exe]
    return None


def run_solver(script: Union[Script, str], solver: Optional[Sequence[str]] = None,
               timeout: float = DEFAULT_TIMEOUT, name: Optional[str] = None) -> Verdict:
    text = script.text if isinstance(script, Script) else script
    name = name or (script.name if isinstance(script, Script) else "script")
    cmd = list(solver) if solver else find_solver()
    if not cmd:
        return Verdict(name, "unknown", 0.0, "no SMT solver found (set CUTOFFSMITH_SOLVER or --solver-path)")
    text = text.replace("(check-sat)", "(check-sat)\n(get-model)") if "(get-model)" not in text else text
    start = time.perf_counter()
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(text)
        path = fh.name
    try:
        proc = subprocess.run(cmd + [path], capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return Verdict(name, "unknown", time.perf_counter() - start, f"timeout after {timeout:g}s")
    except OSError as e:
        return Verdict(name, "unknown", time.perf_counter() - start, f"solver failed to start: {e}")
    finally:
        os.unlink(path)
    elapsed = time.perf_counter() - start
    out = proc.stdout.strip().splitlines()
    first = out[0].strip() if out else ""
    if first in ("sat", "unsat"):
        detail = "\n".join(out[1:]) if first == "sat" else ""
        return Verdict(name, first, elapsed, detail)
    reason = first or proc.stderr.strip() or f"solver exited with status {proc.returncode}"
    return Verdict(name, "unknown", elapsed, reason)


def check_all(scripts: Sequence[Script], solver: Optional[Sequence[str]] = None,
              timeout: float = DEFAULT_TIMEOUT, jobs: int = 4) -> List[Verdict]:
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(pool.map(lambda s: run_solver(s, solver, timeout), scripts))


def write_scripts(scripts: Iterable[Script], directory: str) -> List[str]:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for s in scripts:
        p = os.path.join(directory, s.name.replace(":", "_") + ".smt2")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(s.text)
        paths.append(p)
    return paths
