"""Cutoff instance, node mapping, simulation relation and lockstep.

Formulas produced here live in a two-vocabulary signature: every protocol
symbol ``x`` appears as ``L.x`` (the arbitrary instance) and ``C.x`` (the
cutoff instance).  Data sorts are shared; the node sort keeps its name on
the L side and is called ``C.<node>`` on the C side.  ``sim`` maps L nodes to
C nodes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from . import fol
from .analysis import AnalysisResult, Invocation, analyze
from .fol import (STAR, And, App, Clause, Const, Eq, Forall, Formula, Iff, Implies, Not, Rel, Term, Var)
from .frontend import (KEYWORDS, ParseError, Parser, ProtocolAST, ProtocolMeta, Scope, SortDecl, SymbolDecl,
                       load_protocol, preprocess, tokenize)

SIM = "sim"


def c_sort(ast: ProtocolAST, sort: str) -> str:
    return f"C.{sort}" if sort == ast.node_sort else sort


def L(name: str) -> str:
    return f"L.{name}"


def C(name: str) -> str:
    return f"C.{name}"


class SynthesisError(ValueError):
    pass


# ---------------------------------------------------------------- cutoff size and mapping

def cutoff_size(ast: ProtocolAST) -> int:
    vs, _ = fol.strip_foralls(ast.safety)
    n = sum(1 for v in vs if v.sort == ast.node_sort)
    if n == 0:
        raise SynthesisError("safety property quantifies over no nodes; there is no cutoff parameter")
    return n


@dataclass(frozen=True)
class SimMapping:
    scheme: str                       # "exact" or "collapse"
    violating: Tuple[str, ...]        # L constants, in quantifier order
    images: Tuple[str, ...]           # their C images, one-to-one
    c_nodes: Tuple[str, ...]          # all C nodes (images first, then extras)
    sink: Optional[str] = None        # image of every other L node under collapse

    def image(self, l_const: str) -> str:
        return self.images[self.violating.index(l_const)]

    def lines(self) -> List[str]:
        out = [f"sim({l}) = {c}" for l, c in zip(self.violating, self.images)]
        if self.scheme == "collapse":
            out.append(f"sim(n) = {self.sink} for every other node n")
        return out


def c_node_name(l_const: str) -> str:
    return (l_const[:-2] if l_const.endswith("_L") else l_const) + "_C"


def choose_sim_scheme(meta: ProtocolMeta, result: AnalysisResult, vi: fol.ViolationInstantiation,
                      extra_nodes: Sequence[str] = ()) -> SimMapping:
    violating = tuple(c.name for c in vi.node_constants)
    images = tuple(c_node_name(v) for v in violating)
    nodes = images + tuple(extra_nodes)
    if result.node_star(meta):
        return SimMapping("collapse", violating, images, nodes, images[-1])
    return SimMapping("exact", violating, images, nodes, None)


# ---------------------------------------------------------------- gamma and tau

@dataclass(frozen=True)
class GammaClause:
    formula: Formula
    source: Optional[Clause] = None   # None for override clauses
    provenance: str = "synthesized"
    line: int = 0                     # override file line

    def label(self) -> str:
        if self.source is not None:
            return str(self.source)
        return f"override:{self.line}" if self.line else "override"


@dataclass(frozen=True)
class TauRule:
    """L invocation pattern mapped to a sequence of C invocations.

    Pattern arguments are Vars (bound by matching) or Consts (violation
    constants); C arguments are terms over those, sim and C node constants.
    """
    action: str
    args: Tuple[Term, ...]
    steps: Tuple[Tuple[str, Tuple[Term, ...]], ...]
    provenance: str = "synthesized"

    @property
    def vars(self) -> Tuple[Var, ...]:
        seen: List[Var] = []
        for a in self.args:
            if isinstance(a, Var) and a not in seen:
                seen.append(a)
        return tuple(seen)

    def __str__(self) -> str:
        lhs = f"{self.action}({', '.join(map(str, self.args))})"
        rhs = ", ".join(f"{a}({', '.join(map(str, xs))})" for a, xs in self.steps) or "skip"
        return f"{lhs} => {rhs}"


def _sim_term(ast: ProtocolAST, t: Term) -> Term:
    if t.sort == ast.node_sort:
        return App(SIM, (t,), c_sort(ast, ast.node_sort))
    return t


def _value_term(name: str, sort: str, consts: Mapping[str, Const]) -> Term:
    if name in consts:
        return consts[name]
    raise SynthesisError(f"unknown constant '{name}' in clause")


def gamma_clause(ast: ProtocolAST, c: Clause, consts: Mapping[str, Const]) -> Formula:
    decl = ast.symbol(c.x)
    vs: List[Var] = []
    largs: List[Term] = []
    for v, s in zip(c.args, decl.args):
        if v == STAR:
            var = Var(f"v{len(vs) + 1}", s)
            vs.append(var)
            largs.append(var)
        else:
            largs.append(_value_term(v, s, consts))
    cargs = [_sim_term(ast, t) for t in largs]
    if decl.is_relation:
        l_atom: Formula = Rel(L(c.x), tuple(largs))
        c_atom: Formula = Rel(C(c.x), tuple(cargs))
        if c.o == STAR:
            body: Formula = Iff(l_atom, c_atom)
        elif c.o is True:
            body = Implies(l_atom, c_atom)
        else:
            body = Implies(Not(l_atom), Not(c_atom))
    else:
        l_app = App(L(c.x), tuple(largs), decl.out or "")
        c_app = App(C(c.x), tuple(cargs), c_sort(ast, decl.out or ""))
        if c.o == STAR:
            body = Eq(_sim_term(ast, l_app), c_app)
        else:
            o = _value_term(str(c.o), decl.out or "", consts)
            body = Implies(Eq(l_app, o), Eq(c_app, _sim_term(ast, o)))
    return Forall(tuple(vs), body) if vs else body


def tau_rule(ast: ProtocolAST, inv: Invocation, consts: Mapping[str, Const]) -> TauRule:
    act = ast.action(inv.action)
    args: List[Term] = []
    n = 0
    for p, v in zip(act.params, inv.values()):
        if v == STAR:
            n += 1
            args.append(Var(f"v{n}", p.sort))
        else:
            args.append(_value_term(v, p.sort, consts))
    step = (inv.action, tuple(_sim_term(ast, t) for t in args))
    return TauRule(inv.action, tuple(args), (step,))


def sim_and_lockstep(ast: ProtocolAST, S, A, consts: Mapping[str, Const]) -> Tuple[List[GammaClause], List[TauRule]]:
    gamma = [GammaClause(gamma_clause(ast, c, consts), c) for c in sorted(S, key=Clause.sort_key)]
    tau = [tau_rule(ast, inv, consts) for inv in sorted(A)]
    return gamma, tau


# ---------------------------------------------------------------- overrides

SECTIONS = ("extra-nodes", "axioms", "gamma", "tau", "precondition", "cutoff-protocol")


@dataclass
class OverrideSpec:
    path: str = "<override>"
    extra_nodes: List[str] = field(default_factory=list)
    sections: Dict[str, List[Tuple[int, str]]] = field(default_factory=dict)

    def items(self, name: str) -> List[Tuple[int, str]]:
        return self.sections.get(name, [])

    @property
    def cutoff_protocol(self) -> Optional[str]:
        items = self.items("cutoff-protocol")
        if not items:
            return None
        rel = items[0][1].strip()
        return os.path.join(os.path.dirname(self.path), rel)


def parse_override(text: str, path: str = "<override>") -> OverrideSpec:
    """Sectioned override file; an entry continues onto indented lines."""
    spec = OverrideSpec(path)
    current: Optional[str] = None
    entries: List[Tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if name not in SECTIONS:
                raise ParseError(f"unknown override section [{name}]", lineno, 1, path)
            current = name
            entries = spec.sections.setdefault(name, [])
            continue
        if current is None:
            raise ParseError("override content before any section header", lineno, 1, path)
        if raw[:1].isspace() and entries:
            ln, prev = entries[-1]
            entries[-1] = (ln, prev + " " + stripped)
        else:
            entries.append((lineno, stripped))
    for lineno, name in spec.items("extra-nodes"):
        for tok in name.replace(",", " ").split():
            if not tok.isidentifier() or tok in KEYWORDS:
                raise ParseError(f"bad node name '{tok}'", lineno, 1, path)
            spec.extra_nodes.append(tok)
    return spec


def load_override(path: str) -> OverrideSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_override(fh.read(), path)


def two_vocab_scope(ast: ProtocolAST, c_ast: ProtocolAST, consts: Mapping[str, Const]) -> Scope:
    node = ast.node_sort
    sorts: Dict[str, SortDecl] = {s.name: s for s in ast.sorts}
    sorts[c_sort(ast, node)] = SortDecl(c_sort(ast, node), "node")
    syms: Dict[str, SymbolDecl] = {}
    for d in ast.symbols:
        syms[L(d.name)] = SymbolDecl(L(d.name), d.args, d.out, d.mutable)
    for d in c_ast.symbols:
        syms[C(d.name)] = SymbolDecl(C(d.name), tuple(c_sort(ast, s) for s in d.args),
                                     None if d.out is None else c_sort(ast, d.out), d.mutable)
    syms[SIM] = SymbolDecl(SIM, (node,), c_sort(ast, node), False)
    return Scope(sorts, syms, consts)


def _parse_with(scope: Scope, text: str, path: str, line: int, env=None, dotted: bool = True) -> Formula:
    toks = tokenize(text, path, dotted=dotted)
    toks = [Tok_at(t, line) for t in toks]
    p = Parser(toks, scope, path)
    f = p.formula(dict(env or {}))
    if p.cur.kind != "eof":
        raise p.error(f"unexpected '{p.cur.text}'")
    fv = fol.free_vars(f) - set((env or {}).values())
    if fv:
        raise p.error(f"free variables {sorted(v.name for v in fv)}")
    return f


def Tok_at(t, line: int):
    return type(t)(t.kind, t.text, line, t.col)


def _parse_tau(ast: ProtocolAST, c_ast: ProtocolAST, scope: Scope, text: str, path: str, line: int) -> TauRule:
    toks = [Tok_at(t, line) for t in tokenize(text, path, dotted=True)]
    p = Parser(toks, scope, path)
    name = p.ident("action name")
    try:
        act = ast.action(name.text)
    except KeyError:
        raise p.error(f"unknown action '{name.text}'", name)
    p.expect("(")
    args: List[Term] = []
    env: Dict[str, Var] = {}
    for i, param in enumerate(act.params):
        if i:
            p.expect(",")
        t = p.ident("argument")
        if t.text in scope.consts:
            c = scope.consts[t.text]
            if c.sort != param.sort:
                raise p.error(f"constant '{t.text}' has sort {c.sort}, expected {param.sort}", t)
            args.append(c)
        else:
            v = env.setdefault(t.text, Var(t.text, param.sort))
            if v.sort != param.sort:
                raise p.error(f"variable '{t.text}' used at sorts {v.sort} and {param.sort}", t)
            args.append(v)
    p.expect(")")
    p.expect("=>")
    steps: List[Tuple[str, Tuple[Term, ...]]] = []
    if p.accept("skip"):
        pass
    else:
        while True:
            t = p.ident("action name")
            try:
                cact = c_ast.action(t.text)
            except KeyError:
                raise p.error(f"unknown cutoff action '{t.text}'", t)
            p.expect("(")
            cargs: List[Term] = []
            for i, param in enumerate(cact.params):
                if i:
                    p.expect(",")
                tt = p.cur
                term = p.term(env)
                want = c_sort(ast, param.sort)
                if term.sort != want:
                    raise p.error(f"argument {i + 1} of '{t.text}' has sort {term.sort}, expected {want}", tt)
                cargs.append(term)
            p.expect(")")
            steps.append((t.text, tuple(cargs)))
            if not p.accept(","):
                break
    if p.cur.kind != "eof":
        raise p.error(f"unexpected '{p.cur.text}'")
    return TauRule(act.name, tuple(args), tuple(steps), "override")


# ---------------------------------------------------------------- result

@dataclass
class SynthesisResult:
    meta: ProtocolMeta
    c_ast: ProtocolAST
    vi: fol.ViolationInstantiation
    analysis: AnalysisResult
    sim: SimMapping
    gamma: List[GammaClause]
    tau: List[TauRule]
    axioms: List[Formula] = field(default_factory=list)          # extra, over plain protocol vocabulary
    preconditions: List[Formula] = field(default_factory=list)   # plain vocabulary, assumed of L pre-states
    overridden: bool = False

    @property
    def ast(self) -> ProtocolAST:
        return self.meta.ast

    @property
    def size(self) -> int:
        """Number of nodes in the cutoff instance."""
        return len(self.sim.c_nodes)

    @property
    def c_node_count(self) -> int:
        return len(self.sim.c_nodes)

    @property
    def gamma_formula(self) -> Formula:
        return fol.conj([g.formula for g in self.gamma])

    @property
    def simulated_actions(self) -> List[str]:
        seen: List[str] = []
        for r in self.tau:
            if r.steps and r.action not in seen:
                seen.append(r.action)
        return seen

    @property
    def stutter_actions(self) -> List[str]:
        sim = set(self.simulated_actions)
        return [a.name for a in self.ast.actions if a.name not in sim]

    def constants(self) -> Dict[str, Const]:
        out = dict(self.vi.by_name())
        for n in self.sim.c_nodes:
            out[n] = Const(n, c_sort(self.ast, self.ast.node_sort))
        return out

    def dump(self) -> str:
        ast = self.ast
        lines = [f"protocol: {ast.name}",
                 f"cutoff: {self.size}",
                 f"cutoff nodes: {', '.join(self.sim.c_nodes)}",
                 "violation: " + ", ".join(f"{c.name}: {c.sort}" for c in self.vi.constants),
                 f"sim: {self.sim.scheme}"]
        lines += [f"  {x}" for x in self.sim.lines()]
        lines.append(f"gamma ({len(self.gamma)}):")
        for g in self.gamma:
            lines.append(f"  [{g.provenance}] {g.label()}: {fol.show(g.formula)}")
        lines.append(f"tau ({len(self.simulated_actions)}/{len(ast.actions)}):")
        for r in self.tau:
            lines.append(f"  [{r.provenance}] {r}")
        lines.append("stutter: " + (", ".join(self.stutter_actions) or "(none)"))
        for a in self.axioms:
            lines.append(f"axiom: {fol.show(a)}")
        for pre in self.preconditions:
            lines.append(f"precondition: {fol.show(pre)}")
        return "\n".join(lines) + "\n"


def apply_overrides(res: SynthesisResult, spec: OverrideSpec) -> SynthesisResult:
    ast = res.ast
    c_ast = res.c_ast
    if spec.cutoff_protocol:
        c_ast = load_protocol(spec.cutoff_protocol)
        if {s.name: s.kind for s in c_ast.sorts} != {s.name: s.kind for s in ast.sorts}:
            raise ParseError("cutoff protocol must declare the same sorts", 1, 1, spec.cutoff_protocol)
    extra = tuple(c_node_name(n) if not n.endswith("_C") else n for n in spec.extra_nodes)
    sim = replace(res.sim, c_nodes=res.sim.images + extra)
    res = replace(res, c_ast=c_ast, sim=sim, overridden=bool(spec.sections))
    consts = res.constants()
    scope = two_vocab_scope(ast, c_ast, consts)
    gamma = list(res.gamma)
    for line, text in spec.items("gamma"):
        if text.startswith("drop "):
            label = "".join(text[5:].split())
            keep = [g for g in gamma if "".join(g.label().split()) != label]
            if len(keep) == len(gamma):
                raise ParseError(f"no gamma clause labelled '{label}' to drop", line, 1, spec.path)
            gamma = keep
            continue
        gamma.append(GammaClause(_parse_with(scope, text, spec.path, line), None, "override", line))
    tau = [_parse_tau(ast, c_ast, scope, text, spec.path, line) for line, text in spec.items("tau")]
    # override rules take precedence; synthesized rules for the same action
    # follow unless an override rule already catches every invocation
    catch_all = {r.action for r in tau if all(isinstance(a, Var) for a in r.args) and len(set(r.args)) == len(r.args)}
    tau += [r for r in res.tau if r.action not in catch_all]
    plain = Scope({s.name: s for s in ast.sorts}, {d.name: d for d in ast.symbols}, res.vi.by_name())
    axioms = []
    for line, text in spec.items("axioms"):
        f = _parse_with(plain, text, spec.path, line, dotted=False)
        bad = [n for n in fol.symbols(f) if ast.symbol(n).mutable]
        if bad:
            raise ParseError(f"override axioms may only mention static symbols, found {', '.join(sorted(bad))}",
                             line, 1, spec.path)
        axioms.append(f)
    pres = [_parse_with(plain, text, spec.path, line, dotted=False) for line, text in spec.items("precondition")]
    return replace(res, gamma=gamma, tau=tau, axioms=res.axioms + axioms, preconditions=res.preconditions + pres)


def synthesize(meta: ProtocolMeta, override: Optional[OverrideSpec] = None) -> SynthesisResult:
    ast = meta.ast
    cutoff_size(ast)
    result, vi = analyze(meta)
    sim = choose_sim_scheme(meta, result, vi)
    consts = vi.by_name()
    gamma, tau = sim_and_lockstep(ast, result.S, result.A, consts)
    res = SynthesisResult(meta, ast, vi, result, sim, gamma, tau)
    if override is not None:
        res = apply_overrides(res, override)
    return res


def synthesize_file(path: str, override_path: Optional[str] = None) -> SynthesisResult:
    meta = preprocess(load_protocol(path))
    spec = load_override(override_path) if override_path else None
    return synthesize(meta, spec)
