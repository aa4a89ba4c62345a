"""Backward relevance analysis over clauses and action invocations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from . import fol
from .fol import STAR, Clause
from .frontend import ActionMeta, ProtocolMeta


@dataclass(frozen=True, order=True)
class Invocation:
    """An action together with a (possibly wildcarded) binding of its parameters."""
    action: str
    binding: Tuple[Tuple[str, str], ...]

    @property
    def I(self) -> Dict[str, str]:
        return dict(self.binding)

    def values(self) -> Tuple[str, ...]:
        return tuple(v for _, v in self.binding)

    def __str__(self) -> str:
        return f"{self.action}({','.join(self.values())})"


def make_invocation(meta: ActionMeta, I: Mapping[str, str]) -> Invocation:
    return Invocation(meta.name, tuple((p, I.get(p, STAR)) for p in meta.named_arguments))


class AnalysisError(RuntimeError):
    pass


def pattern_match(update_args: Sequence[str], clause_args: Sequence[str], params: Optional[Iterable[str]] = None) -> bool:
    """Can the update row `update_args` denote the clause row `clause_args`?

    Entries of update_args are parameter names or STAR.  When `params` is
    given, any other entry is treated as a constant that must agree with a
    concrete clause value.
    """
    if len(update_args) != len(clause_args):
        raise ValueError("pattern_match: length mismatch")
    names = set(params) if params is not None else None
    bound: Dict[str, str] = {}
    for u, c in zip(update_args, clause_args):
        if u == STAR or c == STAR:
            continue
        if names is not None and u not in names:
            if u != c:
                return False
            continue
        if bound.setdefault(u, c) != c:
            return False
    return True


def _outputs_compatible(a: Union[bool, str], b: Union[bool, str]) -> bool:
    return a == STAR or b == STAR or a == b


def actions_that_set(meta: ProtocolMeta, c: Clause) -> Set[Invocation]:
    out: Set[Invocation] = set()
    for a in meta.actions:
        for x, l, o in a.body:
            if x != c.x or not _outputs_compatible(c.o, o):
                continue
            if not pattern_match(l, c.args, a.named_arguments):
                continue
            I = {p: STAR for p in a.named_arguments}
            for u, v in zip(l, c.args):
                if u != STAR and u in I and v != STAR:
                    I[u] = v
            out.add(make_invocation(a, I))
    return out


def guards_for(meta: ProtocolMeta, inv: Invocation, universe: Sequence[str] = ()) -> Set[Clause]:
    """Guard clauses of an invocation.

    Positions bound by a universal node quantifier ("@v") range over
    `universe`, the violating node constants: the cutoff nodes are exactly
    their images, so those are the only instances a cutoff guard can read.
    Without a universe they become wildcards.
    """
    a = meta.action(inv.action)
    I = inv.I
    unless = dict(a.unless)
    out: Set[Clause] = set()
    for atom in a.guard_atoms:
        x, l, o = atom
        marks = sorted({p for p in l if p.startswith("@")})
        choices = [universe] * len(marks) if universe else [(STAR,)] * len(marks)
        for combo in itertools.product(*choices):
            env = dict(zip(marks, combo))
            val = lambda p: env[p] if p in env else (I.get(p, STAR) if p != STAR else STAR)
            if any(val(p) == val(q) != STAR for p, q in unless.get(atom, ())):
                continue
            out.add(Clause(x, tuple(val(p) for p in l), o))
    return out


# ---------------------------------------------------------------- subsumption

def _covers(general: Sequence, specific: Sequence) -> bool:
    return all(g == STAR or g == s for g, s in zip(general, specific))


def clause_subsumes(g: Clause, s: Clause) -> bool:
    return g.x == s.x and len(g.args) == len(s.args) and _covers(g.args, s.args) and (g.o == STAR or g.o == s.o)


def invocation_subsumes(g: Invocation, s: Invocation) -> bool:
    return g.action == s.action and _covers(g.values(), s.values())


def subsume(items: Iterable) -> frozenset:
    """Drop every element that another, strictly more general element covers."""
    items = set(items)
    out = set()
    for it in items:
        test = clause_subsumes if isinstance(it, Clause) else invocation_subsumes
        if not any(o != it and test(o, it) for o in items):
            out.add(it)
    return frozenset(out)


# ---------------------------------------------------------------- fixpoint

@dataclass(frozen=True)
class AnalysisResult:
    S: FrozenSet[Clause]
    A: FrozenSet[Invocation]
    iterations: int

    def sorted_S(self) -> List[Clause]:
        return sorted(self.S, key=Clause.sort_key)

    def sorted_A(self) -> List[Invocation]:
        return sorted(self.A)

    def node_star(self, meta: ProtocolMeta) -> bool:
        """True when some clause or invocation leaves a node position open."""
        ast = meta.ast
        node = ast.node_sort
        for c in self.S:
            d = ast.symbol(c.x)
            if any(s == node and v == STAR for s, v in zip(d.args, c.args)):
                return True
            if d.out == node and c.o == STAR:
                return True
        for inv in self.A:
            act = ast.action(inv.action)
            if any(p.sort == node and v == STAR for p, v in zip(act.params, inv.values())):
                return True
        return False

    def dump(self) -> str:
        lines = ["S:"]
        lines += [f"  {c}" for c in self.sorted_S()]
        lines.append("A:")
        lines += [f"  {a}" for a in self.sorted_A()]
        return "\n".join(lines)


def _node_constants(meta: ProtocolMeta, clauses: Iterable[Clause]) -> Tuple[str, ...]:
    ast = meta.ast
    node = next((s.name for s in ast.sorts if s.kind == "node"), None)
    out = set()
    for c in clauses:
        for s, v in zip(ast.symbol(c.x).args, c.args):
            if s == node and v != STAR:
                out.add(v)
    return tuple(sorted(out))


def static_analysis(meta: ProtocolMeta, s_init: Iterable[Clause], universe: Optional[Sequence[str]] = None
                    ) -> AnalysisResult:
    ast = meta.ast
    s_init = list(s_init)
    if universe is None:
        universe = _node_constants(meta, s_init)
    arity = max([len(d.args) for d in ast.symbols] + [0])
    cap = max(1, len(ast.actions)) * max(1, len(ast.symbols)) * (arity + 2)
    S = subsume(s_init)
    A: FrozenSet[Invocation] = frozenset()
    fresh = set(S)
    rounds = 0
    while fresh:
        rounds += 1
        if rounds > cap:
            raise AnalysisError("static analysis did not reach a fixpoint")
        grow = set(S)
        new_A = set(A)
        for c in sorted(fresh, key=Clause.sort_key):
            for inv in actions_that_set(meta, c):
                new_A.add(inv)
                grow |= guards_for(meta, inv, universe)
        A = subsume(new_A)
        reduced = subsume(grow)
        fresh = set(reduced) - set(S)
        S = reduced
    return AnalysisResult(S, A, rounds)


def initial_clauses(meta: ProtocolMeta) -> Tuple[frozenset, fol.ViolationInstantiation, fol.Formula]:
    """Clauses of the negated, instantiated safety property."""
    ground, vi = fol.negate_and_skolemize_safety(meta.ast.safety, meta.ast.node_sort)
    return fol.formula_to_clauses(ground), vi, ground


def analyze(meta: ProtocolMeta) -> Tuple[AnalysisResult, fol.ViolationInstantiation]:
    s_init, vi, _ = initial_clauses(meta)
    return static_analysis(meta, s_init, [c.name for c in vi.node_constants]), vi


# ---------------------------------------------------------------- grounding helpers (used by tests and fuzzing)

def ground_rows(pattern: Sequence[str], sorts: Sequence[str], sizes: Mapping[str, int],
                valuation: Mapping[str, int]) -> List[Tuple[int, ...]]:
    """Concrete rows denoted by a wildcarded argument list under a valuation of constants."""
    choices = []
    for v, s in zip(pattern, sorts):
        choices.append(range(sizes[s]) if v == STAR else (valuation[v],))
    return list(itertools.product(*choices))
