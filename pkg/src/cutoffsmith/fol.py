"""Many-sorted first-order terms and formulas.

Everything here is immutable.  Symbols are referred to by name only; the
signature (argument sorts, output sort) lives in the protocol declarations.
Formulas over two vocabularies are built by renaming symbols with a prefix
(see ``retag``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

STAR = "*"


# ---------------------------------------------------------------- terms

@dataclass(frozen=True)
class Var:
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    """A named individual that is not a protocol symbol (violation constants, cutoff nodes)."""
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    func: str
    args: Tuple["Term", ...]
    sort: str

    def __str__(self) -> str:
        if not self.args:
            return self.func
        return f"{self.func}({', '.join(map(str, self.args))})"


Term = Union[Var, Const, App]


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Rel:
    name: str
    args: Tuple[Term, ...]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    items: Tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    items: Tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    vars: Tuple[Var, ...]
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    vars: Tuple[Var, ...]
    body: "Formula"


Formula = Union[BoolLit, Rel, Eq, Not, And, Or, Implies, Iff, Forall, Exists]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


class SortError(Exception):
    pass


def conj(items: Iterable[Formula]) -> Formula:
    flat: List[Formula] = []
    for f in items:
        if isinstance(f, And):
            flat.extend(f.items)
        elif f == TRUE:
            continue
        else:
            flat.append(f)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(items: Iterable[Formula]) -> Formula:
    flat: List[Formula] = []
    for f in items:
        if isinstance(f, Or):
            flat.extend(f.items)
        elif f == FALSE:
            continue
        else:
            flat.append(f)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(f: Formula) -> Formula:
    if isinstance(f, BoolLit):
        return BoolLit(not f.value)
    if isinstance(f, Not):
        return f.body
    return Not(f)


# ---------------------------------------------------------------- printing

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}


def show(f: Formula) -> str:
    """Render in the concrete .rml expression syntax (re-parseable)."""
    return _show(f, 0)


def _show(f: Formula, ctx: int) -> str:
    if isinstance(f, BoolLit):
        return "true" if f.value else "false"
    if isinstance(f, Rel):
        return f.name if not f.args else f"{f.name}({', '.join(map(str, f.args))})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Not):
        if isinstance(f.body, Eq):
            return f"{f.body.left} ~= {f.body.right}"
        return "~" + _show(f.body, 10)
    if isinstance(f, (Forall, Exists)):
        kw = "forall" if isinstance(f, Forall) else "exists"
        bs = ", ".join(f"{v.name}: {v.sort}" for v in f.vars)
        s = f"{kw} {bs}. {_show(f.body, 0)}"
        return f"({s})" if ctx > 0 else s
    p = _PREC[type(f)]
    if isinstance(f, And):
        s = " & ".join(_show(x, p + 1) for x in f.items)
    elif isinstance(f, Or):
        s = " | ".join(_show(x, p + 1) for x in f.items)
    elif isinstance(f, Implies):
        s = f"{_show(f.left, p + 1)} -> {_show(f.right, p)}"
    else:
        s = f"{_show(f.left, p + 1)} <-> {_show(f.right, p + 1)}"
    return f"({s})" if ctx > p else s


# ---------------------------------------------------------------- traversal

def term_vars(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    elif isinstance(t, App):
        for a in t.args:
            yield from term_vars(a)


def free_vars(f: Formula) -> frozenset:
    if isinstance(f, BoolLit):
        return frozenset()
    if isinstance(f, Rel):
        return frozenset(v for a in f.args for v in term_vars(a))
    if isinstance(f, Eq):
        return frozenset(term_vars(f.left)) | frozenset(term_vars(f.right))
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(x) for x in f.items))
    if isinstance(f, (Implies, Iff)):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (Forall, Exists)):
        return free_vars(f.body) - frozenset(f.vars)
    raise TypeError(f)


def all_var_names(f: Formula) -> set:
    """Names of every variable, free or bound."""
    out = {v.name for v in free_vars(f)}
    for sub in subformulas(f):
        if isinstance(sub, (Forall, Exists)):
            out.update(v.name for v in sub.vars)
    return out


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.body)
    elif isinstance(f, (And, Or)):
        for x in f.items:
            yield from subformulas(x)
    elif isinstance(f, (Implies, Iff)):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, (Forall, Exists)):
        yield from subformulas(f.body)


def term_apps(t: Term) -> Iterator[App]:
    if isinstance(t, App):
        yield t
        for a in t.args:
            yield from term_apps(a)


def symbols(f: Formula) -> set:
    """Names of relation and function symbols occurring in f."""
    out = set()
    for sub in subformulas(f):
        terms: Tuple[Term, ...] = ()
        if isinstance(sub, Rel):
            out.add(sub.name)
            terms = sub.args
        elif isinstance(sub, Eq):
            terms = (sub.left, sub.right)
        for t in terms:
            out.update(a.func for a in term_apps(t))
    return out


# ---------------------------------------------------------------- substitution

def subst_term(t: Term, binding: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return binding.get(t, t)
    if isinstance(t, App):
        return App(t.func, tuple(subst_term(a, binding) for a in t.args), t.sort)
    return t


def _fresh(base: str, taken: set) -> str:
    for i in itertools.count(1):
        cand = f"{base}_{i}"
        if cand not in taken:
            return cand
    raise AssertionError


def substitute(f: Formula, binding: Mapping[Var, Term]) -> Formula:
    """Capture-avoiding substitution of free variables."""
    for v, t in binding.items():
        ts = t.sort if not isinstance(t, Var) else t.sort
        if ts != v.sort:
            raise SortError(f"cannot bind {v.name}:{v.sort} to {t} of sort {ts}")
    binding = {v: t for v, t in binding.items() if v != t}
    if not binding:
        return f
    return _subst(f, binding)


def _subst(f: Formula, b: Mapping[Var, Term]) -> Formula:
    if isinstance(f, BoolLit):
        return f
    if isinstance(f, Rel):
        return Rel(f.name, tuple(subst_term(a, b) for a in f.args))
    if isinstance(f, Eq):
        return Eq(subst_term(f.left, b), subst_term(f.right, b))
    if isinstance(f, Not):
        return Not(_subst(f.body, b))
    if isinstance(f, And):
        return And(tuple(_subst(x, b) for x in f.items))
    if isinstance(f, Or):
        return Or(tuple(_subst(x, b) for x in f.items))
    if isinstance(f, Implies):
        return Implies(_subst(f.left, b), _subst(f.right, b))
    if isinstance(f, Iff):
        return Iff(_subst(f.left, b), _subst(f.right, b))
    if isinstance(f, (Forall, Exists)):
        inner = {v: t for v, t in b.items() if v not in f.vars}
        if not inner:
            return f
        incoming = set()
        for t in inner.values():
            incoming.update(v.name for v in term_vars(t))
        taken = incoming | all_var_names(f) | {v.name for v in inner}
        new_vars = []
        rename: Dict[Var, Term] = {}
        for v in f.vars:
            if v.name in incoming:
                nv = Var(_fresh(v.name, taken), v.sort)
                taken.add(nv.name)
                rename[v] = nv
                new_vars.append(nv)
            else:
                new_vars.append(v)
        body = _subst(f.body, rename) if rename else f.body
        return type(f)(tuple(new_vars), _subst(body, inner))
    raise TypeError(f)


def map_terms(f: Formula, fn: Callable[[Term], Term]) -> Formula:
    """Rebuild f applying fn bottom-up to every term."""
    def mt(t: Term) -> Term:
        if isinstance(t, App):
            t = App(t.func, tuple(mt(a) for a in t.args), t.sort)
        return fn(t)

    def go(g: Formula) -> Formula:
        if isinstance(g, BoolLit):
            return g
        if isinstance(g, Rel):
            return Rel(g.name, tuple(mt(a) for a in g.args))
        if isinstance(g, Eq):
            return Eq(mt(g.left), mt(g.right))
        if isinstance(g, Not):
            return Not(go(g.body))
        if isinstance(g, And):
            return And(tuple(go(x) for x in g.items))
        if isinstance(g, Or):
            return Or(tuple(go(x) for x in g.items))
        if isinstance(g, Implies):
            return Implies(go(g.left), go(g.right))
        if isinstance(g, Iff):
            return Iff(go(g.left), go(g.right))
        if isinstance(g, (Forall, Exists)):
            vs = tuple(mt(v) for v in g.vars)
            return type(g)(vs, go(g.body))  # type: ignore[arg-type]
        raise TypeError(g)
    return go(f)


def retag(f: Formula, rename: Callable[[str], str], sort_map: Optional[Mapping[str, str]] = None) -> Formula:
    """Rename relation/function symbols (and optionally sorts) throughout f."""
    sm = dict(sort_map or {})

    def s(x: str) -> str:
        return sm.get(x, x)

    def mt(t: Term) -> Term:
        if isinstance(t, Var):
            return Var(t.name, s(t.sort))
        if isinstance(t, Const):
            return Const(t.name, s(t.sort))
        return App(rename(t.func), tuple(mt(a) for a in t.args), s(t.sort))

    def go(g: Formula) -> Formula:
        if isinstance(g, BoolLit):
            return g
        if isinstance(g, Rel):
            return Rel(rename(g.name), tuple(mt(a) for a in g.args))
        if isinstance(g, Eq):
            return Eq(mt(g.left), mt(g.right))
        if isinstance(g, Not):
            return Not(go(g.body))
        if isinstance(g, And):
            return And(tuple(go(x) for x in g.items))
        if isinstance(g, Or):
            return Or(tuple(go(x) for x in g.items))
        if isinstance(g, Implies):
            return Implies(go(g.left), go(g.right))
        if isinstance(g, Iff):
            return Iff(go(g.left), go(g.right))
        if isinstance(g, (Forall, Exists)):
            return type(g)(tuple(Var(v.name, s(v.sort)) for v in g.vars), go(g.body))
        raise TypeError(g)
    return go(f)


# ---------------------------------------------------------------- normal forms

def nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form; implications and biconditionals are expanded."""
    if isinstance(f, BoolLit):
        return BoolLit(f.value == positive)
    if isinstance(f, (Rel, Eq)):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return nnf(f.body, not positive)
    if isinstance(f, And):
        parts = [nnf(x, positive) for x in f.items]
        return conj(parts) if positive else disj(parts)
    if isinstance(f, Or):
        parts = [nnf(x, positive) for x in f.items]
        return disj(parts) if positive else conj(parts)
    if isinstance(f, Implies):
        return nnf(Or((Not(f.left), f.right)), positive)
    if isinstance(f, Iff):
        a, b = f.left, f.right
        return nnf(And((Implies(a, b), Implies(b, a))), positive)
    if isinstance(f, Forall):
        body = nnf(f.body, positive)
        return Forall(f.vars, body) if positive else Exists(f.vars, body)
    if isinstance(f, Exists):
        body = nnf(f.body, positive)
        return Exists(f.vars, body) if positive else Forall(f.vars, body)
    raise TypeError(f)


def strip_foralls(f: Formula) -> Tuple[Tuple[Var, ...], Formula]:
    vs: List[Var] = []
    while isinstance(f, Forall):
        vs.extend(f.vars)
        f = f.body
    return tuple(vs), f


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(s, (Forall, Exists)) for s in subformulas(f))


def is_prenex_universal(f: Formula) -> bool:
    _, body = strip_foralls(f)
    return is_quantifier_free(body)


def literals(f: Formula) -> Iterator[Tuple[Formula, bool]]:
    """Atoms of an NNF formula with their polarity (quantifiers are looked through)."""
    if isinstance(f, (Rel, Eq)):
        yield f, True
    elif isinstance(f, Not):
        yield f.body, False
    elif isinstance(f, (And, Or)):
        for x in f.items:
            yield from literals(x)
    elif isinstance(f, (Forall, Exists)):
        yield from literals(f.body)
    elif isinstance(f, BoolLit):
        return
    else:
        yield from literals(nnf(f))


# ---------------------------------------------------------------- violation instantiation

@dataclass(frozen=True)
class ViolationInstantiation:
    """Fresh constants standing for the witnesses of a safety violation."""
    node_constants: Tuple[Const, ...]
    data_constants: Tuple[Const, ...]
    distinct: Tuple[Tuple[str, str], ...]
    node_sort: str

    @property
    def constants(self) -> Tuple[Const, ...]:
        return self.node_constants + self.data_constants

    def by_name(self) -> Dict[str, Const]:
        return {c.name: c for c in self.constants}


def violation_name(var: str) -> str:
    return f"{var}_L"


def negate_and_skolemize_safety(phi: Formula, node_sort: str) -> Tuple[Formula, ViolationInstantiation]:
    """Negate a prenex-universal property and replace its variables by fresh constants.

    Returns the ground negation and the constants, in quantifier order.
    """
    if not is_prenex_universal(phi):
        raise SortError("safety property is not prenex-universal")
    vs, body = strip_foralls(phi)
    consts = {v: Const(violation_name(v.name), v.sort) for v in vs}
    if len({c.name for c in consts.values()}) != len(consts):
        raise SortError("safety property binds the same variable name twice")
    ground = nnf(substitute(body, consts), positive=False)
    ground = simplify_ground(ground)
    nodes = tuple(c for v, c in consts.items() if v.sort == node_sort)
    data = tuple(c for v, c in consts.items() if v.sort != node_sort)
    distinct = tuple((a.name, b.name) for a, b in itertools.combinations(nodes, 2))
    return ground, ViolationInstantiation(nodes, data, distinct, node_sort)


def simplify_ground(f: Formula) -> Formula:
    """Fold boolean constants; leaves everything else alone."""
    if isinstance(f, Not):
        b = simplify_ground(f.body)
        return neg(b) if isinstance(b, BoolLit) else Not(b)
    if isinstance(f, And):
        parts = [simplify_ground(x) for x in f.items]
        if FALSE in parts:
            return FALSE
        return conj(parts)
    if isinstance(f, Or):
        parts = [simplify_ground(x) for x in f.items]
        if TRUE in parts:
            return TRUE
        return disj(parts)
    return f


# ---------------------------------------------------------------- clauses

@dataclass(frozen=True, order=True)
class Clause:
    """Possibly wildcarded atom (x, L, o); L entries are constant names or STAR.

    o is True/False for relations, a constant name or STAR for functions.
    """
    x: str
    args: Tuple[str, ...]
    o: Union[bool, str]

    def __str__(self) -> str:
        inner = f"{self.x}({','.join(self.args)})" if self.args else self.x
        if self.o is True:
            return inner
        if self.o is False:
            return "~" + inner
        return f"{inner} = {self.o}"

    def sort_key(self) -> Tuple:
        o = self.o
        okey = (0, "") if o is True else (1, "") if o is False else (2, str(o))
        return (self.x, self.args, okey)


def _term_value(t: Term) -> str:
    if isinstance(t, Const):
        return t.name
    return STAR


def formula_to_clauses(ground: Formula) -> frozenset:
    """Collect one clause per relation/function literal of a ground formula.

    Equalities between plain constants are dropped; nested function
    applications contribute their own clause and a STAR in the enclosing slot.
    """
    out = set()
    for atom, pol in literals(nnf(ground)):
        if isinstance(atom, Rel):
            out.add(Clause(atom.name, tuple(_term_value(a) for a in atom.args), pol))
            for a in atom.args:
                out.update(_nested(a))
        elif isinstance(atom, Eq):
            l, r = atom.left, atom.right
            if isinstance(l, App) and not isinstance(r, App):
                l, r = r, l
            if isinstance(r, App):
                o = _term_value(l) if pol else STAR
                out.add(Clause(r.func, tuple(_term_value(a) for a in r.args), o))
                for a in r.args:
                    out.update(_nested(a))
                if isinstance(l, App):
                    out.add(Clause(l.func, tuple(_term_value(a) for a in l.args), STAR))
                    for a in l.args:
                        out.update(_nested(a))
    return frozenset(out)


def _nested(t: Term) -> Iterator[Clause]:
    if isinstance(t, App):
        yield Clause(t.func, tuple(_term_value(a) for a in t.args), STAR)
        for a in t.args:
            yield from _nested(a)
