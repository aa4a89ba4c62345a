"""Protocol files: declarations, parser, printer and static preprocessing.

Grammar sketch (``#`` starts a comment)::

    type node @node
    type key
    relation table(node, key, value)
    relation ring(node, node) @static
    function owner(key): node
    axiom <formula>
    init <formula>
    action put(n: node, k: key, v: value) {
        require exists w: value. table(n, k, w)
        table(n, k, *) := false
        table(n, k, v) := true
    }
    safety forall n1: node, n2: node ... . <quantifier-free formula>

Formulas use ``~ & | -> <-> = ~= forall exists true false``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from . import fol
from .fol import (STAR, And, App, BoolLit, Const, Eq, Exists, Forall, Formula, Iff, Implies, Not, Or,
                  Rel, Term, Var)


# ---------------------------------------------------------------- declarations

@dataclass(frozen=True)
class SortDecl:
    name: str
    kind: str  # "node" or "data"


@dataclass(frozen=True)
class SymbolDecl:
    """A relation (out is None) or a function."""
    name: str
    args: Tuple[str, ...]
    out: Optional[str] = None
    mutable: bool = True

    @property
    def is_relation(self) -> bool:
        return self.out is None


@dataclass(frozen=True)
class Update:
    """``target(args) := value``; an args entry of None is the ``*`` wildcard."""
    target: str
    args: Tuple[Optional[Term], ...]
    value: Union[bool, Term]

    def show(self) -> str:
        a = ", ".join("*" if t is None else str(t) for t in self.args)
        lhs = f"{self.target}({a})" if self.args else self.target
        rhs = ("true" if self.value else "false") if isinstance(self.value, bool) else str(self.value)
        return f"{lhs} := {rhs}"


@dataclass(frozen=True)
class ActionDecl:
    name: str
    params: Tuple[Var, ...]
    guard: Formula
    body: Tuple[Update, ...]


@dataclass(frozen=True)
class ProtocolAST:
    sorts: Tuple[SortDecl, ...]
    symbols: Tuple[SymbolDecl, ...]
    axioms: Tuple[Formula, ...]
    init: Tuple[Formula, ...]
    actions: Tuple[ActionDecl, ...]
    safety: Formula
    name: str = "protocol"

    @property
    def node_sort(self) -> str:
        return next(s.name for s in self.sorts if s.kind == "node")

    @property
    def data_sorts(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.sorts if s.kind == "data")

    def symbol(self, name: str) -> SymbolDecl:
        for s in self.symbols:
            if s.name == name:
                return s
        raise KeyError(name)

    def has_symbol(self, name: str) -> bool:
        return any(s.name == name for s in self.symbols)

    def action(self, name: str) -> ActionDecl:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    @property
    def relations(self) -> Tuple[SymbolDecl, ...]:
        return tuple(s for s in self.symbols if s.is_relation)

    @property
    def functions(self) -> Tuple[SymbolDecl, ...]:
        return tuple(s for s in self.symbols if not s.is_relation)

    @property
    def mutable_symbols(self) -> Tuple[SymbolDecl, ...]:
        return tuple(s for s in self.symbols if s.mutable)

    @property
    def static_symbols(self) -> Tuple[SymbolDecl, ...]:
        return tuple(s for s in self.symbols if not s.mutable)


# ---------------------------------------------------------------- diagnostics

class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0, path: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.path = path

    def __str__(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.message}"


# ---------------------------------------------------------------- lexer

@dataclass(frozen=True)
class Tok:
    kind: str   # ident, op, eof
    text: str
    line: int
    col: int


_OPS = [":=", "~=", "<->", "->", "=>", "(", ")", ",", ":", ".", "&", "|", "~", "=", "{", "}", ";", "*", "@", "+"]
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_DOTTED = re.compile(r"[A-Za-z_][A-Za-z0-9_']*(?:\.[A-Za-z_][A-Za-z0-9_']*)?")


def tokenize(src: str, path: str = "<input>", dotted: bool = False) -> List[Tok]:
    toks: List[Tok] = []
    ident = _DOTTED if dotted else _IDENT
    line, col, i = 1, 1, 0
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if c.isspace():
            i, col = i + 1, col + 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        m = ident.match(src, i)
        if m:
            toks.append(Tok("ident", m.group(0), line, col))
            col += len(m.group(0))
            i = m.end()
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Tok("ident", src[i:j], line, col))
            col += j - i
            i = j
            continue
        for op in _OPS:
            if src.startswith(op, i):
                toks.append(Tok("op", op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col, path)
    toks.append(Tok("eof", "", line, col))
    return toks


KEYWORDS = {"type", "relation", "function", "axiom", "init", "action", "safety", "require",
            "forall", "exists", "true", "false"}


# ---------------------------------------------------------------- symbol resolution

class Scope:
    """Resolves identifiers to symbols, sorts and named individuals."""

    def __init__(self, sorts: Dict[str, SortDecl], symbols: Dict[str, SymbolDecl],
                 consts: Optional[Dict[str, Const]] = None):
        self.sorts = sorts
        self.symbols = symbols
        self.consts = dict(consts or {})

    def has_sort(self, name: str) -> bool:
        return name in self.sorts


class Parser:
    def __init__(self, toks: List[Tok], scope: Scope, path: str = "<input>"):
        self.toks = toks
        self.pos = 0
        self.scope = scope
        self.path = path

    # -- token helpers
    @property
    def cur(self) -> Tok:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Tok] = None) -> ParseError:
        t = tok or self.cur
        return ParseError(msg, t.line, t.col, self.path)

    def at(self, text: str) -> bool:
        return self.cur.text == text and self.cur.kind != "eof"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            raise self.error(f"expected '{text}' but found '{self.cur.text or 'end of input'}'")
        t = self.cur
        self.pos += 1
        return t

    def ident(self, what: str = "identifier") -> Tok:
        if self.cur.kind != "ident":
            raise self.error(f"expected {what} but found '{self.cur.text or 'end of input'}'")
        t = self.cur
        self.pos += 1
        return t

    # -- formulas
    def formula(self, env: Dict[str, Var]) -> Formula:
        if self.at("forall") or self.at("exists"):
            return self.quantified(env)
        return self.iff(env)

    def quantified(self, env: Dict[str, Var]) -> Formula:
        kw = self.ident().text
        vs = self.binders()
        self.expect(".")
        inner = dict(env)
        for v in vs:
            inner[v.name] = v
        body = self.formula(inner)
        return Forall(vs, body) if kw == "forall" else Exists(vs, body)

    def binders(self) -> Tuple[Var, ...]:
        pending: List[Tok] = []
        out: List[Var] = []
        while True:
            t = self.ident("variable name")
            pending.append(t)
            if self.accept(":"):
                st = self.ident("sort name")
                if not self.scope.has_sort(st.text):
                    raise self.error(f"undeclared sort '{st.text}'", st)
                out.extend(Var(p.text, st.text) for p in pending)
                pending = []
            if not self.accept(","):
                break
        if pending:
            raise self.error(f"variable '{pending[-1].text}' has no sort", pending[-1])
        names = [v.name for v in out]
        if len(set(names)) != len(names):
            raise self.error("duplicate bound variable")
        return tuple(out)

    def iff(self, env: Dict[str, Var]) -> Formula:
        left = self.implies(env)
        while self.accept("<->"):
            right = self.implies(env)
            left = Iff(left, right)
        return left

    def implies(self, env: Dict[str, Var]) -> Formula:
        left = self.disj(env)
        if self.accept("->"):
            right = self.formula(env) if (self.at("forall") or self.at("exists")) else self.implies(env)
            return Implies(left, right)
        return left

    def disj(self, env: Dict[str, Var]) -> Formula:
        items = [self.conj(env)]
        while self.accept("|"):
            items.append(self.conj(env))
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self, env: Dict[str, Var]) -> Formula:
        items = [self.unary(env)]
        while self.accept("&"):
            items.append(self.unary(env))
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self, env: Dict[str, Var]) -> Formula:
        if self.accept("~"):
            return Not(self.unary(env))
        if self.at("forall") or self.at("exists"):
            return self.quantified(env)
        if self.accept("("):
            f = self.formula(env)
            self.expect(")")
            return f
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        start = self.cur
        if start.kind == "ident" and start.text in self.scope.symbols and self.scope.symbols[start.text].is_relation:
            return self.rel_atom(env)
        left = self.term(env)
        if self.at("=") or self.at("~="):
            op = self.cur.text
            self.pos += 1
            right = self.term(env)
            if _sort_of(left) != _sort_of(right):
                raise self.error(f"sort mismatch: {left} has sort {_sort_of(left)} but {right} has sort {_sort_of(right)}", start)
            eq = Eq(left, right)
            return eq if op == "=" else Not(eq)
        raise self.error(f"expected a formula but found term '{left}'", start)

    def rel_atom(self, env: Dict[str, Var]) -> Formula:
        t = self.ident()
        decl = self.scope.symbols[t.text]
        args = self.arglist(env, allow_star=False)
        self.check_args(decl, args, t)
        return Rel(decl.name, tuple(a for a in args if a is not None))

    def arglist(self, env: Dict[str, Var], allow_star: bool) -> List[Optional[Term]]:
        args: List[Optional[Term]] = []
        if self.accept("("):
            if not self.at(")"):
                while True:
                    if allow_star and self.accept("*"):
                        args.append(None)
                    else:
                        args.append(self.term(env))
                    if not self.accept(","):
                        break
            self.expect(")")
        return args

    def check_args(self, decl: SymbolDecl, args: Sequence[Optional[Term]], tok: Tok) -> None:
        if len(args) != len(decl.args):
            raise self.error(f"'{decl.name}' expects {len(decl.args)} arguments, got {len(args)}", tok)
        for i, (a, s) in enumerate(zip(args, decl.args)):
            if a is not None and _sort_of(a) != s:
                raise self.error(f"sort mismatch in argument {i + 1} of '{decl.name}': expected {s}, got {_sort_of(a)}", tok)

    def term(self, env: Dict[str, Var]) -> Term:
        t = self.ident("term")
        name = t.text
        if name in KEYWORDS:
            raise self.error(f"unexpected keyword '{name}'", t)
        if name in env and not self.at("("):
            return env[name]
        if name in self.scope.symbols:
            decl = self.scope.symbols[name]
            if decl.is_relation:
                raise self.error(f"relation '{name}' used as a term", t)
            args = self.arglist(env, allow_star=False)
            self.check_args(decl, args, t)
            return App(name, tuple(a for a in args if a is not None), decl.out or "")
        if name in self.scope.consts:
            return self.scope.consts[name]
        raise self.error(f"undeclared identifier '{name}'", t)


def _sort_of(t: Term) -> str:
    return t.sort


# ---------------------------------------------------------------- protocol parser

def parse_protocol(source: str, path: str = "<input>", name: Optional[str] = None) -> ProtocolAST:
    """Parse .rml text into a well-sorted ProtocolAST (raises ParseError)."""
    toks = tokenize(source, path)
    scope = Scope({}, {})
    p = Parser(toks, scope, path)
    sorts: Dict[str, SortDecl] = {}
    symbols: Dict[str, SymbolDecl] = {}
    axioms: List[Formula] = []
    inits: List[Formula] = []
    actions: List[ActionDecl] = []
    safety: Optional[Formula] = None
    used_names: Dict[str, str] = {}

    def claim(tok: Tok, what: str) -> None:
        if tok.text in KEYWORDS:
            raise p.error(f"'{tok.text}' is a keyword", tok)
        if tok.text in used_names:
            raise p.error(f"'{tok.text}' is already declared as a {used_names[tok.text]}", tok)
        used_names[tok.text] = what

    def closed(f: Formula, tok: Tok, what: str) -> Formula:
        fv = fol.free_vars(f)
        if fv:
            raise p.error(f"{what} has free variables: {', '.join(sorted(v.name for v in fv))}", tok)
        return f

    while p.cur.kind != "eof":
        kw = p.ident("declaration keyword")
        k = kw.text
        if k == "type":
            t = p.ident("sort name")
            claim(t, "sort")
            kind = "data"
            if p.accept("@"):
                ann = p.ident("annotation")
                if ann.text != "node":
                    raise p.error(f"unknown sort annotation '@{ann.text}'", ann)
                if any(s.kind == "node" for s in sorts.values()):
                    raise p.error("multiple node sorts declared; exactly one sort may be @node", ann)
                kind = "node"
            sorts[t.text] = SortDecl(t.text, kind)
            scope.sorts[t.text] = sorts[t.text]
        elif k in ("relation", "function"):
            t = p.ident("symbol name")
            claim(t, k)
            args: List[str] = []
            if p.accept("("):
                if not p.at(")"):
                    while True:
                        st = p.ident("sort name")
                        if st.text not in sorts:
                            raise p.error(f"undeclared sort '{st.text}'", st)
                        args.append(st.text)
                        if not p.accept(","):
                            break
                p.expect(")")
            out = None
            if k == "function":
                p.expect(":")
                st = p.ident("sort name")
                if st.text not in sorts:
                    raise p.error(f"undeclared sort '{st.text}'", st)
                out = st.text
            mutable = True
            if p.accept("@"):
                ann = p.ident("annotation")
                if ann.text != "static":
                    raise p.error(f"unknown symbol annotation '@{ann.text}'", ann)
                mutable = False
            decl = SymbolDecl(t.text, tuple(args), out, mutable)
            symbols[t.text] = decl
            scope.symbols[t.text] = decl
        elif k == "axiom":
            axioms.append(closed(p.formula({}), kw, "axiom"))
        elif k == "init":
            inits.append(closed(p.formula({}), kw, "init formula"))
        elif k == "safety":
            if safety is not None:
                raise p.error("only one safety property may be declared", kw)
            f = closed(p.formula({}), kw, "safety property")
            if not fol.is_prenex_universal(f):
                raise p.error("non-universal safety property: only leading forall quantifiers are allowed", kw)
            safety = f
        elif k == "action":
            actions.append(_parse_action(p, claim))
        else:
            raise p.error(f"unknown declaration '{k}'", kw)

    if not any(s.kind == "node" for s in sorts.values()):
        raise ParseError("no node sort declared (annotate one sort with @node)", 1, 1, path)
    if safety is None:
        raise ParseError("missing safety property", p.cur.line, p.cur.col, path)
    if name is None:
        name = re.sub(r"\.rml$", "", path.rsplit("/", 1)[-1]) if path != "<input>" else "protocol"
    return ProtocolAST(tuple(sorts.values()), tuple(symbols.values()), tuple(axioms), tuple(inits),
                       tuple(actions), safety, name)


def _parse_action(p: Parser, claim: Callable[[Tok, str], None]) -> ActionDecl:
    t = p.ident("action name")
    claim(t, "action")
    p.expect("(")
    params: Tuple[Var, ...] = ()
    if not p.at(")"):
        params = p.binders()
    p.expect(")")
    for v in params:
        if v.name in p.scope.symbols:
            raise p.error(f"parameter '{v.name}' shadows a declared symbol", t)
    env = {v.name: v for v in params}
    guards: List[Formula] = []
    body: List[Update] = []
    p.expect("{")
    while not p.accept("}"):
        if p.accept(";"):
            continue
        if p.accept("require"):
            g = p.formula(env)
            guards.append(g)
            continue
        tt = p.ident("update target")
        decl = p.scope.symbols.get(tt.text)
        if decl is None:
            raise p.error(f"undeclared identifier '{tt.text}'", tt)
        if not decl.mutable:
            raise p.error(f"cannot assign static symbol '{tt.text}'", tt)
        args = p.arglist(env, allow_star=True)
        p.check_args(decl, args, tt)
        for a in args:
            if isinstance(a, App) and a.args:
                raise p.error("update arguments must be parameters, constants or '*'", tt)
        p.expect(":=")
        if decl.is_relation:
            if p.accept("true"):
                val: Union[bool, Term] = True
            elif p.accept("false"):
                val = False
            else:
                raise p.error("relation updates take 'true' or 'false'", p.cur)
        else:
            vt = p.cur
            val = p.term(env)
            if isinstance(val, App) and val.args:
                raise p.error("update values must be parameters or constants", vt)
            if val.sort != decl.out:
                raise p.error(f"sort mismatch: '{decl.name}' returns {decl.out} but value has sort {val.sort}", vt)
        body.append(Update(decl.name, tuple(args), val))
    guard = fol.conj(guards)
    fv = fol.free_vars(guard) - set(params)
    if fv:
        raise p.error(f"guard of '{t.text}' has free variables {sorted(v.name for v in fv)}", t)
    return ActionDecl(t.text, params, guard, tuple(body))


def parse_formula(text: str, ast: ProtocolAST, env: Optional[Dict[str, Var]] = None,
                  consts: Optional[Dict[str, Const]] = None) -> Formula:
    """Parse a standalone formula over the protocol's vocabulary."""
    scope = Scope({s.name: s for s in ast.sorts}, {s.name: s for s in ast.symbols}, consts)
    p = Parser(tokenize(text), scope)
    f = p.formula(dict(env or {}))
    if p.cur.kind != "eof":
        raise p.error(f"unexpected '{p.cur.text}' after formula")
    return f


# ---------------------------------------------------------------- printer

def print_protocol(ast: ProtocolAST) -> str:
    out: List[str] = []
    for s in ast.sorts:
        out.append(f"type {s.name}" + (" @node" if s.kind == "node" else ""))
    out.append("")
    for d in ast.symbols:
        head = d.name + (f"({', '.join(d.args)})" if d.args else "")
        if d.is_relation:
            line = f"relation {head}"
        else:
            line = f"function {head}: {d.out}"
        out.append(line + ("" if d.mutable else " @static"))
    out.append("")
    for a in ast.axioms:
        out.append(f"axiom {fol.show(a)}")
    for i in ast.init:
        out.append(f"init {fol.show(i)}")
    out.append("")
    for act in ast.actions:
        ps = ", ".join(f"{v.name}: {v.sort}" for v in act.params)
        out.append(f"action {act.name}({ps}) {{")
        if act.guard != fol.TRUE:
            out.append(f"    require {fol.show(act.guard)}")
        for u in act.body:
            out.append(f"    {u.show()}")
        out.append("}")
        out.append("")
    out.append(f"safety {fol.show(ast.safety)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- preprocessing

Atom = Tuple[str, Tuple[str, ...], Union[bool, str]]


@dataclass(frozen=True)
class ActionMeta:
    name: str
    named_arguments: Tuple[str, ...]
    guard_atoms: Tuple[Atom, ...]
    body: Tuple[Atom, ...]
    side_constraints: Tuple[Formula, ...] = ()
    # guard atoms whose universally bound node positions (written "@v" in l)
    # are not needed when one of these pairs of names denotes the same node
    unless: Tuple[Tuple[Atom, Tuple[Tuple[str, str], ...]], ...] = ()


@dataclass(frozen=True)
class ProtocolMeta:
    ast: ProtocolAST
    actions: Tuple[ActionMeta, ...]
    safety_atoms: Tuple[Atom, ...]

    def action(self, name: str) -> ActionMeta:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)


class GuardFragmentError(ParseError):
    pass


def _arg_name(t: Optional[Term], named: set) -> str:
    if isinstance(t, Var) and t.name in named:
        return t.name
    return STAR


def _term_atoms(t: Term, named: set) -> List[Atom]:
    out: List[Atom] = []
    if isinstance(t, App):
        out.append((t.func, tuple(_arg_name(a, named) for a in t.args), STAR))
        for a in t.args:
            out.extend(_term_atoms(a, named))
    return out


def _formula_atoms(f: Formula, named: set, node_sort: Optional[str] = None
                   ) -> Tuple[List[Atom], List[Formula], Dict[Atom, Tuple[Tuple[str, str], ...]]]:
    """Atoms of an NNF formula; equalities between plain parameters go to the side list.

    Universally bound variables of the node sort are kept as "@name" entries:
    the analysis expands them to the violating nodes.  When such an atom sits
    in a disjunction next to a positive equality (the usual `m ~= n -> ...`
    shape) the equality is recorded so that the expansion can skip it.
    """
    atoms: List[Atom] = []
    side: List[Formula] = []
    unless: Dict[Atom, Tuple[Tuple[str, str], ...]] = {}

    def name_of(t: Optional[Term], free: set, univ: Dict[str, str]) -> str:
        if isinstance(t, Var) and t.name in univ:
            return univ[t.name]
        return _arg_name(t, free)

    def go(g: Formula, bound: frozenset, univ: Dict[str, str], eqs: Tuple[Tuple[str, str], ...]) -> None:
        if isinstance(g, BoolLit):
            return
        if isinstance(g, And):
            for x in g.items:
                go(x, bound, univ, eqs)
            return
        if isinstance(g, Or):
            free = named - bound
            pairs = []
            for x in g.items:
                if isinstance(x, Eq) and isinstance(x.left, Var) and isinstance(x.right, Var):
                    a, b = name_of(x.left, free, univ), name_of(x.right, free, univ)
                    if STAR not in (a, b):
                        pairs.append((a, b))
            for x in g.items:
                go(x, bound, univ, eqs + tuple(pairs))
            return
        if isinstance(g, (Forall, Exists)):
            u = {k: v for k, v in univ.items() if k not in {w.name for w in g.vars}}
            if isinstance(g, Forall) and node_sort is not None:
                u.update({v.name: "@" + v.name for v in g.vars if v.sort == node_sort})
            go(g.body, bound | {v.name for v in g.vars}, u, eqs)
            return
        pol = True
        if isinstance(g, Not):
            pol, g = False, g.body
        free = named - bound
        if isinstance(g, Rel):
            atom = (g.name, tuple(name_of(a, free, univ) for a in g.args), pol)
            atoms.append(atom)
            if any(x.startswith("@") for x in atom[1]) and eqs:
                unless[atom] = eqs
            for a in g.args:
                atoms.extend(_term_atoms(a, free))
        elif isinstance(g, Eq):
            l, r = g.left, g.right
            if not isinstance(l, App) and not isinstance(r, App):
                if not bound & ({v.name for v in fol.term_vars(l)} | {v.name for v in fol.term_vars(r)}):
                    side.append(g if pol else Not(g))
                return
            atoms.extend(_term_atoms(l, free))
            atoms.extend(_term_atoms(r, free))
    go(f, frozenset(), {}, ())
    return atoms, side, unless


def check_guard_fragment(g: Formula) -> Optional[str]:
    """None when g (in NNF) is in the supported guard fragment, else a reason."""
    def lit(x: Formula) -> bool:
        return isinstance(x, (Rel, Eq)) or (isinstance(x, Not) and isinstance(x.body, (Rel, Eq)))

    def ok(x: Formula) -> Optional[str]:
        if isinstance(x, BoolLit) or lit(x):
            return None
        if isinstance(x, And):
            for y in x.items:
                r = ok(y)
                if r:
                    return r
            return None
        if isinstance(x, (Forall, Exists)):
            return ok(x.body)
        if isinstance(x, Or):
            # every literal of a disjunction is treated as relevant, which over-approximates
            if all(lit(y) or isinstance(y, And) and all(lit(z) for z in y.items) for y in x.items):
                return None
            return "disjunction of compound formulas"
        return f"unsupported construct {type(x).__name__}"
    return ok(fol.nnf(g))


def preprocess(ast: ProtocolAST) -> ProtocolMeta:
    metas: List[ActionMeta] = []
    node = next((s.name for s in ast.sorts if s.kind == "node"), None)
    for act in ast.actions:
        reason = check_guard_fragment(act.guard)
        if reason:
            raise GuardFragmentError(f"guard of action '{act.name}' is outside the supported fragment: {reason}")
        named = {v.name for v in act.params}
        g_atoms, side, unless = _formula_atoms(fol.nnf(act.guard), named, node)
        body: List[Atom] = []
        for u in act.body:
            o: Union[bool, str] = u.value if isinstance(u.value, bool) else STAR
            body.append((u.target, tuple(_arg_name(a, named) for a in u.args), o))
        metas.append(ActionMeta(act.name, tuple(v.name for v in act.params), tuple(_dedup(g_atoms)),
                                tuple(body), tuple(side), tuple(sorted(unless.items()))))
    vs, phi_body = fol.strip_foralls(ast.safety)
    s_atoms, _, _ = _formula_atoms(fol.nnf(phi_body), {v.name for v in vs})
    return ProtocolMeta(ast, tuple(metas), tuple(_dedup(s_atoms)))


def _dedup(items: List[Atom]) -> List[Atom]:
    seen = set()
    out = []
    for a in items:
        if a not in seen:
            seen.add(a)
            out.append(a)
    return out


def load_protocol(path: str) -> ProtocolAST:
    with open(path, encoding="utf-8") as fh:
        return parse_protocol(fh.read(), path)
