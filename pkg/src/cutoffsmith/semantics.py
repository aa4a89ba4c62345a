"""Finite-domain execution of protocols.

A concrete state is packed into one Python int: every relation row is a bit
and every function row a small bit field.  Guards, bodies and formulas are
compiled to Python source once per instance, which keeps the explicit-state
search fast enough for the cutoff sizes we care about.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from . import fol
from .fol import (And, App, BoolLit, Const, Eq, Exists, Forall, Formula, Iff, Implies, Not, Or, Rel,
                  Term, Var)
from .frontend import ActionDecl, ProtocolAST, SymbolDecl

DEFAULT_STATE_CAP = 5_000_000


class StateCapExceeded(RuntimeError):
    pass


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------- layout

@dataclass(frozen=True)
class Slot:
    decl: SymbolDecl
    offset: int
    sizes: Tuple[int, ...]
    strides: Tuple[int, ...]
    width: int
    rows: int

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    def index(self, args: Sequence[int]) -> int:
        return sum(a * s for a, s in zip(args, self.strides))

    def bit(self, args: Sequence[int]) -> int:
        return self.offset + self.index(args) * self.width


class Layout:
    """Assigns each symbol row a bit range inside the packed state."""

    def __init__(self, symbols: Iterable[SymbolDecl], sizes: Mapping[str, int]):
        self.slots: Dict[str, Slot] = {}
        off = 0
        for d in symbols:
            dims = tuple(sizes[s] for s in d.args)
            strides = []
            acc = 1
            for n in reversed(dims):
                strides.append(acc)
                acc *= n
            width = 1 if d.is_relation else max(1, (sizes[d.out] - 1).bit_length())
            self.slots[d.name] = Slot(d, off, dims, tuple(reversed(strides)), width, acc)
            off += acc * width
        self.bits = off

    def __getitem__(self, name: str) -> Slot:
        return self.slots[name]


# ---------------------------------------------------------------- formula compiler

class CompileContext:
    """Maps symbols of a vocabulary to the state variable holding them."""

    def __init__(self, sizes: Mapping[str, int]):
        self.sizes = dict(sizes)
        self.symbols: Dict[str, Tuple[str, Slot]] = {}
        self.consts: Dict[str, str] = {}
        self.tables: Dict[str, str] = {}  # unary lookup functions, e.g. sim
        self.unroll = 64
        self._n = 0

    def bind_layout(self, statevar: str, layout: Layout, prefix: str = "") -> None:
        for name, slot in layout.slots.items():
            self.symbols[prefix + name] = (statevar, slot)

    def fresh(self) -> str:
        self._n += 1
        return f"_q{self._n}"

    def term(self, t: Term, env: Mapping[str, str]) -> str:
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, Const):
            if t.name not in self.consts:
                raise KeyError(f"no value for constant {t.name}")
            return self.consts[t.name]
        if isinstance(t, App):
            if t.func in self.tables:
                return f"{self.tables[t.func]}[{self.term(t.args[0], env)}]"
            sv, slot = self.symbols[t.func]
            return f"(({sv} >> {self._bit(slot, t.args, env)}) & {slot.mask})"
        raise TypeError(t)

    def _bit(self, slot: Slot, args: Sequence[Term], env: Mapping[str, str]) -> str:
        parts = [str(slot.offset)]
        for a, st in zip(args, slot.strides):
            w = st * slot.width
            parts.append(f"{self.term(a, env)}*{w}" if w != 1 else self.term(a, env))
        return "(" + " + ".join(parts) + ")"

    def formula(self, f: Formula, env: Mapping[str, str]) -> str:
        if isinstance(f, BoolLit):
            return "True" if f.value else "False"
        if isinstance(f, Rel):
            sv, slot = self.symbols[f.name]
            if not f.args:
                return f"(({sv} >> {slot.offset}) & 1)"
            return f"(({sv} >> {self._bit(slot, f.args, env)}) & 1)"
        if isinstance(f, Eq):
            return f"({self.term(f.left, env)} == {self.term(f.right, env)})"
        if isinstance(f, Not):
            return f"(not {self.formula(f.body, env)})"
        if isinstance(f, And):
            return "(" + " and ".join(self.formula(x, env) for x in f.items) + ")" if f.items else "True"
        if isinstance(f, Or):
            return "(" + " or ".join(self.formula(x, env) for x in f.items) + ")" if f.items else "False"
        if isinstance(f, Implies):
            return f"((not {self.formula(f.left, env)}) or {self.formula(f.right, env)})"
        if isinstance(f, Iff):
            return f"(bool({self.formula(f.left, env)}) == bool({self.formula(f.right, env)}))"
        if isinstance(f, (Forall, Exists)):
            combos = 1
            for v in f.vars:
                combos *= self.sizes[v.sort]
            if combos <= self.unroll:
                # small domains: expand into a flat chain the compiler can constant-fold
                parts = []
                for vals in itertools.product(*(range(self.sizes[v.sort]) for v in f.vars)):
                    inner = dict(env)
                    inner.update({v.name: str(x) for v, x in zip(f.vars, vals)})
                    parts.append(self.formula(f.body, inner))
                op = " and " if isinstance(f, Forall) else " or "
                return "(" + op.join(parts) + ")" if parts else ("True" if isinstance(f, Forall) else "False")
            inner = dict(env)
            gens = []
            for v in f.vars:
                py = self.fresh()
                inner[v.name] = py
                gens.append(f"for {py} in range({self.sizes[v.sort]})")
            body = self.formula(f.body, inner)
            fn = "all" if isinstance(f, Forall) else "any"
            return f"{fn}({body} {' '.join(gens)})"
        raise TypeError(f)


def compile_predicate(ctx: CompileContext, f: Formula, args: Sequence[str], extra: Optional[dict] = None) -> Callable:
    """Compile a closed formula into a function of the given state variables."""
    src = f"def _pred({', '.join(args)}):\n    return bool({ctx.formula(f, {})})\n"
    ns: dict = dict(extra or {})
    exec(src, ns)
    return ns["_pred"]


# ---------------------------------------------------------------- instance

Label = Tuple[str, Tuple[int, ...]]


@dataclass
class Trace:
    states: List[int]
    labels: List[Label]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class ModelCheckResult:
    safe: bool
    states: int
    trace: Optional[Trace] = None


class Instance:
    """The transition system of a protocol at one finite domain interpretation."""

    def __init__(self, ast: ProtocolAST, sizes: Mapping[str, int],
                 names: Optional[Mapping[str, Sequence[str]]] = None):
        for s in ast.sorts:
            if s.name not in sizes:
                raise DomainError(f"no domain size for sort '{s.name}'")
            if sizes[s.name] < 1:
                raise DomainError(f"domain of sort '{s.name}' is empty")
        self.ast = ast
        self.sizes = {s.name: int(sizes[s.name]) for s in ast.sorts}
        self.names: Dict[str, List[str]] = {}
        for s in ast.sorts:
            given = (names or {}).get(s.name)
            if given is not None:
                if len(given) != self.sizes[s.name]:
                    raise DomainError(f"sort '{s.name}' has {self.sizes[s.name]} elements but {len(given)} names")
                self.names[s.name] = list(given)
            else:
                self.names[s.name] = [f"{s.name}{i}" for i in range(self.sizes[s.name])]
        self.layout = Layout(ast.symbols, self.sizes)
        self.ctx = CompileContext(self.sizes)
        self.ctx.bind_layout("s", self.layout)
        self._safety = compile_predicate(self.ctx, ast.safety, ["s"])
        self._axioms = compile_predicate(self.ctx, fol.conj(ast.axioms), ["s"])
        self._guards: Dict[str, Callable] = {}
        self._apply: Dict[str, Callable] = {}
        self._succ: Dict[str, Callable] = {}
        for act in ast.actions:
            self._compile_action(act)
        self._initial: Optional[List[int]] = None

    # -- naming
    def element(self, sort: str, name: str) -> int:
        return self.names[sort].index(name)

    def show_label(self, label: Label) -> str:
        name, args = label
        act = self.ast.action(name)
        return f"{name}({', '.join(self.names[v.sort][a] for v, a in zip(act.params, args))})"

    # -- state access
    def get(self, s: int, name: str, args: Sequence[int] = ()) -> int:
        slot = self.layout[name]
        return (s >> slot.bit(args)) & slot.mask

    def set(self, s: int, name: str, args: Sequence[int], value: Union[bool, int]) -> int:
        slot = self.layout[name]
        b = slot.bit(args)
        return (s & ~(slot.mask << b)) | (int(value) << b)

    def rows(self, name: str) -> Iterator[Tuple[int, ...]]:
        slot = self.layout[name]
        return itertools.product(*(range(n) for n in slot.sizes))

    def atoms(self, s: int) -> Dict[str, Union[bool, str]]:
        """Readable view: 'r(a,b)' -> bool, 'f(a)' -> element name."""
        out: Dict[str, Union[bool, str]] = {}
        for name, slot in self.layout.slots.items():
            d = slot.decl
            for row in self.rows(name):
                key = name + ("(" + ",".join(self.names[srt][i] for srt, i in zip(d.args, row)) + ")" if row else "")
                v = self.get(s, name, row)
                out[key] = bool(v) if d.is_relation else self.names[d.out][v]
        return out

    def true_atoms(self, s: int) -> List[str]:
        return [k if v is True else f"{k} = {v}" for k, v in self.atoms(s).items() if v is not False]

    def diff(self, s: int, t: int) -> List[str]:
        a, b = self.atoms(s), self.atoms(t)
        out = []
        for k in a:
            if a[k] != b[k]:
                if isinstance(b[k], bool):
                    out.append(("+" if b[k] else "-") + k)
                else:
                    out.append(f"{k} = {b[k]}")
        return out

    # -- predicates
    def safe(self, s: int) -> bool:
        return self._safety(s)

    def satisfies_axioms(self, s: int) -> bool:
        return self._axioms(s)

    def evaluate(self, f: Formula, s: int, env: Optional[Mapping[str, int]] = None) -> bool:
        env = dict(env or {})
        names = {k: f"_e_{k}" for k in env}
        src = f"def _f(s, {', '.join(names.values())}):\n    return bool({self.ctx.formula(f, names)})\n" if names else \
            f"def _f(s):\n    return bool({self.ctx.formula(f, {})})\n"
        ns: dict = {}
        exec(src, ns)
        return ns["_f"](s, *env.values())

    # -- actions
    def _compile_action(self, act: ActionDecl) -> None:
        ctx = self.ctx
        pnames = [f"p_{i}" for i in range(len(act.params))]
        env = {v.name: p for v, p in zip(act.params, pnames)}
        guard_src = ctx.formula(act.guard, env)

        # body: terms read the pre-state, later writes win
        lines = ["    t = s"]
        for u in act.body:
            slot = self.layout[u.target]
            stars = [i for i, a in enumerate(u.args) if a is None]
            if isinstance(u.value, bool):
                val = "1" if u.value else "0"
            else:
                val = ctx.term(u.value, env)
            fixed = [(i, ctx.term(a, env)) for i, a in enumerate(u.args) if a is not None]
            base = " + ".join([str(slot.offset)] + [f"{e}*{slot.strides[i] * slot.width}" for i, e in fixed])
            if not stars:
                lines.append(f"    b = {base}")
                lines.append(f"    t = (t & ~({slot.mask} << b)) | ({val} << b)")
            else:
                # rows reachable by the wildcard positions, relative to base
                rel = []
                for combo in itertools.product(*(range(slot.sizes[i]) for i in stars)):
                    rel.append(sum(c * slot.strides[i] * slot.width for c, i in zip(combo, stars)))
                clear = sum(slot.mask << r for r in rel)
                rep = sum(1 << r for r in rel)
                lines.append(f"    b = {base}")
                lines.append(f"    t = (t & ~({clear} << b)) | (({val} * {rep}) << b)")
        lines.append("    return t")
        sig = ", ".join(["s"] + pnames)
        src = f"def _guard({sig}):\n    return bool({guard_src})\n"
        src += f"def _apply({sig}):\n" + "\n".join(lines) + "\n"

        # successor generator: enumerate the set rows of one positive guard
        # atom when possible, then loop over the remaining parameters with
        # each guard conjunct checked as soon as its parameters are bound
        conjuncts = list(_top_conjuncts(fol.nnf(act.guard)))
        pidx = {v.name: i for i, v in enumerate(act.params)}
        driver = None
        for c in conjuncts:
            if isinstance(c, Rel) and c.args and all(isinstance(a, Var) and a.name in pidx for a in c.args) \
                    and len(set(c.args)) == len(c.args):
                if driver is None or len(c.args) > len(driver.args):
                    driver = c
        order: List[int] = []
        if driver is not None:
            order.extend(pidx[a.name] for a in driver.args)
        for c in conjuncts:
            for v in sorted(fol.free_vars(c), key=lambda v: v.name):
                if v.name in pidx and pidx[v.name] not in order:
                    order.append(pidx[v.name])
        order.extend(i for i in range(len(act.params)) if i not in order)
        level = {}
        bound_at = 0 if driver is None else len(driver.args)
        for depth, i in enumerate(order):
            level[i] = max(depth + 1, bound_at) if driver is not None else depth + 1
        checks: Dict[int, List[str]] = {}
        for c in conjuncts:
            if c is driver:
                continue
            used = [level[pidx[v.name]] for v in fol.free_vars(c) if v.name in pidx]
            checks.setdefault(max(used) if used else 0, []).append(ctx.formula(c, env))
        gl = ["def _succ(s, out, keep_loops=True):"]
        ind = "    "
        for c in checks.get(0, []):
            gl.append(f"{ind}if not {c}: return")
        depth0 = 0
        if driver is not None:
            slot = self.layout[driver.name]
            gl.append(f"{ind}m = (s >> {slot.offset}) & {(1 << slot.rows) - 1}")
            gl.append(f"{ind}while m:")
            ind += "    "
            gl.append(f"{ind}low = m & -m")
            gl.append(f"{ind}m ^= low")
            gl.append(f"{ind}r = low.bit_length() - 1")
            for a, st, n in zip(driver.args, slot.strides, slot.sizes):
                gl.append(f"{ind}{env[a.name]} = (r // {st}) % {n}")
            depth0 = len(driver.args)
            for c in checks.get(depth0, []):
                gl.append(f"{ind}if not {c}: continue")
        for depth in range(depth0, len(order)):
            i = order[depth]
            gl.append(f"{ind}for {pnames[i]} in range({self.sizes[act.params[i].sort]}):")
            ind += "    "
            for c in checks.get(depth + 1, []):
                gl.append(f"{ind}if not {c}: continue")
        gl.append(f"{ind}t = _apply({sig})")
        gl.append(f"{ind}if keep_loops or t != s: out.append((t, ({', '.join(pnames)}{',' if pnames else ''})))")
        src += "\n".join(gl) + "\n"
        ns: dict = {}
        exec(src, ns)
        self._guards[act.name] = ns["_guard"]
        self._apply[act.name] = ns["_apply"]
        self._succ[act.name] = ns["_succ"]

    def enabled(self, s: int, action: str, args: Sequence[int]) -> bool:
        return self._guards[action](s, *args)

    def step(self, s: int, action: str, args: Sequence[int]) -> Optional[int]:
        """Post-state, or None when the guard blocks."""
        if not self._guards[action](s, *args):
            return None
        return self._apply[action](s, *args)

    def successors(self, s: int) -> List[Tuple[int, Label]]:
        out: List[Tuple[int, Label]] = []
        for name, fn in self._succ.items():
            tmp: List[Tuple[int, tuple]] = []
            fn(s, tmp)
            out.extend((t, (name, args)) for t, args in tmp)
        return out

    # -- initial states
    def initial_states(self, cap: int = DEFAULT_STATE_CAP) -> List[int]:
        if self._initial is None:
            self._initial = list(self._enumerate_initial(cap))
        return self._initial

    def _enumerate_initial(self, cap: int) -> Iterator[int]:
        constraints = [c for f in (*self.ast.axioms, *self.ast.init) for c in _top_conjuncts(f)]
        forced_false = set()
        for c in constraints:
            name = _all_false_symbol(c)
            if name:
                forced_false.add(name)
        free = [d for d in self.ast.symbols if d.name not in forced_false]
        # check each constraint as soon as every symbol it mentions is assigned
        order = {d.name: i for i, d in enumerate(free)}
        checks: Dict[int, List[Callable]] = {}
        for c in constraints:
            syms = [order[n] for n in fol.symbols(c) if n in order]
            at = max(syms) if syms else -1
            checks.setdefault(at, []).append(compile_predicate(self.ctx, c, ["s"]))
        if any(not chk(0) for chk in checks.get(-1, [])):
            return
        produced = 0

        def values(d: SymbolDecl) -> Iterator[int]:
            slot = self.layout[d.name]
            if d.is_relation:
                total = 1 << slot.rows
                if total > cap:
                    raise StateCapExceeded(f"too many candidate interpretations for '{d.name}'")
                for m in range(total):
                    v = 0
                    for r in range(slot.rows):
                        if (m >> r) & 1:
                            v |= 1 << (slot.offset + r)
                    yield v
            else:
                n = self.sizes[d.out]
                if n ** slot.rows > cap:
                    raise StateCapExceeded(f"too many candidate interpretations for '{d.name}'")
                for combo in itertools.product(range(n), repeat=slot.rows):
                    v = 0
                    for r, x in enumerate(combo):
                        v |= x << (slot.offset + r * slot.width)
                    yield v

        def rec(i: int, s: int) -> Iterator[int]:
            nonlocal produced
            if i == len(free):
                produced += 1
                if produced > cap:
                    raise StateCapExceeded(f"more than {cap} initial states")
                yield s
                return
            for v in values(free[i]):
                t = s | v
                if all(chk(t) for chk in checks.get(i, [])):
                    yield from rec(i + 1, t)
        yield from rec(0, 0)

    # -- search
    def model_check(self, cap: int = DEFAULT_STATE_CAP) -> ModelCheckResult:
        """Breadth-first reachability; a violation comes with a shortest trace."""
        parent: Dict[int, Optional[Tuple[int, Label]]] = {}
        queue: deque = deque()
        for s in self.initial_states(cap):
            if s not in parent:
                parent[s] = None
                if not self._safety(s):
                    return ModelCheckResult(False, len(parent), self._trace(parent, s))
                queue.append(s)
        succ = list(self._succ.items())
        safety = self._safety
        while queue:
            s = queue.popleft()
            for name, fn in succ:
                tmp: list = []
                fn(s, tmp, False)
                for t, args in tmp:
                    if t in parent:
                        continue
                    parent[t] = (s, (name, args))
                    if not safety(t):
                        return ModelCheckResult(False, len(parent), self._trace(parent, t))
                    if len(parent) > cap:
                        raise StateCapExceeded(f"more than {cap} reachable states")
                    queue.append(t)
        return ModelCheckResult(True, len(parent))

    @staticmethod
    def _trace(parent: Mapping[int, Optional[Tuple[int, Label]]], s: int) -> Trace:
        states, labels = [s], []
        while parent[s] is not None:
            prev, lab = parent[s]
            states.append(prev)
            labels.append(lab)
            s = prev
        return Trace(states[::-1], labels[::-1])

    def random_trace(self, length: int, seed: Union[int, random.Random]) -> Trace:
        rng = seed if isinstance(seed, random.Random) else random.Random(seed)
        init = self.initial_states()
        if not init:
            raise DomainError("protocol has no initial state at this domain")
        s = rng.choice(init)
        tr = Trace([s], [])
        for _ in range(length):
            options = self.successors(s)
            if not options:
                break
            s, lab = rng.choice(options)
            tr.states.append(s)
            tr.labels.append(lab)
        return tr

    def validate_trace(self, tr: Trace) -> bool:
        if not tr.states or tr.states[0] not in set(self.initial_states()):
            return False
        for i, (name, args) in enumerate(tr.labels):
            if self.step(tr.states[i], name, args) != tr.states[i + 1]:
                return False
        return True

    def dump_trace(self, tr: Trace) -> str:
        lines = ["#init: " + ", ".join(self.true_atoms(tr.states[0]))]
        for i, lab in enumerate(tr.labels):
            lines.append(f"#step {i + 1}: {self.show_label(lab)}")
            for d in self.diff(tr.states[i], tr.states[i + 1]):
                lines.append(f"  {d}")
        return "\n".join(lines)


def _top_conjuncts(f: Formula) -> Iterator[Formula]:
    if isinstance(f, And):
        for x in f.items:
            yield from _top_conjuncts(x)
    elif isinstance(f, Forall) and isinstance(f.body, And):
        for x in f.body.items:
            yield from _top_conjuncts(Forall(f.vars, x))
    else:
        yield f


def _all_false_symbol(f: Formula) -> Optional[str]:
    """Name of r when f is `forall xs. ~r(xs)` with distinct bound arguments."""
    vs, body = fol.strip_foralls(f)
    if isinstance(body, Not) and isinstance(body.body, Rel):
        args = body.body.args
        if all(isinstance(a, Var) for a in args) and len(set(args)) == len(args) and set(args) <= set(vs):
            return body.body.name
    return None


def parse_bounds(items: Iterable[str]) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for it in items:
        k, _, v = it.partition("=")
        if not k or not v.strip().isdigit():
            raise ValueError(f"bad bound '{it}', expected sort=N")
        out[k.strip()] = int(v)
    return out
