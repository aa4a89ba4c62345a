import random

from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import Naive
from cutoffsmith import fol
from cutoffsmith.fol import (And, App, Clause, Const, Eq, Exists, Forall, Iff, Implies, Not, Or, Rel, Var)
from cutoffsmith.frontend import parse_protocol

VOCAB = parse_protocol("""
type node @node
type value
relation r(node, value)
relation p(node)
function f(node): value
safety forall n: node. p(n)
""")
N = [Var("n1", "node"), Var("n2", "node")]
V = [Var("x1", "value"), Var("x2", "value")]


def atoms():
    rel = st.builds(lambda n, v: Rel("r", (n, v)), st.sampled_from(N), st.sampled_from(V))
    unary = st.builds(lambda n: Rel("p", (n,)), st.sampled_from(N))
    feq = st.builds(lambda n, v: Eq(App("f", (n,), "value"), v), st.sampled_from(N), st.sampled_from(V))
    neq = st.builds(lambda a, b: Eq(a, b), st.sampled_from(N), st.sampled_from(N))
    return st.one_of(rel, unary, feq, neq)


formulas = st.recursive(
    atoms(),
    lambda sub: st.one_of(
        st.builds(Not, sub),
        st.builds(lambda a, b: And((a, b)), sub, sub),
        st.builds(lambda a, b: Or((a, b)), sub, sub),
        st.builds(Implies, sub, sub),
        st.builds(Iff, sub, sub),
        st.builds(lambda v, b: Forall((v,), b), st.sampled_from(N + V), sub),
        st.builds(lambda v, b: Exists((v,), b), st.sampled_from(N + V), sub),
    ),
    max_leaves=8,
)

SIZES = {"node": 2, "value": 2}


def close(f):
    vs = tuple(sorted(fol.free_vars(f), key=lambda v: v.name))
    return Forall(vs, f) if vs else f


def random_state(nv, seed):
    rng = random.Random(seed)
    out = {}
    for name, row in nv.keys:
        d = VOCAB.symbol(name)
        out[(name, row)] = rng.random() < 0.5 if d.is_relation else rng.randrange(SIZES[d.out])
    return out


@settings(max_examples=200, deadline=None)
@given(formulas, st.integers(0, 10 ** 6))
def test_nnf_preserves_meaning(f, seed):
    nv = Naive(VOCAB, SIZES)
    s = random_state(nv, seed)
    g = close(f)
    n = fol.nnf(g)
    assert nv.holds(g, s, {}) == nv.holds(n, s, {})
    for x in fol.subformulas(n):
        assert not isinstance(x, (Implies, Iff))
        if isinstance(x, Not):
            assert isinstance(x.body, (Rel, Eq))


@settings(max_examples=100, deadline=None)
@given(formulas, st.integers(0, 10 ** 6))
def test_substitution_agrees_with_environment(f, seed):
    nv = Naive(VOCAB, SIZES)
    s = random_state(nv, seed)
    rng = random.Random(seed)
    free = sorted(fol.free_vars(f), key=lambda v: v.name)
    env = {v.name: rng.randrange(SIZES[v.sort]) for v in free}
    consts = {v: Const("c_" + v.name, v.sort) for v in free}
    g = fol.substitute(f, consts)
    assert not fol.free_vars(g)
    assert nv.holds(f, s, env) == nv.holds(g, s, {"c_" + k: x for k, x in env.items()})


def test_negate_and_skolemize(skv_ast):
    ground, vi = fol.negate_and_skolemize_safety(skv_ast.safety, "node")
    assert [c.name for c in vi.node_constants] == ["a_L", "b_L"]
    assert [c.name for c in vi.data_constants] == ["K_L", "v1_L", "v2_L"]
    assert fol.is_quantifier_free(ground)
    clauses = fol.formula_to_clauses(ground)
    assert clauses == {Clause("table", ("a_L", "K_L", "v1_L"), True), Clause("table", ("b_L", "K_L", "v2_L"), True)}


def test_prenex_universal():
    a = Rel("p", (N[0],))
    assert fol.is_prenex_universal(Forall((N[0],), a))
    assert not fol.is_prenex_universal(Forall((N[0],), Exists((N[1],), a)))
    assert not fol.is_prenex_universal(Exists((N[0],), a))


def test_show_round_trips_through_parser(skv_ast):
    from cutoffsmith.frontend import parse_formula
    f = skv_ast.safety
    assert parse_formula(fol.show(f), skv_ast) == f
