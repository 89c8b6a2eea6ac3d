import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sahlkit.fo import (
    FALSE,
    TRUE,
    All,
    Atom,
    Conj,
    Const,
    Disj,
    Eq,
    Ex,
    Not,
    evaluate,
    free_vars,
    implies,
    nnf,
    parse_sexpr,
    quantifier_count,
    relations_used,
    simplify,
    to_infix,
    to_sexpr,
)

VARS = ["x", "y", "z"]

atoms = st.one_of(
    st.builds(lambda r, a, b: Atom(r, (a, b)), st.sampled_from(["leq", "box"]), st.sampled_from(VARS),
              st.sampled_from(VARS)),
    st.builds(lambda a, b, c: Atom("imp", (a, b, c)), *[st.sampled_from(VARS)] * 3),
    st.builds(Eq, st.sampled_from(VARS), st.sampled_from(VARS)),
    st.sampled_from([TRUE, FALSE]),
)

fo_formulas = st.recursive(
    atoms,
    lambda sub: st.one_of(
        st.builds(Not, sub),
        st.builds(lambda xs: Conj(tuple(xs)), st.lists(sub, min_size=2, max_size=3)),
        st.builds(lambda xs: Disj(tuple(xs)), st.lists(sub, min_size=2, max_size=3)),
        st.builds(All, st.sampled_from(VARS), sub),
        st.builds(Ex, st.sampled_from(VARS), sub),
    ),
    max_leaves=8,
)


def close(f):
    for v in sorted(free_vars(f)):
        f = All(v, f)
    return f


sentences = fo_formulas.map(close)


def naive(f, rels, frame, n, env):
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return bool(rels[f.rel][(frame,) + tuple(env[a] for a in f.args)])
    if isinstance(f, Eq):
        return env[f.left] == env[f.right]
    if isinstance(f, Not):
        return not naive(f.arg, rels, frame, n, env)
    if isinstance(f, Conj):
        return all(naive(g, rels, frame, n, env) for g in f.items)
    if isinstance(f, Disj):
        return any(naive(g, rels, frame, n, env) for g in f.items)
    values = (naive(f.body, rels, frame, n, {**env, f.var: w}) for w in range(n))
    return all(values) if isinstance(f, All) else any(values)


def random_structures(seed, frames=6, n=3):
    rng = np.random.default_rng(seed)
    return {
        "leq": rng.random((frames, n, n)) < 0.5,
        "box": rng.random((frames, n, n)) < 0.5,
        "imp": rng.random((frames, n, n, n)) < 0.5,
    }


def test_sexpr_examples():
    f = All("x", Ex("y", Conj((Atom("leq", ("x", "y")), Atom("box", ("y", "x"))))))
    assert to_sexpr(f) == "(forall x (exists y (and (<= x y) (R_box y x))))"
    assert to_infix(f) == "forall x. exists y. (x <= y & R_box(y, x))"
    assert to_infix(All("x", implies(Atom("box", ("x", "x")), FALSE))) == "forall x. (R_box(x, x) -> F)"
    assert parse_sexpr(to_sexpr(f)) == f


@pytest.mark.parametrize("text", ["(", "(forall x", "(and (<= x y)", "(<= x y) extra", "x"])
def test_malformed_sexpr(text):
    with pytest.raises(ValueError):
        parse_sexpr(text)


def test_counts_and_relations():
    f = All("x", Ex("y", Disj((Atom("box", ("x", "y")), Not(Atom("leq", ("y", "x")))))))
    assert quantifier_count(f) == 2
    assert relations_used(f) == {"box", "leq"}
    assert free_vars(f.body) == {"x"}


def test_one_point_rule_and_scope():
    f = Ex("y", Conj((Eq("x", "y"), Atom("box", ("y", "y")))))
    assert simplify(All("x", f)) == All("x", Atom("box", ("x", "x")))
    g = All("x", Ex("y", Conj((Atom("box", ("x", "x")), Atom("leq", ("x", "y"))))))
    assert simplify(g) == All("x", Conj((Atom("box", ("x", "x")), Ex("y", Atom("leq", ("x", "y"))))))


def test_free_variables_rejected_by_evaluator():
    with pytest.raises(ValueError):
        evaluate(Atom("box", ("x", "x")), random_structures(0), 3)


@settings(max_examples=300, deadline=None)
@given(sentences)
def test_sexpr_round_trip(f):
    assert parse_sexpr(to_sexpr(f)) == f


@settings(max_examples=200, deadline=None)
@given(sentences, st.integers(0, 1000))
def test_vectorised_evaluation_matches_naive(f, seed):
    rels = random_structures(seed)
    got = evaluate(f, rels, 3)
    got = np.broadcast_to(got, (6,))
    want = [naive(f, rels, i, 3, {}) for i in range(6)]
    assert list(got) == want


@settings(max_examples=200, deadline=None)
@given(sentences, st.integers(0, 1000))
def test_nnf_and_simplify_preserve_truth(f, seed):
    rels = random_structures(seed)
    base = np.broadcast_to(evaluate(f, rels, 3), (6,))
    for g in (nnf(f), simplify(f)):
        assert free_vars(g) == set()
        assert np.array_equal(np.broadcast_to(evaluate(g, rels, 3), (6,)), base)


@settings(max_examples=200, deadline=None)
@given(sentences)
def test_nnf_has_no_compound_negation(f):
    def ok(g):
        if isinstance(g, Not):
            return isinstance(g.arg, (Atom, Eq))
        if isinstance(g, (Conj, Disj)):
            return all(ok(x) for x in g.items)
        if isinstance(g, (All, Ex)):
            return ok(g.body)
        return True

    assert ok(nnf(f))
