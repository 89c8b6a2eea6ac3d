import itertools

import pytest
from hypothesis import given, settings

from sahlkit.formula import App, Var, parse_inequality
from sahlkit.gentree import (
    DA,
    MINUS,
    PIA,
    PLUS,
    SKELETON,
    SLR,
    SRA,
    SRR,
    branch_quality,
    build_signed_tree,
    classify,
    critical_branches,
    find_witnesses,
    is_inductive,
    is_sahlqvist,
    is_strict_order,
    minimal_omega,
    transitive_closure,
    BoundExceeded,
)
from sahlkit.signature import builtin

from conftest import inequalities

FREGE = "p -> (q -> r) <= (p -> q) -> (p -> r)"
RAUSZER_1 = "r >- (q >- p) <= (p \\/ q) >- p"
RAUSZER_2 = "(q >- p) -> bot <= p -> q"
FS_1 = "dia(q -> p) <= box q -> dia p"
FS_2 = "dia q -> box p <= box(q -> p)"
DUNN_1 = "box q /\\ dia p <= dia (q /\\ p)"
DUNN_2 = "box (q \\/ p) <= dia q \\/ box p"


def ineq(text, sig):
    return parse_inequality(text, builtin(sig))


def eps(**kw):
    return {k: v for k, v in kw.items()}


def labels(tree, idxs):
    return [tree.nodes[i].label() for i in idxs]


def test_frege_lhs_tree_shape():
    sig = builtin("intuitionistic")
    t = build_signed_tree(ineq(FREGE, "intuitionistic").lhs, PLUS, sig)
    assert [n.label() for n in t.nodes] == ["+->", "-p", "+->", "-q", "+r"]
    # binary G-connective under + is a right-residual node
    assert t.root.classes == frozenset({SRR})


def test_frege_rhs_root_is_skeleton():
    sig = builtin("intuitionistic")
    t = build_signed_tree(ineq(FREGE, "intuitionistic").rhs, MINUS, sig)
    assert t.root.classes == frozenset({SLR})
    assert t.root.skeleton and not t.root.pia


def test_single_leaf():
    t = build_signed_tree(Var("p"), PLUS, builtin("intuitionistic"))
    assert len(t.nodes) == 1 and t.root.is_leaf and t.root.sign == PLUS


def test_critical_leaves_of_frege():
    sig = builtin("intuitionistic")
    q = ineq(FREGE, "intuitionistic")
    e = eps(p="1", q="1", r="d")
    lhs = build_signed_tree(q.lhs, PLUS, sig)
    rhs = build_signed_tree(q.rhs, MINUS, sig)
    assert critical_branches(lhs, e) == []
    assert labels(rhs, [b[0] for b in critical_branches(rhs, e)]) == ["+q", "+p", "-r"]


def test_all_dual_with_positive_leaves_has_no_critical_branch():
    sig = builtin("positive-modal")
    t = build_signed_tree(ineq("box (p /\\ dia q) <= p", "positive-modal").lhs, PLUS, sig)
    assert critical_branches(t, eps(p="d", q="d")) == []


def test_branch_qualities():
    sig = builtin("intuitionistic")
    rhs = build_signed_tree(ineq(FREGE, "intuitionistic").rhs, MINUS, sig)
    by_leaf = {rhs.nodes[b[0]].label(): branch_quality(rhs, b) for b in critical_branches(rhs, eps(p="1", q="1", r="d"))}
    # +q hangs below a binary residual node, which is PIA but not SRA
    assert by_leaf["+q"].kind == "good"
    assert by_leaf["+p"].excellent and by_leaf["-r"].excellent
    leaf = build_signed_tree(Var("p"), PLUS, sig)
    assert branch_quality(leaf, (0,)).excellent


def test_skeleton_below_pia_is_bad():
    # +box (dia p): dia under + is skeleton, box under + is PIA above it
    sig = builtin("positive-modal")
    t = build_signed_tree(App("box", (App("dia", (Var("p"),)),)), PLUS, sig)
    (branch,) = critical_branches(t, eps(p="1"))
    assert branch_quality(t, branch).kind == "bad"


def test_node_class_table_for_lattice_connectives():
    sig = builtin("lattice")
    t = build_signed_tree(ineq("p /\\ q <= p \\/ q", "lattice").lhs, PLUS, sig)
    assert t.root.classes == frozenset({DA, SLR, SRA})
    t = build_signed_tree(ineq("p /\\ q <= p \\/ q", "lattice").rhs, MINUS, sig)
    assert t.root.classes == frozenset({DA, SLR, SRA})
    t = build_signed_tree(ineq("p \\/ q <= p", "lattice").lhs, PLUS, sig)
    assert t.root.classes == frozenset({DA, SRR})
    assert SKELETON.isdisjoint(PIA - {SRA, SRR})


# ---------------------------------------------------------------- the worked classifications


def test_frege_is_sahlqvist_for_no_order_type():
    q = ineq(FREGE, "intuitionistic")
    sig = builtin("intuitionistic")
    verdicts = [is_sahlqvist(q, dict(zip("pqr", e)), sig).ok for e in itertools.product("1d", repeat=3)]
    assert verdicts == [False] * 8


def test_frege_inductive_witness():
    sig = builtin("intuitionistic")
    q = ineq(FREGE, "intuitionistic")
    e = eps(p="1", q="1", r="d")
    assert is_inductive(q, e, [("r", "p"), ("p", "q")], sig)
    assert minimal_omega(q, e, sig) == (("p", "q"),)
    assert not is_inductive(q, e, [("q", "p")], sig)
    rep = find_witnesses(q, "inductive", sig)
    assert e in [w.eps_dict() for w in rep.witnesses]
    assert find_witnesses(q, "sahlqvist", sig).witnesses == []


def test_rauszer_first_not_inductive():
    sig = builtin("bi-intuitionistic")
    rep = classify(ineq(RAUSZER_1, "bi-intuitionistic"), sig)
    assert rep.verdict == "negative" and rep.witnesses == []
    assert len(rep.diagnostics) == 8


def test_rauszer_second():
    sig = builtin("bi-intuitionistic")
    q = ineq(RAUSZER_2, "bi-intuitionistic")
    assert is_sahlqvist(q, eps(p="1", q="d"), sig)
    assert is_inductive(q, eps(p="d", q="d"), [("q", "p")], sig)
    assert not is_sahlqvist(q, eps(p="d", q="d"), sig)
    assert is_inductive(q, eps(p="1", q="1"), [("p", "q")], sig)
    assert not is_sahlqvist(q, eps(p="1", q="1"), sig)


@pytest.mark.parametrize("text", [FS_1, FS_2])
def test_fischer_servi(text):
    sig = builtin("fischer-servi")
    q = ineq(text, "fischer-servi")
    assert is_sahlqvist(q, eps(p="d", q="1"), sig)
    assert is_inductive(q, eps(p="d", q="d"), [("p", "q")], sig)
    assert not is_sahlqvist(q, eps(p="d", q="d"), sig)


def test_dunn():
    sig = builtin("positive-modal")
    d1 = ineq(DUNN_1, "positive-modal")
    assert is_sahlqvist(d1, eps(p="1", q="1"), sig)
    assert is_inductive(d1, eps(p="1", q="d"), [("p", "q")], sig)
    assert not is_sahlqvist(d1, eps(p="1", q="d"), sig)
    d2 = ineq(DUNN_2, "positive-modal")
    assert is_sahlqvist(d2, eps(p="d", q="d"), sig)
    assert is_inductive(d2, eps(p="d", q="1"), [("p", "q")], sig)


def test_identity_inequality_sahlqvist_at_one():
    sig = builtin("intuitionistic")
    rep = find_witnesses(ineq("p <= p", "intuitionistic"), "sahlqvist", sig)
    assert {"p": "1"} in [w.eps_dict() for w in rep.witnesses]


def test_cyclic_omega_rejected():
    sig = builtin("intuitionistic")
    v = is_inductive(ineq(FREGE, "intuitionistic"), eps(p="1", q="1", r="d"), [("p", "q"), ("q", "p")], sig)
    assert not v and "irreflexive" in v.diagnostics[0]


def test_variable_bound():
    sig = builtin("intuitionistic")
    with pytest.raises(BoundExceeded):
        classify(ineq(FREGE, "intuitionistic"), sig, max_vars=2)


def test_order_helpers():
    assert transitive_closure([("a", "b"), ("b", "c")]) == {("a", "b"), ("b", "c"), ("a", "c")}
    assert is_strict_order([("a", "b")]) and not is_strict_order([("a", "b"), ("b", "a")])


@settings(max_examples=150, deadline=None)
@given(inequalities("bi-intuitionistic", depth=3))
def test_reported_witnesses_pass_the_checks(q):
    sig = builtin("bi-intuitionistic")
    rep = classify(q, sig)
    for w in rep.witnesses:
        assert is_inductive(q, w.eps_dict(), w.omega, sig)
        if w.sahlqvist:
            assert is_sahlqvist(q, w.eps_dict(), sig)


@settings(max_examples=150, deadline=None)
@given(inequalities("dml", depth=3))
def test_minimal_omega_is_minimal(q):
    sig = builtin("dml")
    for w in classify(q, sig).witnesses:
        for edge in w.omega:
            smaller = [e for e in w.omega if e != edge]
            # dropping an edge of the transitive closure may still leave it implied
            if edge not in transitive_closure(smaller):
                assert not is_inductive(q, w.eps_dict(), smaller, sig)
