import random

import pytest

from sahlkit import fo
from sahlkit.correspond import (
    NotInductive,
    Refuted,
    Verified,
    alba_reduce,
    check_steps,
    correspondent,
    first_approximation,
    frame_class,
    oracle_equivalence,
    oracle_sample,
    standard_translation,
)
from sahlkit.formula import Inequality, parse_inequality, random_inequality
from sahlkit.gentree import classify
from sahlkit.kernel import compile_term
from sahlkit.semantics import ARBITRARY, PERSISTENT, enumerate_batches
from sahlkit.signature import builtin, target_signature


def kernel_ineq(text, sig):
    q = parse_inequality(text, sig)
    return Inequality(compile_term(q.lhs, sig), compile_term(q.rhs, sig))


def test_first_approximation_shape():
    s4 = builtin("s4")
    q = first_approximation(kernel_ineq("boxle p <= diage boxle p", s4))
    assert q.show() == "[j0 <= boxle(p) & diage(boxle(p)) <= m0] => j0 <= m0"
    assert q.nominals == {"j0"} and q.conominals == {"m0"}
    assert not q.is_pure


def test_interior_demo_reduction():
    s4 = builtin("s4")
    red = alba_reduce(first_approximation(kernel_ineq("boxle p <= diage boxle p", s4)), {"p": "1"})
    assert [q.show() for q in red.pure] == ["[diage(boxle(diage(j0))) <= m0] => j0 <= m0"]
    assert [s.rule for s in red.steps] == ["first approximation", "residuate box", "ackermann"]


def test_identity_reduces_to_tautology():
    s4 = builtin("s4")
    red = alba_reduce(first_approximation(kernel_ineq("p <= p", s4)), {"p": "1"})
    assert red.pure[0].is_pure
    assert standard_translation(red.pure) == fo.TRUE


def test_bottom_on_the_left():
    s4 = builtin("s4")
    q = first_approximation(kernel_ineq("bot <= p", s4))
    assert q.show() == "[j0 <= bot & p <= m0] => j0 <= m0"
    red = alba_reduce(q, {"p": "d"})
    assert standard_translation(red.pure) == fo.TRUE


@pytest.mark.parametrize("text, sentence", [
    ("box_o p <= p", "(forall x (R_box x x))"),
    ("box_o p <= ~box_o ~p", "(forall x (exists y (R_box x y)))"),
    ("p <= box_o ~box_o ~p", "(forall x (forall y (or (not (R_box x y)) (R_box y x))))"),
    ("box_o p <= box_o box_o p",
     "(forall x (forall y (forall z (or (not (R_box x y)) (not (R_box y z)) (R_box x z)))))"),
])
def test_classical_correspondents_match_known_conditions(text, sentence):
    """Emitted sentences agree, frame by frame, with the textbook first-order conditions."""
    sig = builtin("classical-modal")
    corr = correspondent(parse_inequality(text, sig), sig)
    known = fo.parse_sexpr(sentence)
    frame_sig, kind = frame_class(corr.inequality, sig)
    assert kind == ARBITRARY
    for batch in enumerate_batches(frame_sig, 3):
        rels = batch.relation_arrays()
        a = fo.evaluate(corr.formula, rels, batch.n)
        b = fo.evaluate(known, rels, batch.n)
        assert (a == b).all()


def test_reflexivity_sentence_is_literal():
    sig = builtin("classical-modal")
    corr = correspondent(parse_inequality("box_o p <= p", sig), sig)
    assert corr.sexpr == "(forall j0 (R_box j0 j0))"


def test_degenerate_input_gives_true():
    sig = builtin("intuitionistic")
    assert correspondent(parse_inequality("p -> q <= top", sig), sig).formula == fo.TRUE


def test_oracle_examples():
    sig = builtin("classical-modal")
    refl = parse_inequality("box_o p <= p", sig)
    assert isinstance(oracle_equivalence(refl, fo.parse_sexpr("(forall x (R_box x x))"), sig, 4), Verified)
    wrong = oracle_equivalence(refl, fo.parse_sexpr("(forall x (forall y (R_box x y)))"), sig, 4)
    assert isinstance(wrong, Refuted) and wrong.frame.worlds == 2
    triv = oracle_equivalence(parse_inequality("p <= p", sig), fo.TRUE, sig, 4)
    assert triv and triv.frames > 0
    with pytest.raises(ValueError):
        oracle_equivalence(refl, fo.TRUE, sig, 0)


def test_frame_class_of_dle_input_is_persistent():
    sig = builtin("fischer-servi")
    fsig, kind = frame_class(parse_inequality("dia p <= box p", sig), sig)
    assert kind == PERSISTENT and {c.name for c in fsig.connectives} == {"dia", "box"}


@pytest.mark.parametrize("text, eps", [
    ("top <= p \\/ (p -> bot)", {"p": "1"}),
    ("p -> (q -> r) <= (p -> q) -> (p -> r)", {"p": "1", "q": "1", "r": "d"}),
])
def test_intuitionistic_correspondents_verified(text, eps):
    sig = builtin("intuitionistic")
    q = parse_inequality(text, sig)
    corr = correspondent(q, sig, eps)
    assert corr.eps == eps
    assert oracle_equivalence(q, corr.formula, sig, 4)


def test_fischer_servi_correspondent_verified():
    sig = builtin("fischer-servi")
    q = parse_inequality("dia(q -> p) <= box q -> dia p", sig)
    corr = correspondent(q, sig, {"p": "d", "q": "1"})
    assert corr.sahlqvist
    assert oracle_equivalence(q, corr.formula, sig, 2)


def test_non_inductive_inputs_rejected():
    bi = builtin("bi-intuitionistic")
    with pytest.raises(NotInductive):
        correspondent(parse_inequality("r >- (q >- p) <= (p \\/ q) >- p", bi), bi)
    cm = builtin("classical-modal")
    with pytest.raises(NotInductive):
        correspondent(parse_inequality("box_o dia_o boxle p <= dia_o boxle p", cm), cm)


def test_json_payload():
    sig = builtin("classical-modal")
    data = correspondent(parse_inequality("box_o p <= p", sig), sig).to_json()
    assert set(data) >= {"inequality", "translated", "eps", "omega_edges", "sahlqvist", "pure", "fo", "fo_infix"}


@pytest.mark.parametrize("name", ["intuitionistic", "positive-modal", "bi-intuitionistic"])
def test_each_rule_application_preserves_validity(name):
    """Consecutive systems of every reduction agree on all frames up to two worlds."""
    sig = builtin(name)
    rng = random.Random(name)
    done = 0
    while done < 12:
        q = random_inequality(rng, sig, ["p", "q"], 2)
        if not classify(q, sig).witnesses:
            continue
        corr = correspondent(q, sig)
        batches = list(enumerate_batches(frame_class(corr.translated, target_signature(sig))[0], 2))
        assert len(corr.reduction.steps) >= 2
        assert check_steps(corr.reduction, batches) == []
        assert oracle_equivalence(q, corr.formula, sig, 2)
        done += 1


def test_oracle_sample_verifies_and_refutes():
    sig = builtin("classical-modal")
    refl = parse_inequality("box_o p <= p", sig)
    good = oracle_sample(refl, fo.parse_sexpr("(forall x (R_box x x))"), sig, 4, 20, seed=1)
    assert isinstance(good, Verified) and good.frames == 20 * 219  # every labelled order on 4 points
    bad = oracle_sample(refl, fo.parse_sexpr("(forall x (forall y (R_box x y)))"), sig, 4, 20, seed=1)
    assert isinstance(bad, Refuted) and bad.frame.worlds == 4
