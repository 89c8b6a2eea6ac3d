import functools
import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sahlkit.formula import And, App, Bot, Neg, Or, Top, Var, parse_formula, parse_inequality, random_formula
from sahlkit.semantics import (
    ARBITRARY,
    PERSISTENT,
    CapExceeded,
    Frame,
    canonical_posets,
    close_frame,
    counterexample,
    dump_frame,
    enumerate_batches,
    enumerate_frames,
    extension,
    frame_count,
    is_valid,
    labelled_posets,
    lift_valuation,
    load_frame,
    sample_batches,
    transfer_check,
    transfer_sweep,
    translation_identities,
    validate_frame,
)
from sahlkit.signature import builtin

CHAIN2 = Frame.make(2, [(0, 1)])


def subsets(n):
    return [frozenset(c) for k in range(n + 1) for c in itertools.combinations(range(n), k)]


def forces(fr, w, f, val):
    """Forcing relation written out clause by clause, independent of the bitmask kernel."""
    up = [v for v in range(fr.worlds) if (w, v) in fr.leq]
    down = [v for v in range(fr.worlds) if (v, w) in fr.leq]
    if isinstance(f, Var):
        return w in val[f.name]
    if isinstance(f, Bot):
        return False
    if isinstance(f, Top):
        return True
    if isinstance(f, And):
        return forces(fr, w, f.left, val) and forces(fr, w, f.right, val)
    if isinstance(f, Or):
        return forces(fr, w, f.left, val) or forces(fr, w, f.right, val)
    if isinstance(f, Neg):
        return not forces(fr, w, f.arg, val)
    a = f.args
    if f.conn == "->":
        return all(not forces(fr, v, a[0], val) or forces(fr, v, a[1], val) for v in up)
    if f.conn == ">-":
        return any(not forces(fr, v, a[0], val) and forces(fr, v, a[1], val) for v in down)
    succ = [v for (u, v) in fr.relation(f.conn) if u == w]
    if f.conn == "dia":
        return any(forces(fr, v, a[0], val) for v in succ)
    if f.conn == "box":
        return all(forces(fr, v, a[0], val) for v in succ)
    if f.conn == "lhd":
        return any(not forces(fr, v, a[0], val) for v in succ)
    if f.conn == "rhd":
        return all(not forces(fr, v, a[0], val) for v in succ)
    raise AssertionError(f.conn)


# ---------------------------------------------------------------- frames


def test_discrete_order_is_always_compatible():
    sig = builtin("positive-modal")
    fr = Frame.make(2, [], {"dia": [(0, 1)], "box": [(1, 0)]}, sig)
    assert validate_frame(fr) == []


def test_compatibility_violation_and_closure():
    sig = builtin("positive-modal")
    fr = Frame.make(2, [(0, 1)], {"dia": [(0, 1)], "box": []}, sig)
    problems = validate_frame(fr)
    # violations are reported one coordinate at a time; (1, 0) follows by closure
    assert any("requires (1, 1)" in p for p in problems)
    closed = close_frame(fr)
    assert (1, 0) in closed.relation("dia")
    assert validate_frame(closed) == []
    assert close_frame(closed) == closed


def test_order_axioms_checked():
    fr = Frame.make(3, [(0, 1), (1, 2)])
    assert any("transitive" in p for p in validate_frame(fr))
    fr = Frame.make(2, [(0, 1), (1, 0)])
    assert any("antisymmetric" in p for p in validate_frame(fr))


def test_frame_json_round_trip():
    sig = builtin("positive-modal")
    fr = Frame.make(2, [(0, 1)], {"dia": [(0, 0), (1, 0), (1, 1)], "box": [(0, 1)]}, sig)
    assert load_frame(dump_frame(fr), sig) == fr
    with pytest.raises(ValueError):
        load_frame('{"worlds": 0}')
    with pytest.raises(ValueError):
        load_frame('{"worlds": 2, "leq": [[0, 5]]}')
    with pytest.raises(ValueError):
        load_frame("{")


def test_poset_counts():
    # labelled posets on n points: 1, 3, 19, 219; unlabelled: 1, 2, 5, 16
    assert [len(labelled_posets(n)) for n in range(1, 5)] == [1, 3, 19, 219]
    assert [len(canonical_posets(n)) for n in range(1, 5)] == [1, 2, 5, 16]
    sig = builtin("intuitionistic")
    assert frame_count(sig, 1) == 1
    assert frame_count(sig, 2, min_worlds=2) == 2
    assert frame_count(sig, 2, up_to_iso=False, min_worlds=2) == 3


def test_enumerated_frames_are_valid_and_distinct():
    sig = builtin("positive-modal")
    frames = list(enumerate_frames(sig, 2))
    assert len(frames) == frame_count(sig, 2)
    assert all(validate_frame(fr, sig) == [] for fr in frames)
    assert len(set(frames)) == len(frames)


def test_enumeration_cap(monkeypatch):
    monkeypatch.setenv("SK_MAX_WORLDS", "2")
    with pytest.raises(CapExceeded):
        list(enumerate_batches(builtin("intuitionistic"), 3))


# ---------------------------------------------------------------- extensions


def test_one_point_excluded_middle():
    sig = builtin("intuitionistic")
    fr = Frame.make(1, [], {}, sig)
    assert extension(parse_formula("p \\/ (p -> bot)", sig), fr, {"p": {0}}) == {0}


def test_excluded_middle_on_small_posets():
    sig = builtin("intuitionistic")
    em = parse_inequality("top <= p \\/ (p -> bot)", sig)
    assert is_valid(em, Frame.make(1, [], {}, sig))
    chain = Frame.make(2, [(0, 1)], {}, sig)
    assert not is_valid(em, chain)
    assert counterexample(em, chain) == {"p": frozenset({1})}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_box_and_implication_extensions(n):
    """Interior for the S4 box, and the complement-down-complement form for implication."""
    s4 = builtin("s4")
    sig = builtin("intuitionistic")
    box = parse_formula("boxle p", s4)
    imp = parse_formula("p -> q", sig)
    everything = frozenset(range(n))
    for fr in enumerate_frames(sig, n, min_worlds=n):
        for P in subsets(n):
            want = everything - fr.down(everything - P)
            assert extension(box, fr, {"p": P}, s4) == want
        ups = fr.upsets()
        for P, Q in itertools.product(ups, ups):
            want = everything - fr.down(everything - ((everything - P) | Q))
            assert extension(imp, fr, {"p": P, "q": Q}) == want


@pytest.mark.parametrize("name", ["intuitionistic", "bi-intuitionistic", "positive-modal", "dml"])
def test_kernel_agrees_with_clausewise_forcing(name):
    sig = builtin(name)
    rng = random.Random(name)
    frames = list(enumerate_frames(sig, 2))
    for _ in range(60):
        f = random_formula(rng, sig, ["p", "q"], 3)
        fr = rng.choice(frames)
        ups = fr.upsets()
        val = {"p": rng.choice(ups), "q": rng.choice(ups)}
        want = frozenset(w for w in range(fr.worlds) if forces(fr, w, f, val))
        assert extension(f, fr, val) == want


@functools.lru_cache(maxsize=None)
def small_frames(name):
    return list(enumerate_frames(builtin(name), 2))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_persistence(seed):
    rng = random.Random(seed)
    name = rng.choice(["fischer-servi", "bi-intuitionistic", "dml"])
    sig = builtin(name)
    frames = small_frames(name)
    fr = rng.choice(frames)
    ups = fr.upsets()
    f = random_formula(rng, sig, ["p", "q"], 3)
    ext = extension(f, fr, {"p": rng.choice(ups), "q": rng.choice(ups)})
    assert fr.is_upset(ext)


def test_lift_valuation():
    assert lift_valuation({"p": {1}}, {"p": "1"}, CHAIN2) == {"p": frozenset({1})}
    assert lift_valuation({"p": {0}}, {"p": "1"}, CHAIN2) == {"p": frozenset()}
    assert lift_valuation({"p": {0}}, {"p": "d"}, CHAIN2) == {"p": frozenset({0, 1})}


def test_valuation_must_cover_variables():
    with pytest.raises(ValueError):
        extension(Var("p"), CHAIN2, {})


# ---------------------------------------------------------------- transfer


def test_transfer_on_one_point_and_chain():
    sig = builtin("intuitionistic")
    em = parse_inequality("top <= p \\/ (p -> bot)", sig)
    rep = transfer_check(em, {"p": "1"}, Frame.make(1, [], {}, sig))
    assert rep.agree and rep.dle_valid
    rep = transfer_check(em, {"p": "1"}, Frame.make(2, [(0, 1)], {}, sig))
    assert rep.agree and not rep.dle_valid and not rep.bae_valid


def test_frege_transfer_up_to_three_worlds():
    sig = builtin("intuitionistic")
    frege = parse_inequality("p -> (q -> r) <= (p -> q) -> (p -> r)", sig)
    checked, bad = transfer_sweep(frege, {"p": "1", "q": "1", "r": "d"}, sig, 3)
    assert checked == 8 and bad == []


def test_identities_detect_a_wrong_lift(monkeypatch):
    import sahlkit.semantics as sem

    sig = builtin("intuitionistic")
    f = parse_formula("p -> q", sig)
    assert translation_identities([f], {"p": "1", "q": "1"}, sig, 2).ok
    real = sem._lift_table
    monkeypatch.setattr(sem, "_lift_table", lambda n, leq, v: real(n, leq, "d" if v == "1" else "1"))
    assert not translation_identities([f], {"p": "1", "q": "1"}, sig, 2).ok


def test_sampled_frames_are_compatible_and_reproducible():
    sig = builtin("positive-modal")
    batches = list(sample_batches(sig, 3, 5, seed=3))
    assert len(batches) == len(labelled_posets(3))
    for batch in batches:
        assert batch.size == 5
        for fr in batch.frames():
            assert validate_frame(fr, sig) == []
    again = list(sample_batches(sig, 3, 5, seed=3))
    assert all(a.frame(i).to_json() == b.frame(i).to_json()
               for a, b in zip(batches, again) for i in range(5))
