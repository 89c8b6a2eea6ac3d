"""First-order correspondents via a small ALBA-style reduction.

The reduction runs on kernel terms: every connective is a `Dia` or `Box`
over a (possibly permuted) relation, so residuation is a uniform operation
on `RelRef`.  Nominals and conominals are `Nom`/`CoNom` nodes whose names
double as first-order world variables in the output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import fo
from .formula import And, Bot, Inequality, Neg, Or, Top, Var, connectives, variables
from .gentree import all_order_types, analyse, minimal_omega, transitive_closure
from .kernel import Box, CoNom, Dia, Nom, compile_term, show as kshow
from .semantics import (
    ARBITRARY,
    PERSISTENT,
    Frame,
    FrameBatch,
    enumerate_batches,
    holds_on_batch,
    sample_batches,
)
from .signature import BAE, DLE, ONE, Signature, target_signature
from .translate import tau_eps

# ------------------------------------------------------------------ state


class Unsupported(Exception):
    """The reduction reached a shape it does not handle."""


class NotInductive(ValueError):
    pass


@dataclass(frozen=True)
class QuasiInequality:
    antecedent: tuple[Inequality, ...]
    conclusion: Inequality

    @property
    def nominals(self) -> set[str]:
        return _world_vars(self, Nom)

    @property
    def conominals(self) -> set[str]:
        return _world_vars(self, CoNom)

    @property
    def is_pure(self) -> bool:
        return not any(_props(i.lhs) | _props(i.rhs) for i in self.antecedent + (self.conclusion,))

    def show(self, pretty: bool = False) -> str:
        ante = " & ".join(_show_ineq(i) for i in self.antecedent) or "T"
        return f"[{ante}] => {_show_ineq(self.conclusion)}"


def _show_ineq(i: Inequality) -> str:
    return f"{kshow(i.lhs)} <= {kshow(i.rhs)}"


def _walk(t):
    stack = [t]
    while stack:
        x = stack.pop()
        yield x
        if isinstance(x, (And, Or)):
            stack += [x.left, x.right]
        elif isinstance(x, Neg):
            stack.append(x.arg)
        elif isinstance(x, (Dia, Box)):
            stack.extend(x.args)


def _world_vars(q: QuasiInequality, kind) -> set[str]:
    out = set()
    for i in q.antecedent + (q.conclusion,):
        for side in (i.lhs, i.rhs):
            out |= {x.var for x in _walk(side) if isinstance(x, kind)}
    return out


def _all_world_vars(q: QuasiInequality) -> list[str]:
    seen: dict[str, None] = {}
    for i in q.antecedent + (q.conclusion,):
        for side in (i.lhs, i.rhs):
            for x in _walk(side):
                if isinstance(x, (Nom, CoNom)):
                    seen.setdefault(x.var, None)
    return sorted(seen, key=_name_key)


def _name_key(name: str):
    return (name[0], int(name[1:]) if name[1:].isdigit() else 0, name)


@lru_cache(maxsize=None)
def _occ(t) -> frozenset:
    """(variable, polarity) pairs for the proposition variables of a kernel term."""
    if isinstance(t, Var):
        return frozenset({(t.name, 1)})
    if isinstance(t, (And, Or)):
        return _occ(t.left) | _occ(t.right)
    if isinstance(t, Neg):
        return frozenset((v, -p) for v, p in _occ(t.arg))
    if isinstance(t, (Dia, Box)):
        out = frozenset()
        for a in t.args:
            out |= _occ(a)
        return out
    return frozenset()


def _props(t) -> set[str]:
    return {v for v, _ in _occ(t)}


def _critical(t, side: str, eps: Mapping[str, str], only: str | None = None) -> bool:
    """Does `t`, sitting on `side` of an inequality, hold an occurrence ALBA solves for?"""
    for v, pol in _occ(t):
        if only is not None and v != only:
            continue
        raises = (pol == 1) == (side == "R")
        if raises == (eps[v] == ONE):
            return True
    return False


def neg(t):
    if isinstance(t, Nom):
        return CoNom(t.var)
    if isinstance(t, CoNom):
        return Nom(t.var)
    if isinstance(t, Neg):
        return t.arg
    if isinstance(t, Top):
        return Bot()
    if isinstance(t, Bot):
        return Top()
    return Neg(t)


def substitute(t, name: str, value):
    if isinstance(t, Var):
        return value if t.name == name else t
    if isinstance(t, And):
        return And(substitute(t.left, name, value), substitute(t.right, name, value))
    if isinstance(t, Or):
        return Or(substitute(t.left, name, value), substitute(t.right, name, value))
    if isinstance(t, Neg):
        return neg(substitute(t.arg, name, value))
    if isinstance(t, (Dia, Box)):
        return type(t)(t.rel, tuple(substitute(a, name, value) for a in t.args))
    return t


def _simplify_term(t):
    if isinstance(t, Neg):
        inner = _simplify_term(t.arg)
        return neg(inner)
    if isinstance(t, (And, Or)):
        a, b = _simplify_term(t.left), _simplify_term(t.right)
        unit, zero = (Top, Bot) if isinstance(t, And) else (Bot, Top)
        if isinstance(a, zero) or isinstance(b, zero):
            return zero()
        if isinstance(a, unit):
            return b
        if isinstance(b, unit) or a == b:
            return a
        return type(t)(a, b)
    if isinstance(t, (Dia, Box)):
        args = tuple(_simplify_term(a) for a in t.args)
        if isinstance(t, Dia) and any(isinstance(a, Bot) for a in args):
            return Bot()
        if isinstance(t, Box) and any(isinstance(a, Top) for a in args):
            return Top()
        return type(t)(t.rel, args)
    return t


def _trivial(i: Inequality) -> bool:
    return isinstance(i.lhs, Bot) or isinstance(i.rhs, Top) or i.lhs == i.rhs


# ------------------------------------------------------------------ rules


@dataclass
class Step:
    rule: str
    detail: str
    system: tuple[QuasiInequality, ...]


@dataclass
class _Names:
    nominals: int = 0
    conominals: int = 0

    def nominal(self) -> Nom:
        self.nominals += 1
        return Nom(f"j{self.nominals - 1}")

    def conominal(self) -> CoNom:
        self.conominals += 1
        return CoNom(f"m{self.conominals - 1}")


def first_approximation(ineq: Inequality, names: _Names | None = None) -> QuasiInequality:
    """i <= lhs and rhs <= m imply i <= m, with fresh i and m."""
    names = names or _Names()
    j, m = names.nominal(), names.conominal()
    return QuasiInequality((Inequality(j, ineq.lhs), Inequality(ineq.rhs, m)), Inequality(j, m))


def _solved(i: Inequality, eps) -> str | None:
    if isinstance(i.rhs, Var) and eps[i.rhs.name] == ONE and i.rhs.name not in _props(i.lhs):
        return i.rhs.name
    if isinstance(i.lhs, Var) and eps[i.lhs.name] != ONE and i.lhs.name not in _props(i.rhs):
        return i.lhs.name
    return None


def _rewrite(i: Inequality, eps, names: _Names):
    """One rule on one inequality: ("replace", [..]) | ("split", [[..], [..]]) | None."""
    L, R = i.lhs, i.rhs
    if _trivial(i):
        return "drop trivial", ("replace", [])
    cl, cr = _critical(L, "L", eps), _critical(R, "R", eps)
    if not (cl or cr):
        return None
    if cl and cr:
        raise Unsupported(f"critical occurrences on both sides of {_show_ineq(i)}")
    if _solved(i, eps):
        return None
    if cr:
        if isinstance(R, Var):
            raise Unsupported(f"{R.name} occurs on both sides of {_show_ineq(i)}")
        if isinstance(R, And):
            return "split meet", ("replace", [Inequality(L, R.left), Inequality(L, R.right)])
        if isinstance(R, Or):
            if isinstance(L, Nom):
                return "join-prime split", ("split", [[Inequality(L, R.left)], [Inequality(L, R.right)]])
            ca, cb = _critical(R.left, "R", eps), _critical(R.right, "R", eps)
            if ca and cb:
                raise Unsupported(f"both disjuncts critical in {_show_ineq(i)}")
            crit, other = (R.left, R.right) if ca else (R.right, R.left)
            return "residuate join", ("replace", [Inequality(And(L, neg(other)), crit)])
        if isinstance(R, Neg):
            return "contrapose", ("replace", [Inequality(R.arg, neg(L))])
        if isinstance(R, Box):
            crit = [k for k, a in enumerate(R.args) if _critical(a, "R", eps)]
            if len(crit) > 1:
                raise Unsupported(f"several critical arguments under {kshow(R)}")
            k = crit[0]
            args = tuple(L if j == k else neg(a) for j, a in enumerate(R.args))
            return "residuate box", ("replace", [Inequality(Dia(R.rel.residual(k + 1), args), R.args[k])])
        if isinstance(R, Dia):
            if not isinstance(L, Nom):
                raise Unsupported(f"approximation under {kshow(R)} needs a nominal on the left")
            args, extra = list(R.args), []
            for k, a in enumerate(R.args):
                if _critical(a, "R", eps):
                    j = names.nominal()
                    args[k] = j
                    extra.append(Inequality(j, a))
            return "approximate", ("replace", [Inequality(L, Dia(R.rel, tuple(args)))] + extra)
        raise Unsupported(f"no rule for {_show_ineq(i)}")
    # critical on the left: the order dual of the above
    if isinstance(L, Var):
        raise Unsupported(f"{L.name} occurs on both sides of {_show_ineq(i)}")
    if isinstance(L, Or):
        return "split join", ("replace", [Inequality(L.left, R), Inequality(L.right, R)])
    if isinstance(L, And):
        if isinstance(R, CoNom):
            return "meet-prime split", ("split", [[Inequality(L.left, R)], [Inequality(L.right, R)]])
        ca, cb = _critical(L.left, "L", eps), _critical(L.right, "L", eps)
        if ca and cb:
            raise Unsupported(f"both conjuncts critical in {_show_ineq(i)}")
        crit, other = (L.left, L.right) if ca else (L.right, L.left)
        return "residuate meet", ("replace", [Inequality(crit, Or(neg(other), R))])
    if isinstance(L, Neg):
        return "contrapose", ("replace", [Inequality(neg(R), L.arg)])
    if isinstance(L, Dia):
        crit = [k for k, a in enumerate(L.args) if _critical(a, "L", eps)]
        if len(crit) > 1:
            raise Unsupported(f"several critical arguments under {kshow(L)}")
        k = crit[0]
        args = tuple(R if j == k else neg(a) for j, a in enumerate(L.args))
        return "residuate diamond", ("replace", [Inequality(L.args[k], Box(L.rel.residual(k + 1), args))])
    if isinstance(L, Box):
        if not isinstance(R, CoNom):
            raise Unsupported(f"approximation under {kshow(L)} needs a conominal on the right")
        args, extra = list(L.args), []
        for k, a in enumerate(L.args):
            if _critical(a, "L", eps):
                m = names.conominal()
                args[k] = m
                extra.append(Inequality(a, m))
        return "approximate", ("replace", [Inequality(Box(L.rel, tuple(args)), R)] + extra)
    raise Unsupported(f"no rule for {_show_ineq(i)}")


def _ackermann_candidates(q: QuasiInequality, eps, omega) -> list[str]:
    present = []
    for i in q.antecedent:
        for v in sorted(_props(i.lhs) | _props(i.rhs)):
            if v not in present:
                present.append(v)
    closure = transitive_closure(omega)
    rank = {v: sum(1 for a, b in closure if b == v) for v in present}
    return sorted(present, key=lambda v: (rank[v], present.index(v)))


def _ackermann(q: QuasiInequality, eps, omega) -> tuple[QuasiInequality, str] | None:
    for p in _ackermann_candidates(q, eps, omega):
        bounds, rest = [], []
        ok = True
        for i in q.antecedent:
            if _solved(i, eps) == p:
                bounds.append(i.lhs if eps[p] == ONE else i.rhs)
            elif _critical(i.lhs, "L", eps, p) or _critical(i.rhs, "R", eps, p):
                ok = False
                break
            else:
                rest.append(i)
        if not ok:
            continue
        if eps[p] == ONE:
            value = Bot() if not bounds else _fold(Or, bounds)
        else:
            value = Top() if not bounds else _fold(And, bounds)
        new = []
        for i in rest:
            j = Inequality(_simplify_term(substitute(i.lhs, p, value)), _simplify_term(substitute(i.rhs, p, value)))
            if not _trivial(j):
                new.append(j)
        return QuasiInequality(tuple(new), q.conclusion), f"{p} := {kshow(value)}"
    return None


def _fold(op, items):
    acc = items[0]
    for x in items[1:]:
        acc = op(acc, x)
    return acc


@dataclass
class Reduction:
    pure: tuple[QuasiInequality, ...]
    steps: list[Step] = field(default_factory=list)


def alba_reduce(q: QuasiInequality, eps: Mapping[str, str], omega=(), names: _Names | None = None) -> Reduction:
    """Rewrite to a conjunction of pure quasi-inequalities, or raise Unsupported."""
    if names is None:
        names = _Names(len(q.nominals), len(q.conominals))
    system = [q]
    steps = [Step("first approximation", "", tuple(system))]
    # Rewriting phase: apply rules until every critical occurrence is solved.
    while True:
        applied = False
        for qi, cur in enumerate(system):
            for ii, ineq in enumerate(cur.antecedent):
                got = _rewrite(ineq, eps, names)
                if got is None:
                    continue
                rule, (kind, payload) = got
                before = cur.antecedent[:ii]
                after = cur.antecedent[ii + 1:]
                if kind == "replace":
                    news = [QuasiInequality(before + tuple(payload) + after, cur.conclusion)]
                else:
                    news = [QuasiInequality(before + tuple(part) + after, cur.conclusion) for part in payload]
                system[qi:qi + 1] = news
                steps.append(Step(rule, _show_ineq(ineq), tuple(system)))
                applied = True
                break
            if applied:
                break
        if not applied:
            break
    # Ackermann phase.
    for qi in range(len(system)):
        while not system[qi].is_pure:
            got = _ackermann(system[qi], eps, omega)
            if got is None:
                left = sorted({v for i in system[qi].antecedent for v in _props(i.lhs) | _props(i.rhs)})
                raise Unsupported("Ackermann rule does not apply to " + ", ".join(left))
            system[qi], detail = got
            steps.append(Step("ackermann", detail, tuple(system)))
    pure = []
    for cur in system:
        ante = []
        for i in cur.antecedent:
            j = Inequality(_simplify_term(i.lhs), _simplify_term(i.rhs))
            if not _trivial(j) and j not in ante:
                ante.append(j)
        pure.append(QuasiInequality(tuple(ante), cur.conclusion))
    return Reduction(tuple(pure), steps)


# ------------------------------------------------------------------ first-order output


class _Fresh:
    def __init__(self):
        self.count = 0

    def __call__(self) -> str:
        self.count += 1
        return f"x{self.count - 1}"


def _st(t, x: str, fresh: _Fresh):
    if isinstance(t, Nom):
        return fo.Eq(x, t.var)
    if isinstance(t, CoNom):
        return fo.Not(fo.Eq(x, t.var))
    if isinstance(t, Bot):
        return fo.FALSE
    if isinstance(t, Top):
        return fo.TRUE
    if isinstance(t, And):
        return fo.Conj((_st(t.left, x, fresh), _st(t.right, x, fresh)))
    if isinstance(t, Or):
        return fo.Disj((_st(t.left, x, fresh), _st(t.right, x, fresh)))
    if isinstance(t, Neg):
        return fo.Not(_st(t.arg, x, fresh))
    if isinstance(t, (Dia, Box)):
        ys = [fresh() for _ in t.args]
        b = (x,) + tuple(ys)
        atom = fo.Atom(t.rel.base, tuple(b[o] for o in t.rel.order))
        if isinstance(t, Dia):
            body = fo.Conj((atom,) + tuple(_st(a, y, fresh) for a, y in zip(t.args, ys)))
            quant = fo.Ex
        else:
            body = fo.Disj((fo.Not(atom),) + tuple(_st(a, y, fresh) for a, y in zip(t.args, ys)))
            quant = fo.All
        for y in reversed(ys):
            body = quant(y, body)
        return body
    raise Unsupported(f"not a pure term: {kshow(t)}")


def _st_ineq(i: Inequality, fresh: _Fresh):
    if isinstance(i.lhs, Nom):
        return _st(i.rhs, i.lhs.var, fresh)
    if isinstance(i.rhs, CoNom):
        return fo.Not(_st(i.lhs, i.rhs.var, fresh))
    u = fresh()
    return fo.All(u, fo.Disj((fo.Not(_st(i.lhs, u, fresh)), _st(i.rhs, u, fresh))))


def standard_translation(pure, simplify: bool = True):
    """Closed first-order sentence for a pure quasi-inequality (or a conjunction of them)."""
    items = pure if isinstance(pure, (tuple, list)) else (pure,)
    fresh = _Fresh()
    parts = []
    for q in items:
        if not q.is_pure:
            raise Unsupported("quasi-inequality still mentions proposition variables")
        body = fo.Disj(tuple(fo.Not(_st_ineq(i, fresh)) for i in q.antecedent) + (_st_ineq(q.conclusion, fresh),))
        for v in reversed(_all_world_vars(q)):
            body = fo.All(v, body)
        parts.append(body)
    sentence = fo.Conj(tuple(parts)) if len(parts) != 1 else parts[0]
    return fo.simplify(sentence) if simplify else sentence


# ------------------------------------------------------------------ pipeline


@dataclass
class Correspondence:
    inequality: Inequality
    translated: Inequality
    eps: dict
    omega: tuple
    sahlqvist: bool
    reduction: Reduction
    formula: object

    @property
    def sexpr(self) -> str:
        return fo.to_sexpr(self.formula)

    @property
    def infix(self) -> str:
        return fo.to_infix(self.formula)

    def to_json(self) -> dict:
        return {
            "inequality": kshow(self.inequality),
            "translated": kshow(self.translated),
            "eps": self.eps,
            "omega_edges": [list(e) for e in self.omega],
            "sahlqvist": self.sahlqvist,
            "pure": [q.show() for q in self.reduction.pure],
            "fo": self.sexpr,
            "fo_infix": self.infix,
        }


def _candidates(ineq: Inequality, sig: Signature, eps, s4_prefix: bool):
    """(eps, translated, target) triples to try, best first."""
    names = variables(ineq)
    options = [dict(eps)] if eps is not None else list(all_order_types(names))
    out = []
    for e in options:
        missing = [v for v in names if v not in e]
        if missing:
            raise ValueError(f"order-type does not cover {', '.join(missing)}")
        if sig.dialect == DLE:
            target = target_signature(sig)
            translated = tau_eps(ineq, e, sig, s4_prefix)
        else:
            target, translated = sig, ineq
        inner = {v: e.get(v, ONE) for v in variables(translated)}
        omega = minimal_omega(translated, inner, target)
        if omega is None:
            continue
        sahl = analyse(translated, inner, target).sahlqvist
        out.append((not sahl, len(omega), e, inner, omega, translated, target, sahl))
    out.sort(key=lambda t: t[:2])
    return out


def correspondent(ineq: Inequality, sig: Signature, eps: Mapping[str, str] | None = None,
                  s4_prefix: bool = True) -> Correspondence:
    """Translate (for DLE input), gate on inductiveness, reduce, and emit a sentence."""
    cands = _candidates(ineq, sig, eps, s4_prefix)
    if not cands:
        where = "at the given order-type" if eps is not None else "for any order-type"
        raise NotInductive(f"{kshow(ineq)} is not inductive {where}")
    last = None
    for _, _, e, inner, omega, translated, target, sahl in cands:
        lhs, rhs = compile_term(translated.lhs, target), compile_term(translated.rhs, target)
        try:
            red = alba_reduce(first_approximation(Inequality(lhs, rhs)), inner, omega)
        except Unsupported as exc:
            last = exc
            continue
        return Correspondence(ineq, translated, dict(e), omega, sahl, red, standard_translation(red.pure))
    raise last


# ------------------------------------------------------------------ oracle


@dataclass
class Verified:
    frames: int

    def __bool__(self) -> bool:
        return True


@dataclass
class Refuted:
    frame: Frame
    valid: bool
    fo_holds: bool

    def __bool__(self) -> bool:
        return False


def frame_class(ineq: Inequality, sig: Signature) -> tuple[Signature, str]:
    """The frame signature and valuation kind that give `ineq` its meaning."""
    used = connectives(ineq)
    if sig.dialect == DLE:
        return sig.restrict(used), PERSISTENT
    rels = {sig.get(c).relation for c in used if sig.get(c).relation is not None}
    source = sig.source
    if source is None:
        raise ValueError(f"signature {sig.name!r} does not record the frames it ranges over")
    return source.restrict(rels), ARBITRARY


def fo_holds(sentence, batch: FrameBatch) -> np.ndarray:
    """Truth of a sentence on each frame of a batch."""
    width = batch.n ** min(fo.quantifier_count(sentence) + 2, 12)
    step = max(1, (1 << 22) // width)
    out = []
    for part in batch.chunks(step):
        val = fo.evaluate(sentence, part.relation_arrays(), part.n)
        out.append(np.broadcast_to(val, (part.size,)))
    return np.concatenate(out)


def oracle_equivalence(ineq: Inequality, sentence, sig: Signature, max_worlds: int = 4) -> Verified | Refuted:
    """Compare frame validity with the sentence on every frame up to `max_worlds`."""
    if max_worlds < 1:
        raise ValueError("max_worlds must be positive")
    frame_sig, kind = frame_class(ineq, sig)
    count = 0
    for batch in enumerate_batches(frame_sig, max_worlds):
        valid = holds_on_batch(ineq, sig, batch, kind)
        holds = fo_holds(sentence, batch)
        bad = np.flatnonzero(valid != holds)
        if bad.size:
            i = int(bad[0])
            return Refuted(batch.frame(i), bool(valid[i]), bool(holds[i]))
        count += batch.size
    return Verified(count)


def oracle_sample(ineq: Inequality, sentence, sig: Signature, worlds: int, per_order: int,
                  seed: int = 0) -> Verified | Refuted:
    """Like `oracle_equivalence`, on random frames of one size instead of all of them."""
    frame_sig, kind = frame_class(ineq, sig)
    count = 0
    for batch in sample_batches(frame_sig, worlds, per_order, seed):
        valid = holds_on_batch(ineq, sig, batch, kind)
        bad = np.flatnonzero(valid != fo_holds(sentence, batch))
        if bad.size:
            i = int(bad[0])
            return Refuted(batch.frame(i), bool(valid[i]), not bool(valid[i]))
        count += batch.size
    return Verified(count)


# ------------------------------------------------------------------ rule-wise checks


def quasi_valid_on_batch(system, batch: FrameBatch) -> np.ndarray:
    """Per-frame validity of a conjunction of quasi-inequalities (arbitrary valuations)."""
    from .kernel import Evaluator, dtype_for

    ok = np.ones(batch.size, bool)
    n, dt = batch.n, dtype_for(batch.n)
    for q in system:
        props = sorted({v for i in q.antecedent + (q.conclusion,) for v in _props(i.lhs) | _props(i.rhs)})
        worlds = _all_world_vars(q)
        choices = [np.arange(1 << n, dtype=dt)] * len(props) + [(1 << np.arange(n)).astype(dt)] * len(worlds)
        if choices:
            grids = np.meshgrid(*choices, indexing="ij")
            env = {name: g.reshape(1, -1) for name, g in zip(props + worlds, grids)}
            n_vals = grids[0].size
        else:
            env, n_vals = {}, 1
        ev = Evaluator(n, batch.relation_arrays(), env)
        hold = np.ones((1, 1), bool)
        for i in q.antecedent:
            hold = hold & ((ev.eval(i.lhs) & ~ev.eval(i.rhs)) == 0)
        concl = (ev.eval(q.conclusion.lhs) & ~ev.eval(q.conclusion.rhs)) == 0
        bad = np.broadcast_to(hold & ~concl, (batch.size, n_vals))
        ok &= ~bad.any(axis=1)
    return ok


def check_steps(red: Reduction, batches) -> list[tuple[int, str, Frame]]:
    """Frames where consecutive systems of a reduction disagree."""
    out = []
    for batch in batches:
        prev = None
        for k, step in enumerate(red.steps):
            cur = quasi_valid_on_batch(step.system, batch)
            if prev is not None:
                bad = np.flatnonzero(prev != cur)
                if bad.size:
                    out.append((k, step.rule, batch.frame(int(bad[0]))))
            prev = cur
    return out
