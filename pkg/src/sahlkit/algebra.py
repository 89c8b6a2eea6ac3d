"""Finite lattice expansions: up-set algebras, their Boolean companions, and the embedding between them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .formula import And, App, Bot, Inequality, Neg, Or, Top, Var, variables
from .kernel import Evaluator, compile_term
from .semantics import Frame, batch_of
from .signature import (
    BAE,
    BOX_LEQ,
    DIA_GEQ,
    DLE,
    DUAL,
    ONE,
    STANDARD_NAMES,
    Signature,
    companion_name,
    target_signature,
)


class AlgebraError(ValueError):
    pass


@dataclass
class FiniteAlgebra:
    """A finite lattice given by its order matrix, with named operations as lookup tables.

    `ops[name]` has shape (N,)*arity and holds element indices.  `kinds[name]`
    records (family, order-type) so normality can be checked.
    """

    labels: tuple
    leq: np.ndarray
    ops: dict = field(default_factory=dict)
    kinds: dict = field(default_factory=dict)
    role: str = DLE
    meet: np.ndarray = field(init=False, repr=False)
    join: np.ndarray = field(init=False, repr=False)
    bottom: int = field(init=False)
    top: int = field(init=False)

    def __post_init__(self):
        leq = np.asarray(self.leq, bool)
        self.leq = leq
        n = len(self.labels)
        if leq.shape != (n, n):
            raise AlgebraError("order matrix does not match the carrier")
        if not (leq.diagonal().all() and not (leq & leq.T & ~np.eye(n, dtype=bool)).any()):
            raise AlgebraError("order is not reflexive and antisymmetric")
        if ((leq.astype(np.uint8) @ leq.astype(np.uint8) > 0) & ~leq).any():
            raise AlgebraError("order is not transitive")
        self.meet = np.zeros((n, n), int)
        self.join = np.zeros((n, n), int)
        for a in range(n):
            for b in range(n):
                self.meet[a, b] = self._extremum(leq[:, a] & leq[:, b], greatest=True)
                self.join[a, b] = self._extremum(leq[a] & leq[b], greatest=False)
        self.bottom = self._extremum(np.ones(n, bool), greatest=False)
        self.top = self._extremum(np.ones(n, bool), greatest=True)

    def _extremum(self, mask: np.ndarray, greatest: bool) -> int:
        idx = np.flatnonzero(mask)
        for i in idx:
            if greatest and self.leq[idx, i].all():
                return int(i)
            if not greatest and self.leq[i, idx].all():
                return int(i)
        raise AlgebraError("not a lattice: missing meet or join")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(label)

    def le(self, a: int, b: int) -> bool:
        return bool(self.leq[a, b])

    def apply(self, name: str, *args: int) -> int:
        return int(self.ops[name][tuple(args)])

    def complement(self, a: int) -> int:
        n = self.size
        for b in range(n):
            if self.meet[a, b] == self.bottom and self.join[a, b] == self.top:
                return b
        raise AlgebraError(f"{self.labels[a]} has no complement")

    def is_distributive(self) -> bool:
        m, j = self.meet, self.join
        r = range(self.size)
        return all(m[a, j[b, c]] == j[m[a, b], m[a, c]] for a in r for b in r for c in r)

    def normality_violations(self) -> list[str]:
        """Coordinatewise preservation of finite joins/meets per family and order-type."""
        out = []
        r = range(self.size)
        for name, (family, ot) in self.kinds.items():
            table = self.ops[name]
            k = table.ndim
            for i in range(k):
                reverse = ot[i] == DUAL
                # the operation in coordinate i turns `src` into `dst`
                if family == "F":
                    src, dst = (self.meet, self.join) if reverse else (self.join, self.join)
                    unit_in, unit_out = (self.top if reverse else self.bottom), self.bottom
                else:
                    src, dst = (self.join, self.meet) if reverse else (self.meet, self.meet)
                    unit_in, unit_out = (self.bottom if reverse else self.top), self.top
                for rest in itertools.product(r, repeat=k - 1):
                    def at(x):
                        return int(table[rest[:i] + (x,) + rest[i:]])
                    if at(unit_in) != unit_out:
                        out.append(f"{name} fails normality in coordinate {i}")
                        break
                    bad = next(((a, b) for a in r for b in r if at(src[a, b]) != dst[at(a), at(b)]), None)
                    if bad:
                        out.append(f"{name} fails distribution in coordinate {i} at "
                                   f"{self.labels[bad[0]]}, {self.labels[bad[1]]}")
                        break
        return out

    def describe(self) -> str:
        return f"{self.role} algebra with {self.size} elements and operations {sorted(self.ops)}"


def _mask_label(m: int, n: int) -> str:
    return "{" + ",".join(str(w) for w in range(n) if m >> w & 1) + "}"


def _subset_order(masks: list[int]) -> np.ndarray:
    a = np.array(masks)
    return (a[:, None] & ~a[None, :]) == 0


def _op_table(term_builder: Callable, arity: int, carrier: list[int], fr: Frame, sig: Signature,
              lookup: dict[int, int]) -> np.ndarray:
    """Evaluate an operation on every tuple of carrier elements at once."""
    names = [f"x{i}" for i in range(arity)]
    term = compile_term(term_builder(tuple(Var(x) for x in names)), sig)
    from .kernel import dtype_for

    dt = dtype_for(fr.worlds)
    cols = np.array(carrier, dtype=dt)
    if arity:
        grids = np.meshgrid(*[cols] * arity, indexing="ij")
        env = {x: g.reshape(1, -1) for x, g in zip(names, grids)}
    else:
        env = {}
    rels = batch_of([fr], _relation_names(fr)).relation_arrays()
    out = np.broadcast_to(Evaluator(fr.worlds, rels, env).eval(term), (1, len(carrier) ** arity))[0]
    try:
        idx = np.array([lookup[int(m)] for m in out])
    except KeyError as exc:
        raise AlgebraError(f"operation leaves the carrier (value {_mask_label(int(exc.args[0]), fr.worlds)})") from None
    return idx.reshape((len(carrier),) * arity)


def _relation_names(fr: Frame) -> list[str]:
    return [k for k in fr.relation_names() if k not in STANDARD_NAMES]


def _sig_of(fr: Frame, sig: Signature | None) -> Signature:
    sig = sig or fr.sig
    if sig is None:
        raise AlgebraError("a signature is needed to interpret the frame")
    return sig


def complex_algebra(fr: Frame, sig: Signature | None = None) -> FiniteAlgebra:
    """Up-sets of the frame with each connective read through its relation."""
    sig = _sig_of(fr, sig)
    carrier = sorted(fr_upsets(fr), key=lambda m: (bin(m).count("1"), m))
    lookup = {m: i for i, m in enumerate(carrier)}
    ops, kinds = {}, {}
    for c in sig.connectives:
        ops[c.name] = _op_table(lambda xs, c=c: App(c.name, xs), c.arity, carrier, fr, sig, lookup)
        kinds[c.name] = (c.family, c.coord_types.entries)
    alg = FiniteAlgebra(tuple(_mask_label(m, fr.worlds) for m in carrier), _subset_order(carrier), ops, kinds, DLE)
    alg.masks = carrier
    return alg


def fr_upsets(fr: Frame) -> list[int]:
    return [sum(1 << w for w in u) for u in fr.upsets()]


@dataclass
class EmbeddingTriple:
    """e: A -> B with left adjoint c and right adjoint iota, as index tables."""

    A: FiniteAlgebra
    B: FiniteAlgebra
    e: np.ndarray
    c: np.ndarray
    iota: np.ndarray

    def box(self) -> np.ndarray:
        """The interior operator e . iota on B."""
        return self.e[self.iota]

    def dia(self) -> np.ndarray:
        """The closure operator e . c on B."""
        return self.e[self.c]


def adjoints(A: FiniteAlgebra, B: FiniteAlgebra, e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left and right adjoints of e computed from the orders alone."""
    left, right = [], []
    for b in range(B.size):
        above = [a for a in range(A.size) if B.leq[b, e[a]]]
        below = [a for a in range(A.size) if B.leq[e[a], b]]
        lo = [a for a in above if all(A.leq[a, x] for x in above)]
        hi = [a for a in below if all(A.leq[x, a] for x in below)]
        if not lo or not hi:
            raise AlgebraError(f"e has no adjoint at {B.labels[b]}")
        left.append(lo[0])
        right.append(hi[0])
    return np.array(left), np.array(right)


def boolean_companion(fr: Frame, sig: Signature | None = None,
                      A: FiniteAlgebra | None = None) -> tuple[FiniteAlgebra, EmbeddingTriple]:
    """Powerset algebra with the companion operations, plus e, c and iota."""
    sig = _sig_of(fr, sig)
    A = A if A is not None else complex_algebra(fr, sig)
    target = target_signature(sig)
    n = fr.worlds
    carrier = list(range(1 << n))
    lookup = {m: m for m in carrier}
    ops, kinds = {}, {}
    for c in target.connectives:
        ops[c.name] = _op_table(lambda xs, c=c: App(c.name, xs), c.arity, carrier, fr, target, lookup)
        kinds[c.name] = (c.family, c.coord_types.entries)
    full = (1 << n) - 1
    ops["neg"] = np.array([full ^ m for m in carrier])
    B = FiniteAlgebra(tuple(_mask_label(m, n) for m in carrier), _subset_order(carrier), ops, kinds, BAE)
    B.masks = carrier
    e = np.array(A.masks)
    a_index = {m: i for i, m in enumerate(A.masks)}
    up = np.array([a_index[_mask(fr.up(_set(m)))] for m in carrier])
    inner = np.array([a_index[full ^ _mask(fr.down(_set(full ^ m)))] for m in carrier])
    return B, EmbeddingTriple(A, B, e, up, inner)


def _mask(xs) -> int:
    return sum(1 << w for w in xs)


def _set(m: int) -> set[int]:
    return {w for w in range(m.bit_length()) if m >> w & 1}


# ------------------------------------------------------------------ checks


@dataclass
class CheckReport:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, msg: str):
        if len(self.failures) < 20:
            self.failures.append(msg)
        else:
            self.failures[-1] = "(further failures omitted)"

    def to_json(self) -> dict:
        return {"check": self.name, "ok": self.ok, "checked": self.checked, "failures": self.failures}


def check_diagrams(A: FiniteAlgebra, B: FiniteAlgebra, t: EmbeddingTriple,
                   names: list[str] | None = None) -> CheckReport:
    """f^A = c . f° . e^eps and g^A = iota . g° . e^eps, pointwise."""
    rep = CheckReport("diagrams")
    neg = B.ops["neg"] if "neg" in B.ops else np.array([B.complement(b) for b in range(B.size)])
    for name in names if names is not None else sorted(A.kinds):
        family, ot = A.kinds[name]
        comp = B.ops[companion_name(name)]
        back = t.c if family == "F" else t.iota
        for args in itertools.product(range(A.size), repeat=len(ot)):
            bargs = tuple(int(neg[t.e[a]]) if o == DUAL else int(t.e[a]) for a, o in zip(args, ot))
            want = int(A.ops[name][args])
            got = int(back[comp[bargs]])
            rep.checked += 1
            if want != got:
                shown = ", ".join(A.labels[a] for a in args)
                rep.fail(f"{name}({shown}) = {A.labels[want]} but the companion route gives {A.labels[got]}")
    return rep


def adjunction_check(t: EmbeddingTriple) -> CheckReport:
    A, B = t.A, t.B
    rep = CheckReport("adjunction")
    for a in range(A.size):
        for b in range(B.size):
            rep.checked += 1
            if A.leq[t.c[b], a] != B.leq[b, t.e[a]]:
                rep.fail(f"c({B.labels[b]}) <= {A.labels[a]} disagrees with {B.labels[b]} <= e({A.labels[a]})")
            if B.leq[t.e[a], b] != A.leq[a, t.iota[b]]:
                rep.fail(f"e({A.labels[a]}) <= {B.labels[b]} disagrees with {A.labels[a]} <= iota({B.labels[b]})")
    for a in range(A.size):
        for a2 in range(A.size):
            if A.leq[a, a2] != B.leq[t.e[a], t.e[a2]]:
                rep.fail("e is not an order embedding")
            if t.e[A.meet[a, a2]] != B.meet[t.e[a], t.e[a2]] or t.e[A.join[a, a2]] != B.join[t.e[a], t.e[a2]]:
                rep.fail("e is not a lattice homomorphism")
    return rep


def interior_closure_check(t: EmbeddingTriple) -> CheckReport:
    """e.iota is an interior operator, e.c a closure operator, and both fix the image of e."""
    B = t.B
    box, dia = t.box(), t.dia()
    rep = CheckReport("interior-closure")
    for b in range(B.size):
        rep.checked += 1
        if not B.leq[box[b], b]:
            rep.fail(f"i1 fails at {B.labels[b]}")
        if not B.leq[box[b], box[box[b]]]:
            rep.fail(f"i3 fails at {B.labels[b]}")
        if not B.leq[b, dia[b]]:
            rep.fail(f"c1 fails at {B.labels[b]}")
        if not B.leq[dia[dia[b]], dia[b]]:
            rep.fail(f"c3 fails at {B.labels[b]}")
        if t.iota[t.e[t.iota[b]]] != t.iota[b] or t.c[t.e[t.c[b]]] != t.c[b]:
            rep.fail(f"adjoint round trip fails at {B.labels[b]}")
        for b2 in range(B.size):
            if B.leq[b, b2] and not (B.leq[box[b], box[b2]] and B.leq[dia[b], dia[b2]]):
                rep.fail(f"i2/c2 fails at {B.labels[b]} <= {B.labels[b2]}")
    for a in range(t.A.size):
        if t.e[t.iota[t.e[a]]] != t.e[a] or t.e[t.c[t.e[a]]] != t.e[a]:
            rep.fail(f"e.iota.e or e.c.e differs from e at {t.A.labels[a]}")
    return rep


def s4_check(B: FiniteAlgebra, t: EmbeddingTriple | None = None, box: np.ndarray | None = None,
             dia: np.ndarray | None = None) -> CheckReport:
    """Normality, T and 4 for a box (meets) and a diamond (joins) on B."""
    if box is None and t is not None:
        box = t.box()
    if dia is None and t is not None:
        dia = t.dia()
    rep = CheckReport("s4")
    r = range(B.size)
    if box is not None:
        if box[B.top] != B.top:
            rep.fail("box does not fix top")
        for b in r:
            rep.checked += 1
            if not B.leq[box[b], b]:
                rep.fail(f"T fails for box at {B.labels[b]}")
            if not B.leq[box[b], box[box[b]]]:
                rep.fail(f"4 fails for box at {B.labels[b]}")
            for b2 in r:
                if box[B.meet[b, b2]] != B.meet[box[b], box[b2]]:
                    rep.fail(f"box does not preserve the meet of {B.labels[b]} and {B.labels[b2]}")
    if dia is not None:
        if dia[B.bottom] != B.bottom:
            rep.fail("diamond does not fix bottom")
        for b in r:
            rep.checked += 1
            if not B.leq[b, dia[b]]:
                rep.fail(f"T fails for diamond at {B.labels[b]}")
            if not B.leq[dia[dia[b]], dia[b]]:
                rep.fail(f"4 fails for diamond at {B.labels[b]}")
            for b2 in r:
                if dia[B.join[b, b2]] != B.join[dia[b], dia[b2]]:
                    rep.fail(f"diamond does not preserve the join of {B.labels[b]} and {B.labels[b2]}")
    return rep


def companion_s4_check(B: FiniteAlgebra, t: EmbeddingTriple) -> CheckReport:
    """The named box_leq/dia_geq operations of B coincide with e.iota and e.c."""
    rep = s4_check(B, t)
    for name, table in ((BOX_LEQ, t.box()), (DIA_GEQ, t.dia())):
        if name in B.ops and not np.array_equal(B.ops[name], table):
            rep.fail(f"{name} differs from the operator induced by the embedding")
    return rep


def frame_suite(fr: Frame, sig: Signature | None = None) -> list[CheckReport]:
    """Every check that applies to the algebra pair built from one frame."""
    sig = _sig_of(fr, sig)
    A = complex_algebra(fr, sig)
    B, t = boolean_companion(fr, sig, A)
    return [check_diagrams(A, B, t), adjunction_check(t), interior_closure_check(t),
            companion_s4_check(B, t)]


# ------------------------------------------------------------------ algebraic validity


def holds_in(ineq: Inequality, A: FiniteAlgebra) -> bool:
    """Does the inequality hold under every assignment into A?"""
    names = variables(ineq)
    n = A.size
    if names:
        grids = np.meshgrid(*[np.arange(n)] * len(names), indexing="ij")
        env = {x: g.reshape(-1) for x, g in zip(names, grids)}
    else:
        env = {}
    size = n ** len(names)

    def ev(f) -> np.ndarray:
        if isinstance(f, Var):
            return env[f.name]
        if isinstance(f, Bot):
            return np.full(size, A.bottom)
        if isinstance(f, Top):
            return np.full(size, A.top)
        if isinstance(f, And):
            return A.meet[ev(f.left), ev(f.right)]
        if isinstance(f, Or):
            return A.join[ev(f.left), ev(f.right)]
        if isinstance(f, Neg):
            return A.ops["neg"][ev(f.arg)]
        if isinstance(f, App):
            table = A.ops[f.conn]
            if not f.args:
                return np.full(size, int(table))
            return table[tuple(ev(a) for a in f.args)]
        raise TypeError(f)

    lhs, rhs = np.broadcast_to(ev(ineq.lhs), (size,)), np.broadcast_to(ev(ineq.rhs), (size,))
    return bool(A.leq[lhs, rhs].all())


def canonical_extension(A: FiniteAlgebra) -> FiniteAlgebra:
    """A finite lattice expansion is its own canonical extension."""
    return A


# ------------------------------------------------------------------ the mix counterexample


# Atoms of the eight-element Boolean algebra.
_B, _X, _C = 1, 2, 4
MIX_NAMES = {0: "bot", _B: "b", _X: "x", _C: "c", _B | _X: "a", _X | _C: "d", _B | _C: "y", 7: "top"}
_MIX_A = [0, _B, _C, _B | _C, 7]


def _mix_box_b(z: int) -> int:
    # b goes to a, c to d, bottom to x and y to top: the join with x.
    return z | _X


def _mix_box_a(z: int) -> int:
    return 7 if z == _B | _C else z


@dataclass
class MixReport:
    A: FiniteAlgebra
    B: FiniteAlgebra
    triple: EmbeddingTriple
    values: dict
    diagram: CheckReport
    mix_holds: bool
    notes: list

    @property
    def ok(self) -> bool:
        v = self.values
        return (self.diagram.ok and not self.mix_holds and v["box_le(a)"] == "b" and v["box_le(d)"] == "c"
                and v["box_le(x)"] == "bot" and v["box_le box_o box_le(b)"] == "b" and v["box_o(b)"] == "a")

    def to_json(self) -> dict:
        return {"ok": self.ok, "values": self.values, "diagram": self.diagram.to_json(),
                "mix_axiom_holds": self.mix_holds, "notes": self.notes}

    def lines(self) -> list[str]:
        out = [f"A: {', '.join(self.A.labels)}", f"B: {', '.join(self.B.labels)}"]
        out += [f"{k} = {v}" for k, v in self.values.items()]
        out.append(f"diagram commutes: {self.diagram.ok} ({self.diagram.checked} points)")
        v = self.values
        out.append(f"mix axiom: box_le box_o box_le(b) = {v['box_le box_o box_le(b)']}, "
                   f"box_o(b) = {v['box_o(b)']}, holds: {self.mix_holds}")
        out += [f"note: {n}" for n in self.notes]
        return out


def mix_counterexample() -> MixReport:
    """A box on a five-element lattice and a box on an eight-element Boolean algebra
    that satisfy the embedding diagram while the mix axiom fails."""
    b_carrier = list(range(8))
    B = FiniteAlgebra(tuple(MIX_NAMES[m] for m in b_carrier), _subset_order(b_carrier),
                      {"box_o": np.array([_mix_box_b(m) for m in b_carrier]),
                       "neg": np.array([7 ^ m for m in b_carrier])},
                      {"box_o": ("G", (ONE,))}, BAE)
    A = FiniteAlgebra(tuple(MIX_NAMES[m] for m in _MIX_A), _subset_order(_MIX_A),
                      {"box": np.array([_MIX_A.index(_mix_box_a(m)) for m in _MIX_A])},
                      {"box": ("G", (ONE,))}, DLE)
    e = np.array(_MIX_A)
    c, iota = adjoints(A, B, e)
    t = EmbeddingTriple(A, B, e, c, iota)
    box_le = t.box()
    box_o = B.ops["box_o"]
    name = B.labels
    values = {f"box_le({name[m]})": name[box_le[m]] for m in b_carrier}
    values["box_o(b)"] = name[box_o[_B]]
    values["box_le box_o box_le(b)"] = name[box_le[box_o[box_le[_B]]]]
    values["iota(box_o(e(y)))"] = A.labels[iota[box_o[e[A.index("y")]]]]
    values["box^A(y)"] = A.labels[A.apply("box", A.index("y"))]
    diagram = check_diagrams(A, B, t, ["box"])
    mix_holds = all(box_le[box_o[box_le[m]]] == box_o[m] for m in b_carrier)
    notes = ["B has atoms b, x, c with a = b v x, d = x v c, y = b v c; A = {bot, b, c, y, top} sits inside B",
             "box_o is z -> z v x (b to a, c to d, bot to x, y to top, others fixed)",
             "A's box fixes bot, b, c, top and sends y to top"]
    return MixReport(A, B, t, values, diagram, mix_holds, notes)


# ------------------------------------------------------------------ batched checks


def poset_suite(n: int, leq) -> list[CheckReport]:
    """Checks that depend only on the order: adjunction, interior/closure, S4."""
    from .signature import builtin

    fr = Frame.make(n, leq, {}, builtin("lattice"))
    A = complex_algebra(fr)
    B, t = boolean_companion(fr, A=A)
    return [adjunction_check(t), interior_closure_check(t), companion_s4_check(B, t)]


def batch_diagrams(batch, sig: Signature) -> CheckReport:
    """Diagram commutation for every connective, on every frame of a batch at once."""
    from .kernel import dtype_for

    n = batch.n
    full = (1 << n) - 1
    fr0 = Frame.make(n, batch.leq, {}, sig)
    upsets = fr_upsets(fr0)
    up_of = np.array([_mask(fr0.up(_set(m))) for m in range(1 << n)])
    inner_of = np.array([full ^ _mask(fr0.down(_set(full ^ m))) for m in range(1 << n)])
    target = target_signature(sig)
    rels = batch.relation_arrays()
    dt = dtype_for(n)
    rep = CheckReport("diagrams")
    for c in sig.connectives:
        k = c.arity
        xs = tuple(Var(f"x{i}") for i in range(k))
        cols = np.array(upsets, dtype=dt)
        if k:
            grids = [g.reshape(1, -1) for g in np.meshgrid(*[cols] * k, indexing="ij")]
        else:
            grids = []
        env_a = {f"x{i}": g for i, g in enumerate(grids)}
        env_b = {f"x{i}": (full ^ g).astype(dt) if t == DUAL else g
                 for i, (g, t) in enumerate(zip(grids, c.coord_types.entries))}
        direct = Evaluator(n, rels, env_a).eval(compile_term(App(c.name, xs), sig))
        routed = Evaluator(n, rels, env_b).eval(compile_term(App(companion_name(c.name), xs), target))
        back = up_of if c.family == "F" else inner_of
        routed = back[routed.astype(np.int64)]
        size = (batch.size, len(upsets) ** k)
        direct, routed = np.broadcast_to(direct, size), np.broadcast_to(routed, size)
        rep.checked += direct.size
        bad = np.argwhere(direct != routed)
        if bad.size:
            f, v = bad[0]
            rep.fail(f"{c.name} on frame {batch.frame(int(f)).describe()} (argument tuple {int(v)})")
    return rep
