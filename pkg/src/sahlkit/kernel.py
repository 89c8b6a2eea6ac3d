"""A small term language shared by the semantics and the correspondence engine.

Every connective is compiled to an existential (`Dia`) or universal (`Box`)
operator over a frame relation, with Boolean negation wrapping the arguments
at order-reversing coordinates.  Residuals and adjoints are the same operators
over a permuted relation, which is what `RelRef.order` records.

Subsets of worlds are bitmasks held in numpy arrays, so one evaluation covers
a whole batch of frames and a whole batch of valuations at once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .formula import And, App, Bot, Neg, Or, Top, Var, show as _show_formula
from .signature import BOX_LEQ, DIA_GEQ, DUAL, Signature

LEQ = "leq"


@dataclass(frozen=True)
class RelRef:
    """Relation `base` read with its arguments permuted.

    For an operator evaluated at world x with successor tuple y1..yk, the
    atom is base(b[order[0]], ..., b[order[k]]) where b = (x, y1, ..., yk).
    """

    base: str
    order: tuple[int, ...]

    def residual(self, k: int) -> "RelRef":
        """Swap the roles of the evaluation point and coordinate k (1-based)."""

        def swap(i: int) -> int:
            return k if i == 0 else 0 if i == k else i

        return RelRef(self.base, tuple(swap(i) for i in self.order))

    def label(self) -> str:
        ident = tuple(range(len(self.order)))
        if self.order == ident:
            return self.base
        return self.base + "[" + "".join(str(i) for i in self.order) + "]"


@dataclass(frozen=True)
class Nom:
    """The singleton of the world named `var`."""

    var: str

    def show(self, pretty: bool = False) -> str:
        return self.var if self.var.startswith("j") else "~" + self.var


@dataclass(frozen=True)
class CoNom:
    """The complement of the singleton of the world named `var`."""

    var: str

    def show(self, pretty: bool = False) -> str:
        return self.var if self.var.startswith("m") else "~" + self.var


@dataclass(frozen=True)
class Dia:
    rel: RelRef
    args: tuple = ()

    def show(self, pretty: bool = False) -> str:
        return _show_modal("<", ">", self, pretty)


@dataclass(frozen=True)
class Box:
    rel: RelRef
    args: tuple = ()

    def show(self, pretty: bool = False) -> str:
        return _show_modal("[", "]", self, pretty)


DIA_GEQ_REL = RelRef(LEQ, (1, 0))
BOX_LEQ_REL = RelRef(LEQ, (0, 1))

_NAMED = {
    ("dia", DIA_GEQ_REL): "diage",
    ("box", BOX_LEQ_REL): "boxle",
    ("dia", BOX_LEQ_REL): "diale",
    ("box", DIA_GEQ_REL): "boxge",
}


def _show_modal(open_: str, close: str, t, pretty: bool) -> str:
    kind = "dia" if isinstance(t, Dia) else "box"
    head = _NAMED.get((kind, t.rel)) or f"{open_}{t.rel.label()}{close}"
    if not t.args:
        return head
    if len(t.args) == 1:
        return f"{head}({show(t.args[0], pretty)})"
    return head + "(" + ", ".join(show(a, pretty) for a in t.args) + ")"


def show(t, pretty: bool = False) -> str:
    """Printer covering both formula and kernel nodes."""
    if isinstance(t, (Nom, CoNom, Dia, Box)):
        return t.show(pretty)
    if isinstance(t, Neg):
        inner = show(t.arg, pretty)
        simple = isinstance(t.arg, (Var, Nom, CoNom, Dia, Box, Neg, Bot, Top))
        return "~" + (inner if simple else f"({inner})")
    if isinstance(t, (And, Or)):
        op = " /\\ " if isinstance(t, And) else " \\/ "

        def part(x):
            s = show(x, pretty)
            return f"({s})" if isinstance(x, (And, Or)) and type(x) is not type(t) else s

        return part(t.left) + op + part(t.right)
    return _show_formula(t, pretty)


def compile_term(f, sig: Signature):
    """Translate a formula over `sig` into kernel operators."""
    if isinstance(f, (Var, Bot, Top, Nom, CoNom)):
        return f
    if isinstance(f, And):
        return And(compile_term(f.left, sig), compile_term(f.right, sig))
    if isinstance(f, Or):
        return Or(compile_term(f.left, sig), compile_term(f.right, sig))
    if isinstance(f, Neg):
        return Neg(compile_term(f.arg, sig))
    if isinstance(f, (Dia, Box)):
        return type(f)(f.rel, tuple(compile_term(a, sig) for a in f.args))
    if isinstance(f, App):
        args = tuple(compile_term(a, sig) for a in f.args)
        if f.conn == DIA_GEQ:
            return Dia(DIA_GEQ_REL, args)
        if f.conn == BOX_LEQ:
            return Box(BOX_LEQ_REL, args)
        c = sig.get(f.conn)
        args = tuple(Neg(a) if t == DUAL else a for a, t in zip(args, c.coord_types))
        rel = RelRef(c.relation_name, tuple(range(c.arity + 1)))
        return Dia(rel, args) if c.family == "F" else Box(rel, args)
    raise TypeError(f"cannot compile {f!r}")


def relation_bases(t) -> set[str]:
    out = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, (Dia, Box)):
            out.add(x.rel.base)
            stack.extend(x.args)
        elif isinstance(x, (And, Or)):
            stack += [x.left, x.right]
        elif isinstance(x, Neg):
            stack.append(x.arg)
    return out


def dtype_for(n: int):
    if n <= 8:
        return np.uint8
    if n <= 16:
        return np.uint16
    if n <= 32:
        return np.uint32
    return np.uint64


class Evaluator:
    """Evaluates kernel terms on a batch of frames sharing one world count.

    `relations` maps a base name to a boolean array of shape (F, n, ..., n);
    `env` maps variable and world-variable names to mask arrays that
    broadcast against shape (F, V).  World variables hold singleton masks.
    """

    def __init__(self, n: int, relations: dict[str, np.ndarray], env: dict[str, np.ndarray]):
        self.n = n
        self.dtype = dtype_for(n)
        self.full = self.dtype((1 << n) - 1)
        self.relations = relations
        self.env = env
        self._masks: dict[RelRef, np.ndarray] = {}
        self._memo: dict = {}

    def _relation(self, ref: RelRef) -> np.ndarray:
        base = self.relations[ref.base]
        axes = [0] + [1 + i for i in np.argsort(ref.order)]
        return np.transpose(base, axes)

    def _last_masks(self, ref: RelRef) -> np.ndarray:
        """Relation packed along its last coordinate: shape (F, n, ..., n) for k-1 middle axes."""
        got = self._masks.get(ref)
        if got is None:
            rel = self._relation(ref)
            weights = (1 << np.arange(self.n)).astype(self.dtype)
            got = (rel.astype(self.dtype) * weights).sum(axis=-1, dtype=self.dtype)
            self._masks[ref] = got
        return got

    def eval(self, t) -> np.ndarray:
        key = t
        got = self._memo.get(key)
        if got is not None:
            return got
        got = self._eval(t)
        self._memo[key] = got
        return got

    def _eval(self, t) -> np.ndarray:
        full = self.full
        if isinstance(t, Var):
            return self.env[t.name]
        if isinstance(t, Nom):
            return self.env[t.var]
        if isinstance(t, CoNom):
            return full ^ self.env[t.var]
        if isinstance(t, Bot):
            return np.zeros((1, 1), self.dtype)
        if isinstance(t, Top):
            return np.full((1, 1), full, self.dtype)
        if isinstance(t, And):
            return self.eval(t.left) & self.eval(t.right)
        if isinstance(t, Or):
            return self.eval(t.left) | self.eval(t.right)
        if isinstance(t, Neg):
            return full ^ self.eval(t.arg)
        if isinstance(t, Dia):
            return self._dia(t.rel, [self.eval(a) for a in t.args])
        if isinstance(t, Box):
            return full ^ self._dia(t.rel, [full ^ self.eval(a) for a in t.args])
        raise TypeError(f"cannot evaluate {t!r}")

    def _dia(self, ref: RelRef, args: list[np.ndarray]) -> np.ndarray:
        n, dt = self.n, self.dtype
        masks = self._last_masks(ref)
        k = len(args)
        if k == 0:
            weights = (1 << np.arange(n)).astype(dt)
            return (masks.astype(dt) * weights).sum(axis=-1, dtype=dt)[:, None]
        last = args[-1]
        result = None
        for w in range(n):
            acc = None
            for prefix in itertools.product(range(n), repeat=k - 1):
                m = masks[(slice(None), w) + prefix][:, None]
                hit = (m & last) != 0
                for i, v in enumerate(prefix):
                    hit = hit & (((args[i] >> v) & 1) != 0)
                acc = hit if acc is None else (acc | hit)
            part = acc.astype(dt) << dt(w)
            result = part if result is None else (result | part)
        return result


def singleton(n: int, w: int):
    return dtype_for(n)(1 << w)
