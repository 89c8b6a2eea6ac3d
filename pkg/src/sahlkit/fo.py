"""First-order formulas over the frame vocabulary: printing, simplification, evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class Not:
    arg: "FO"


@dataclass(frozen=True)
class Conj:
    items: tuple["FO", ...]


@dataclass(frozen=True)
class Disj:
    items: tuple["FO", ...]


@dataclass(frozen=True)
class All:
    var: str
    body: "FO"


@dataclass(frozen=True)
class Ex:
    var: str
    body: "FO"


@dataclass(frozen=True)
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)

FO = Atom | Eq | Not | Conj | Disj | All | Ex | Const


def implies(a, b):
    return Disj((Not(a), b))


def free_vars(f) -> set[str]:
    if isinstance(f, Atom):
        return set(f.args)
    if isinstance(f, Eq):
        return {f.left, f.right}
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (Conj, Disj)):
        out = set()
        for g in f.items:
            out |= free_vars(g)
        return out
    if isinstance(f, (All, Ex)):
        return free_vars(f.body) - {f.var}
    return set()


def substitute(f, var: str, value: str):
    if isinstance(f, Atom):
        return Atom(f.rel, tuple(value if a == var else a for a in f.args))
    if isinstance(f, Eq):
        return Eq(value if f.left == var else f.left, value if f.right == var else f.right)
    if isinstance(f, Not):
        return Not(substitute(f.arg, var, value))
    if isinstance(f, (Conj, Disj)):
        return type(f)(tuple(substitute(g, var, value) for g in f.items))
    if isinstance(f, (All, Ex)):
        if f.var == var:
            return f
        return type(f)(f.var, substitute(f.body, var, value))
    return f


# ---------------------------------------------------------------- simplify


def _flatten(kind, items):
    out = []
    for g in items:
        if isinstance(g, kind):
            out.extend(g.items)
        else:
            out.append(g)
    return out


def _mk(kind, items):
    unit, zero = (TRUE, FALSE) if kind is Conj else (FALSE, TRUE)
    seen = []
    for g in _flatten(kind, items):
        if g == zero:
            return zero
        if g == unit or g in seen:
            continue
        seen.append(g)
    for g in seen:
        if nnf(Not(g)) in seen:
            return zero
    if not seen:
        return unit
    if len(seen) == 1:
        return seen[0]
    return kind(tuple(seen))


def nnf(f):
    """Push negations to the atoms."""
    if isinstance(f, Not):
        g = f.arg
        if isinstance(g, Not):
            return nnf(g.arg)
        if isinstance(g, Conj):
            return _mk(Disj, [nnf(Not(x)) for x in g.items])
        if isinstance(g, Disj):
            return _mk(Conj, [nnf(Not(x)) for x in g.items])
        if isinstance(g, All):
            return Ex(g.var, nnf(Not(g.body)))
        if isinstance(g, Ex):
            return All(g.var, nnf(Not(g.body)))
        if isinstance(g, Const):
            return Const(not g.value)
        if isinstance(g, Eq) and g.left == g.right:
            return FALSE
        return f
    if isinstance(f, (Conj, Disj)):
        return _mk(type(f), [nnf(x) for x in f.items])
    if isinstance(f, (All, Ex)):
        return type(f)(f.var, nnf(f.body))
    if isinstance(f, Eq) and f.left == f.right:
        return TRUE
    return f


def _one_point(f):
    """Eliminate a quantifier whose variable is pinned by an equation."""
    kind, pin = (Conj, Eq) if isinstance(f, Ex) else (Disj, None)
    items = f.body.items if isinstance(f.body, kind) else (f.body,)
    for i, g in enumerate(items):
        eq = g if isinstance(f, Ex) else (g.arg if isinstance(g, Not) else None)
        if isinstance(eq, Eq) and eq.left != eq.right and f.var in (eq.left, eq.right):
            other = eq.right if eq.left == f.var else eq.left
            rest = [substitute(x, f.var, other) for j, x in enumerate(items) if j != i]
            return _mk(kind, rest)
    return None


def simplify(f):
    f = nnf(f)
    for _ in range(100):
        g = _simplify_once(f)
        if g == f:
            return f
        f = g
    return f


def _simplify_once(f):
    if isinstance(f, (Conj, Disj)):
        return _mk(type(f), [_simplify_once(x) for x in f.items])
    if isinstance(f, Not):
        return nnf(Not(_simplify_once(f.arg)))
    if isinstance(f, (All, Ex)):
        body = _simplify_once(f.body)
        if f.var not in free_vars(body):
            return body
        g = type(f)(f.var, body)
        pinned = _one_point(g)
        if pinned is not None:
            return pinned
        # Move conjuncts/disjuncts not mentioning the variable outside.
        kind = Conj if isinstance(f, Ex) else Disj
        if isinstance(body, kind):
            inside = [x for x in body.items if f.var in free_vars(x)]
            outside = [x for x in body.items if f.var not in free_vars(x)]
            if outside:
                return _mk(kind, outside + [type(f)(f.var, _mk(kind, inside))])
        return g
    return f


# ---------------------------------------------------------------- printing


def rel_symbol(rel: str) -> str:
    return "<=" if rel == "leq" else "R_" + rel


def to_sexpr(f) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return "(" + " ".join((rel_symbol(f.rel),) + f.args) + ")"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.arg)})"
    if isinstance(f, Conj):
        return "(and " + " ".join(to_sexpr(x) for x in f.items) + ")"
    if isinstance(f, Disj):
        return "(or " + " ".join(to_sexpr(x) for x in f.items) + ")"
    if isinstance(f, All):
        return f"(forall {f.var} {to_sexpr(f.body)})"
    if isinstance(f, Ex):
        return f"(exists {f.var} {to_sexpr(f.body)})"
    raise TypeError(f)


def to_infix(f) -> str:
    if isinstance(f, Const):
        return "T" if f.value else "F"
    if isinstance(f, Atom):
        if f.rel == "leq":
            return f"{f.args[0]} <= {f.args[1]}"
        return f"{rel_symbol(f.rel)}({', '.join(f.args)})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Not):
        if isinstance(f.arg, Eq):
            return f"{f.arg.left} != {f.arg.right}"
        if isinstance(f.arg, Atom) and f.arg.rel == "leq":
            return f"~({to_infix(f.arg)})"
        return "~" + _wrap(f.arg)
    if isinstance(f, Conj):
        return " & ".join(_wrap(x) for x in f.items)
    if isinstance(f, Disj):
        negs = [x for x in f.items if isinstance(x, Not) and not isinstance(x.arg, Eq)]
        if negs and len(negs) < len(f.items):
            rest = [x for x in f.items if x not in negs]
            lhs = " & ".join(_wrap(x.arg) for x in negs)
            return f"{lhs} -> " + " | ".join(_wrap(x) for x in rest)
        return " | ".join(_wrap(x) for x in f.items)
    if isinstance(f, (All, Ex)):
        q = "forall" if isinstance(f, All) else "exists"
        vs = [f.var]
        body = f.body
        while isinstance(body, type(f)):
            vs.append(body.var)
            body = body.body
        return f"{q} {' '.join(vs)}. {_wrap(body, quant=True)}"
    raise TypeError(f)


def _wrap(f, quant: bool = False) -> str:
    s = to_infix(f)
    if isinstance(f, (Conj, Disj)) or (isinstance(f, (All, Ex)) and not quant):
        return f"({s})"
    return s


def parse_sexpr(text: str):
    """Read back the s-expression form."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok != "(":
            raise ValueError(f"unexpected token {tok!r}")
        head = tokens[pos]
        pos += 1
        if head in ("forall", "exists"):
            var = tokens[pos]
            pos += 1
            body = read()
            node = (All if head == "forall" else Ex)(var, body)
        elif head in ("and", "or"):
            items = []
            while tokens[pos] != ")":
                items.append(read())
            node = (Conj if head == "and" else Disj)(tuple(items))
        elif head == "not":
            node = Not(read())
        elif head == "=":
            node = Eq(tokens[pos], tokens[pos + 1])
            pos += 2
        else:
            rel = "leq" if head == "<=" else head[2:] if head.startswith("R_") else head
            args = []
            while tokens[pos] != ")":
                args.append(tokens[pos])
                pos += 1
            node = Atom(rel, tuple(args))
        if tokens[pos] != ")":
            raise ValueError("expected ')'")
        pos += 1
        return node

    try:
        result = read()
    except IndexError:
        raise ValueError("unexpected end of input") from None
    if pos != len(tokens):
        raise ValueError("trailing tokens")
    return result


# ---------------------------------------------------------------- evaluation


def _align(vars_: tuple, arr: np.ndarray, target: tuple) -> np.ndarray:
    """Reorder and broadcast an array over `vars_` to the axes of `target`."""
    perm = [0] + [1 + vars_.index(v) for v in target if v in vars_]
    arr = np.transpose(arr, perm)
    shape = list(arr.shape[:1])
    it = iter(arr.shape[1:])
    for v in target:
        shape.append(next(it) if v in vars_ else 1)
    return arr.reshape(shape)


_LETTERS = "abcdefghijklmnopqrstuvwxy"


def evaluate(f, relations: dict[str, np.ndarray], n: int) -> np.ndarray:
    """Truth value of a sentence on each frame; relations have a leading frame axis."""
    vars_, arr = _eval(f, relations, n)
    if vars_:
        raise ValueError(f"formula has free variables {vars_}")
    return arr


def _eval(f, rels, n):
    if isinstance(f, Const):
        return (), np.array([f.value])
    if isinstance(f, Atom):
        base = rels[f.rel]
        uniq = tuple(dict.fromkeys(f.args))
        letters = {v: _LETTERS[i] for i, v in enumerate(uniq)}
        sub = "z" + "".join(letters[a] for a in f.args) + "->z" + "".join(letters[v] for v in uniq)
        return uniq, np.einsum(sub, base.astype(np.uint8)).astype(bool)
    if isinstance(f, Eq):
        if f.left == f.right:
            return (), np.array([True])
        return (f.left, f.right), np.eye(n, dtype=bool)[None]
    if isinstance(f, Not):
        v, a = _eval(f.arg, rels, n)
        return v, ~a
    if isinstance(f, (Conj, Disj)):
        parts = [_eval(g, rels, n) for g in f.items]
        target = tuple(dict.fromkeys(v for vs, _ in parts for v in vs))
        acc = None
        for vs, a in parts:
            a = _align(vs, a, target)
            if acc is None:
                acc = a
            elif isinstance(f, Conj):
                acc = acc & a
            else:
                acc = acc | a
        return target, acc
    if isinstance(f, (All, Ex)):
        vs, a = _eval(f.body, rels, n)
        if f.var not in vs:
            return vs, a
        axis = 1 + vs.index(f.var)
        red = a.all(axis=axis) if isinstance(f, All) else a.any(axis=axis)
        return tuple(v for v in vs if v != f.var), red
    raise TypeError(f)


def quantifier_count(f) -> int:
    if isinstance(f, (All, Ex)):
        return 1 + quantifier_count(f.body)
    if isinstance(f, Not):
        return quantifier_count(f.arg)
    if isinstance(f, (Conj, Disj)):
        return sum(quantifier_count(x) for x in f.items)
    return 0


def relations_used(f) -> set[str]:
    if isinstance(f, Atom):
        return {f.rel}
    if isinstance(f, Not):
        return relations_used(f.arg)
    if isinstance(f, (Conj, Disj)):
        out = set()
        for x in f.items:
            out |= relations_used(x)
        return out
    if isinstance(f, (All, Ex)):
        return relations_used(f.body)
    return set()
