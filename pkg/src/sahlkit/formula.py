"""Formula syntax trees, a parser for the concrete grammar, and a printer."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .signature import (
    BOX_LEQ,
    COIMPLICATION,
    DIA_GEQ,
    IMPLICATION,
    Signature,
    SignatureError,
)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class App:
    conn: str
    args: tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Neg:
    arg: "Formula"


Formula = Union[Var, Bot, Top, And, Or, App, Neg]

BOT = Bot()
TOP = Top()


@dataclass(frozen=True)
class Inequality:
    lhs: Formula
    rhs: Formula

    def __str__(self) -> str:
        return show(self)


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


def children(f) -> tuple:
    if isinstance(f, (And, Or)):
        return (f.left, f.right)
    if isinstance(f, App):
        return f.args
    if isinstance(f, Neg):
        return (f.arg,)
    if isinstance(f, Inequality):
        return (f.lhs, f.rhs)
    return ()


def subformulas(f) -> Iterator:
    """Preorder traversal."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def variables(f) -> list[str]:
    seen: dict[str, None] = {}
    for g in subformulas(f):
        if isinstance(g, Var):
            seen.setdefault(g.name, None)
    return list(seen)


def connectives(f) -> set[str]:
    return {g.conn for g in subformulas(f) if isinstance(g, App)}


def size(f) -> int:
    return sum(1 for _ in subformulas(f))


def depth(f) -> int:
    kids = children(f)
    return 1 + max((depth(k) for k in kids), default=0)


def check(f, sig: Signature) -> None:
    """Raise if f uses connectives outside sig or with the wrong arity."""
    for g in subformulas(f):
        if isinstance(g, App):
            c = sig.get(g.conn)
            if len(g.args) != c.arity:
                raise SignatureError(f"{g.conn} expects {c.arity} arguments, got {len(g.args)}")
        elif isinstance(g, Neg) and not sig.has_neg:
            raise SignatureError("negation is only available in Boolean signatures")


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(<=|->|>-|/\\|\\/|[~(),])|([A-Za-z_][A-Za-z0-9_]*))")

KEYWORDS = {"bot", "top", "box", "dia", "boxle", "diage"}
_KEYWORD_CONN = {"box": "box", "dia": "dia", "boxle": BOX_LEQ, "diage": DIA_GEQ}
_CONN_KEYWORD = {BOX_LEQ: "boxle", DIA_GEQ: "diage"}


# Symbols produced by the pretty printer, read back as their ASCII tokens.
_SYMBOLS = sorted({
    "□≤": ("id", "boxle"), "◇≥": ("id", "diage"), "□°": ("id", "box_o"), "◇°": ("id", "dia_o"),
    "◁°": ("id", "lhd_o"), "▷°": ("id", "rhd_o"), "→°": ("id", "imp_o"), ">-°": ("id", "coimp_o"),
    "□": ("id", "box"), "◇": ("id", "dia"), "◁": ("id", "lhd"), "▷": ("id", "rhd"),
    "∧": ("op", "/\\"), "∨": ("op", "\\/"), "→": ("op", "->"), "¬": ("op", "~"), "≤": ("op", "<="),
    "⊥": ("id", "bot"), "⊤": ("id", "top"),
}.items(), key=lambda kv: -len(kv[0]))


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        sym = next(((sym, tok) for sym, tok in _SYMBOLS if text.startswith(sym, pos)), None)
        if sym is not None:
            out.append(sym[1] + (pos,))
            pos += len(sym[0])
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(1) if m.group(1) else m.start(2)
        if m.group(1):
            out.append(("op", m.group(1), start))
            pos = m.end()
        elif text.startswith("°", m.end()):
            out.append(("id", m.group(2) + "_o", start))
            pos = m.end() + 1
        else:
            out.append(("id", m.group(2), start))
            pos = m.end()
    out.append(("end", "", n))
    return out


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.toks = _tokenize(text)
        self.i = 0
        self.sig = sig

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def top(self):
        lhs = self.arrow()
        kind, val, pos = self.peek()
        if val == "<=" and kind == "op":
            self.take()
            rhs = self.arrow()
            result = Inequality(lhs, rhs)
        else:
            result = lhs
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return result

    def arrow(self):
        left = self.disj()
        kind, val, pos = self.peek()
        if kind == "op" and val in ("->", ">-"):
            self.take()
            name = IMPLICATION if val == "->" else COIMPLICATION
            self._require(name, 2, pos)
            right = self.arrow()
            return App(name, (left, right))
        return left

    def disj(self):
        f = self.conj()
        while self.peek()[:2] == ("op", "\\/"):
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.prefix()
        while self.peek()[:2] == ("op", "/\\"):
            self.take()
            f = And(f, self.prefix())
        return f

    def _require(self, name: str, arity: int | None, pos: int):
        if name not in self.sig:
            raise ParseError(f"unknown connective {name!r}", pos)
        c = self.sig.get(name)
        if arity is not None and c.arity != arity:
            raise ParseError(f"connective {name!r} has arity {c.arity}", pos)
        return c

    def prefix(self):
        kind, val, pos = self.peek()
        if kind == "op" and val == "~":
            self.take()
            if not self.sig.has_neg:
                raise ParseError("negation needs a Boolean signature", pos)
            return Neg(self.prefix())
        if kind == "id" and (val in _KEYWORD_CONN or (val not in KEYWORDS and val in self.sig)):
            self.take()
            name = _KEYWORD_CONN.get(val, val)
            c = self._require(name, None, pos)
            if self.peek()[:2] == ("op", "(") and c.arity != 1:
                args = self.arglist()
                if len(args) != c.arity:
                    raise ParseError(f"connective {name!r} expects {c.arity} arguments, got {len(args)}", pos)
                return App(name, tuple(args))
            if c.arity == 1:
                return App(name, (self.prefix(),))
            if c.arity == 0:
                return App(name, ())
            raise ParseError(f"connective {name!r} needs {c.arity} arguments in parentheses", pos)
        return self.atom()

    def arglist(self):
        self.expect("(")
        args = []
        if self.peek()[:2] == ("op", ")"):
            self.take()
            return args
        args.append(self.arrow())
        while self.peek()[:2] == ("op", ","):
            self.take()
            args.append(self.arrow())
        self.expect(")")
        return args

    def atom(self):
        kind, val, pos = self.take()
        if kind == "op" and val == "(":
            f = self.arrow()
            self.expect(")")
            return f
        if kind == "id":
            if val == "bot":
                return BOT
            if val == "top":
                return TOP
            if val in KEYWORDS:
                raise ParseError(f"unknown connective {val!r}", pos)
            return Var(val)
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def parse(text: str, sig: Signature):
    """Parse a formula, or an inequality when `<=` occurs at top level."""
    return _Parser(text, sig).top()


def parse_inequality(text: str, sig: Signature) -> Inequality:
    result = parse(text, sig)
    if not isinstance(result, Inequality):
        raise ParseError("expected an inequality 'lhs <= rhs'", len(text))
    return result


def parse_formula(text: str, sig: Signature) -> Formula:
    result = parse(text, sig)
    if isinstance(result, Inequality):
        raise ParseError("expected a formula, found an inequality", 0)
    return result


# ---------------------------------------------------------------- printing

_ARROW, _DISJ, _CONJ, _PREFIX, _ATOM = range(1, 6)

_ASCII = {"and": " /\\ ", "or": " \\/ ", "->": " -> ", ">-": " >- ", "neg": "~", "le": " <= ",
          "bot": "bot", "top": "top"}
_PRETTY = {"and": " ∧ ", "or": " ∨ ", "->": " → ", ">-": " >- ", "neg": "¬", "le": " ≤ ",
           "bot": "⊥", "top": "⊤"}
_PRETTY_CONN = {"box": "□", "dia": "◇", BOX_LEQ: "□≤", DIA_GEQ: "◇≥", "lhd": "◁", "rhd": "▷"}


def _prec(f) -> int:
    if isinstance(f, App):
        if f.conn in (IMPLICATION, COIMPLICATION):
            return _ARROW
        return _PREFIX if len(f.args) == 1 else _ATOM
    if isinstance(f, Or):
        return _DISJ
    if isinstance(f, And):
        return _CONJ
    if isinstance(f, Neg):
        return _PREFIX
    return _ATOM


def _conn_label(name: str, pretty: bool) -> str:
    if pretty:
        if name in _PRETTY_CONN:
            return _PRETTY_CONN[name]
        if name.endswith("_o"):
            base = name[:-2]
            return {"imp": "→", "coimp": ">-"}.get(base, _PRETTY_CONN.get(base, base)) + "°"
    return _CONN_KEYWORD.get(name, name)


def _show(f, pretty: bool) -> str:
    sym = _PRETTY if pretty else _ASCII

    def wrap(g, minimum: int) -> str:
        s = _show(g, pretty)
        return f"({s})" if _prec(g) < minimum else s

    if isinstance(f, Var):
        return f.name
    if isinstance(f, Bot):
        return sym["bot"]
    if isinstance(f, Top):
        return sym["top"]
    if isinstance(f, And):
        return wrap(f.left, _CONJ) + sym["and"] + wrap(f.right, _CONJ + 1)
    if isinstance(f, Or):
        return wrap(f.left, _DISJ) + sym["or"] + wrap(f.right, _DISJ + 1)
    if isinstance(f, Neg):
        return sym["neg"] + wrap(f.arg, _PREFIX)
    if isinstance(f, App):
        if f.conn in (IMPLICATION, COIMPLICATION):
            return wrap(f.args[0], _ARROW + 1) + sym[f.conn] + wrap(f.args[1], _ARROW)
        label = _conn_label(f.conn, pretty)
        if not f.args:
            return label
        if len(f.args) == 1:
            sep = "" if pretty else " "
            arg = f.args[0]
            if _prec(arg) >= _PREFIX:
                return label + sep + _show(arg, pretty)
            return f"{label}({_show(arg, pretty)})"
        return label + "(" + ", ".join(_show(a, pretty) for a in f.args) + ")"
    if isinstance(f, Inequality):
        return _show(f.lhs, pretty) + sym["le"] + _show(f.rhs, pretty)
    show_extra = getattr(f, "show", None)
    if show_extra is not None:
        return show_extra(pretty)
    raise TypeError(f"cannot print {f!r}")


def show(f, pretty: bool = False) -> str:
    return _show(f, pretty)


def rename(f, mapping: dict[str, str]):
    """Rename variables."""
    if isinstance(f, Var):
        return Var(mapping.get(f.name, f.name))
    if isinstance(f, And):
        return And(rename(f.left, mapping), rename(f.right, mapping))
    if isinstance(f, Or):
        return Or(rename(f.left, mapping), rename(f.right, mapping))
    if isinstance(f, Neg):
        return Neg(rename(f.arg, mapping))
    if isinstance(f, App):
        return App(f.conn, tuple(rename(a, mapping) for a in f.args))
    if isinstance(f, Inequality):
        return Inequality(rename(f.lhs, mapping), rename(f.rhs, mapping))
    return f


def read_inequalities(text: str, sig: Signature) -> list[Inequality]:
    """One inequality per line; `#` starts a comment."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_inequality(line, sig))
    return out


def random_formula(rng, sig: Signature, names: list[str], depth: int, neg: bool = False):
    """A random formula of depth at most `depth` over the signature's connectives.

    `rng` is a `random.Random`; `neg` allows Boolean negation (target languages only).
    """
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.08:
            return BOT
        if r < 0.16:
            return TOP
        return Var(rng.choice(names))
    ops = ["and", "or"] + [c.name for c in sig.connectives]
    if neg:
        ops.append("neg")
    op = rng.choice(ops)
    sub = lambda: random_formula(rng, sig, names, depth - 1, neg)  # noqa: E731
    if op == "and":
        return And(sub(), sub())
    if op == "or":
        return Or(sub(), sub())
    if op == "neg":
        return Neg(sub())
    c = sig.get(op)
    return App(c.name, tuple(sub() for _ in range(c.arity)))


def random_inequality(rng, sig: Signature, names: list[str], depth: int) -> Inequality:
    return Inequality(random_formula(rng, sig, names, depth), random_formula(rng, sig, names, depth))
