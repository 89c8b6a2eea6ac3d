"""Signed generation trees and recognition of Sahlqvist and inductive inequalities.

A branch is read from its leaf up to the root.  It is good when it splits into
a lower part of PIA nodes followed by an upper part of skeleton nodes; nodes
such as the lattice operations and Boolean negation belong to both classes, so
we always take the shortest lower part, which imposes the fewest constraints.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

from .formula import And, App, Formula, Inequality, Neg, Or, Var, show, variables
from .signature import DUAL, ONE, Signature

PLUS, MINUS = 1, -1

DA, SRA, SLR, SRR, LEAF = "DA", "SRA", "SLR", "SRR", "Leaf"
SKELETON = frozenset({DA, SLR})
PIA = frozenset({SRA, SRR})


def sign_str(sign: int) -> str:
    return "+" if sign == PLUS else "-"


@dataclass(frozen=True)
class SignedNode:
    formula: Formula
    sign: int
    classes: frozenset
    children: tuple[int, ...]
    parent: int | None

    @property
    def is_leaf(self) -> bool:
        return LEAF in self.classes

    @property
    def skeleton(self) -> bool:
        return bool(self.classes & SKELETON)

    @property
    def pia(self) -> bool:
        return bool(self.classes & PIA)

    def label(self) -> str:
        f = self.formula
        if isinstance(f, Var):
            head = f.name
        elif isinstance(f, And):
            head = "/\\"
        elif isinstance(f, Or):
            head = "\\/"
        elif isinstance(f, Neg):
            head = "~"
        elif isinstance(f, App):
            head = show(App(f.conn, ())) if not f.args else _head_name(f.conn)
        else:
            head = show(f)
        return sign_str(self.sign) + head


def _head_name(conn: str) -> str:
    from .formula import _conn_label

    return _conn_label(conn, False)


@dataclass(frozen=True)
class SignedTree:
    nodes: tuple[SignedNode, ...]

    @property
    def root(self) -> SignedNode:
        return self.nodes[0]

    def leaves(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.is_leaf]

    def path_to_root(self, i: int) -> tuple[int, ...]:
        out = [i]
        while self.nodes[out[-1]].parent is not None:
            out.append(self.nodes[out[-1]].parent)
        return tuple(out)

    def subtree(self, i: int) -> list[int]:
        out, stack = [], [i]
        while stack:
            k = stack.pop()
            out.append(k)
            stack.extend(self.nodes[k].children)
        return out


def node_classes(f: Formula, sign: int, sig: Signature) -> frozenset:
    if isinstance(f, And):
        return frozenset({DA, SLR, SRA}) if sign == PLUS else frozenset({DA, SRR})
    if isinstance(f, Or):
        return frozenset({DA, SRR}) if sign == PLUS else frozenset({DA, SLR, SRA})
    if isinstance(f, Neg):
        return frozenset({SRA, SLR})
    if isinstance(f, App) and f.args:
        c = sig.get(f.conn)
        n = c.arity
        if c.family == "F":
            if sign == PLUS:
                return frozenset({SLR})
            return frozenset({SRA if n == 1 else SRR})
        if sign == PLUS:
            return frozenset({SRA if n == 1 else SRR})
        return frozenset({SLR})
    return frozenset({LEAF})


def _child_signs(f: Formula, sign: int, sig: Signature) -> list[tuple[Formula, int]]:
    if isinstance(f, (And, Or)):
        return [(f.left, sign), (f.right, sign)]
    if isinstance(f, Neg):
        return [(f.arg, -sign)]
    if isinstance(f, App):
        c = sig.get(f.conn)
        return [(a, -sign if t == DUAL else sign) for a, t in zip(f.args, c.coord_types)]
    return []


@lru_cache(maxsize=65536)
def build_signed_tree(f: Formula, sign: int, sig: Signature) -> SignedTree:
    nodes: list = []
    pending = [(f, sign, None)]
    while pending:
        g, s, parent = pending.pop(0)
        idx = len(nodes)
        nodes.append([g, s, node_classes(g, s, sig), [], parent])
        if parent is not None:
            nodes[parent][3].append(idx)
        pending.extend((child, cs, idx) for child, cs in _child_signs(g, s, sig))
    return SignedTree(tuple(SignedNode(g, s, cl, tuple(ch), p) for g, s, cl, ch, p in nodes))


def is_critical(node: SignedNode, eps: Mapping[str, str]) -> bool:
    if not isinstance(node.formula, Var):
        return False
    e = eps[node.formula.name]
    return (node.sign == PLUS and e == ONE) or (node.sign == MINUS and e == DUAL)


def critical_branches(tree: SignedTree, eps: Mapping[str, str]) -> list[tuple[int, ...]]:
    return [tree.path_to_root(i) for i in tree.leaves() if is_critical(tree.nodes[i], eps)]


@dataclass(frozen=True)
class Quality:
    kind: str  # "excellent" | "good" | "bad"
    split: int  # number of non-leaf nodes in the lower (PIA) part
    diagnostic: str = ""

    @property
    def good(self) -> bool:
        return self.kind != "bad"

    @property
    def excellent(self) -> bool:
        return self.kind == "excellent"


def branch_quality(tree: SignedTree, branch: tuple[int, ...]) -> Quality:
    inner = [tree.nodes[i] for i in branch[1:]]
    split = 0
    for k, node in enumerate(inner):
        if not node.skeleton:
            split = k + 1
    for node in inner[:split]:
        if not node.pia:
            top = inner[split - 1]
            return Quality(
                "bad", split,
                f"skeleton node {node.label()} lies below PIA node {top.label()}",
            )
    if all(SRA in node.classes for node in inner[:split]):
        return Quality("excellent", split)
    return Quality("good", split)


@dataclass(frozen=True)
class SideCondition:
    """Constraints an SRR node in the lower part imposes on its side children."""

    node: int
    leaf_var: str
    side_vars: frozenset
    agrees: bool  # every side leaf is critical for the opposite order-type
    diagnostic: str = ""


@dataclass
class BranchReport:
    tree: str  # "lhs" | "rhs"
    leaf: str
    quality: Quality
    side: list = field(default_factory=list)


def _side_conditions(tree: SignedTree, branch: tuple[int, ...], split: int, eps) -> list[SideCondition]:
    leaf_var = tree.nodes[branch[0]].formula.name
    out = []
    for pos in range(1, split + 1):
        idx = branch[pos]
        node = tree.nodes[idx]
        if SRR not in node.classes:
            continue
        via = branch[pos - 1]
        side_vars: set[str] = set()
        bad = []
        for child in node.children:
            if child == via:
                continue
            for k in tree.subtree(child):
                n = tree.nodes[k]
                if isinstance(n.formula, Var):
                    side_vars.add(n.formula.name)
                    if is_critical(n, eps):
                        bad.append(n.label())
        diag = ""
        if bad:
            diag = f"side formula of {node.label()} has critical occurrences {', '.join(bad)}"
        out.append(SideCondition(idx, leaf_var, frozenset(side_vars), not bad, diag))
    return out


@dataclass
class Analysis:
    """Everything about one inequality at one order-type that does not depend on Ω."""

    eps: dict
    branches: list
    sahlqvist: bool
    good: bool
    agrees: bool
    forced: frozenset  # pairs (a, b) meaning a must lie below b
    diagnostics: list


def _eps_key(eps: Mapping[str, str]) -> tuple:
    return tuple(sorted(eps.items()))


@lru_cache(maxsize=65536)
def _analyse(ineq: Inequality, eps_key: tuple, sig: Signature) -> Analysis:
    eps = dict(eps_key)
    branches = []
    diags = []
    forced = set()
    for name, tree in (("lhs", build_signed_tree(ineq.lhs, PLUS, sig)),
                       ("rhs", build_signed_tree(ineq.rhs, MINUS, sig))):
        for br in critical_branches(tree, eps):
            q = branch_quality(tree, br)
            rep = BranchReport(name, tree.nodes[br[0]].label(), q)
            if q.good:
                rep.side = _side_conditions(tree, br, q.split, eps)
                for sc in rep.side:
                    forced.update((v, sc.leaf_var) for v in sc.side_vars)
                    if not sc.agrees:
                        diags.append(f"{name} branch at {rep.leaf}: {sc.diagnostic}")
            else:
                diags.append(f"{name} branch at {rep.leaf}: {q.diagnostic}")
            branches.append(rep)
    good = all(b.quality.good for b in branches)
    agrees = all(sc.agrees for b in branches for sc in b.side)
    sahl = all(b.quality.excellent for b in branches)
    if good and not sahl:
        for b in branches:
            if not b.quality.excellent:
                diags.append(f"{b.tree} branch at {b.leaf} is good but not excellent")
    return Analysis(eps, branches, sahl, good, agrees, frozenset(forced), diags)


def analyse(ineq: Inequality, eps: Mapping[str, str], sig: Signature) -> Analysis:
    missing = [v for v in variables(ineq) if v not in eps]
    if missing:
        raise ValueError(f"order-type does not cover {', '.join(missing)}")
    return _analyse(ineq, _eps_key({v: eps[v] for v in variables(ineq)}), sig)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    diagnostics: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def is_sahlqvist(ineq: Inequality, eps: Mapping[str, str], sig: Signature) -> Verdict:
    a = analyse(ineq, eps, sig)
    return Verdict(a.sahlqvist, tuple(a.diagnostics))


def transitive_closure(edges: Iterable[tuple[str, str]]) -> set[tuple[str, str]]:
    closure = set(edges)
    while True:
        extra = {(a, d) for a, b in closure for c, d in closure if b == c} - closure
        if not extra:
            return closure
        closure |= extra


def is_strict_order(edges: Iterable[tuple[str, str]]) -> bool:
    return all(a != b for a, b in transitive_closure(edges))


def is_inductive(ineq: Inequality, eps: Mapping[str, str], omega: Iterable[tuple[str, str]],
                 sig: Signature) -> Verdict:
    closure = transitive_closure(omega)
    if any(a == b for a, b in closure):
        return Verdict(False, ("the dependency order is not irreflexive",))
    a = analyse(ineq, eps, sig)
    diags = list(a.diagnostics) if not (a.good and a.agrees) else []
    ok = a.good and a.agrees
    missing = sorted(a.forced - closure)
    if missing:
        ok = False
        diags.append("dependency order lacks " + ", ".join(f"{x}<{y}" for x, y in missing))
    return Verdict(ok, tuple(diags))


def minimal_omega(ineq: Inequality, eps: Mapping[str, str], sig: Signature) -> tuple | None:
    """Least dependency order witnessing inductiveness at eps, or None."""
    a = analyse(ineq, eps, sig)
    if not (a.good and a.agrees):
        return None
    closure = transitive_closure(a.forced)
    if any(x == y for x, y in closure):
        return None
    return tuple(sorted(closure))


@dataclass(frozen=True)
class Witness:
    eps: tuple[tuple[str, str], ...]
    omega: tuple[tuple[str, str], ...] = ()
    sahlqvist: bool = False

    def eps_dict(self) -> dict:
        return dict(self.eps)

    def to_json(self) -> dict:
        return {"eps": dict(self.eps), "omega_edges": [list(e) for e in self.omega],
                "sahlqvist": self.sahlqvist}


@dataclass
class ClassificationReport:
    inequality: Inequality
    mode: str
    verdict: str
    witnesses: list
    diagnostics: dict

    def to_json(self) -> dict:
        return {
            "inequality": show(self.inequality),
            "mode": self.mode,
            "verdict": self.verdict,
            "witnesses": [w.to_json() for w in self.witnesses],
            "diagnostics": self.diagnostics,
        }


class BoundExceeded(ValueError):
    pass


def all_order_types(names: list[str]):
    for combo in itertools.product((ONE, DUAL), repeat=len(names)):
        yield dict(zip(names, combo))


def eps_label(eps: Mapping[str, str]) -> str:
    return ",".join(f"{k}={v}" for k, v in eps.items())


def find_witnesses(ineq: Inequality, mode: str, sig: Signature, max_vars: int = 12) -> ClassificationReport:
    if mode not in ("sahlqvist", "inductive"):
        raise ValueError(f"unknown mode {mode!r}")
    names = variables(ineq)
    if len(names) > max_vars:
        raise BoundExceeded(f"{len(names)} variables exceed the bound {max_vars}")
    witnesses = []
    diags = {}
    for eps in all_order_types(names):
        key = eps_label(eps)
        a = analyse(ineq, eps, sig)
        if mode == "sahlqvist":
            if a.sahlqvist:
                witnesses.append(Witness(tuple(eps.items()), (), True))
            else:
                diags[key] = a.diagnostics
            continue
        omega = minimal_omega(ineq, eps, sig)
        if omega is not None:
            witnesses.append(Witness(tuple(eps.items()), omega, a.sahlqvist))
        elif a.good and a.agrees:
            diags[key] = ["forced dependencies are cyclic: "
                          + ", ".join(f"{x}<{y}" for x, y in sorted(a.forced))]
        else:
            diags[key] = a.diagnostics
    verdict = mode if witnesses else "negative"
    return ClassificationReport(ineq, mode, verdict, witnesses, diags)


def classify(ineq: Inequality, sig: Signature, max_vars: int = 12) -> ClassificationReport:
    """All inductive witnesses; the verdict is the strongest class reached."""
    rep = find_witnesses(ineq, "inductive", sig, max_vars)
    rep.mode = "both"
    if any(w.sahlqvist for w in rep.witnesses):
        rep.verdict = "sahlqvist"
    return rep
