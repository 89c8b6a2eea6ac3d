"""Finite frames, valuations, forcing, validity and frame enumeration."""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np

from .formula import Inequality, connectives, variables
from .kernel import LEQ, Evaluator, compile_term, dtype_for, relation_bases
from .signature import (
    COIMPLICATION,
    DLE,
    DUAL,
    IMPLICATION,
    ONE,
    STANDARD_NAMES,
    Signature,
    frame_relation_type,
)

PERSISTENT = "persistent"
ARBITRARY = "arbitrary"
CLASSICAL = "classical"  # alias of arbitrary used on the command line

DEFAULT_MAX_WORLDS = 4


class CapExceeded(ValueError):
    pass


def max_worlds_cap() -> int:
    value = os.environ.get("SK_MAX_WORLDS")
    return int(value) if value else DEFAULT_MAX_WORLDS


# ------------------------------------------------------------------ frames


def _derived(name: str, n: int, leq: frozenset) -> frozenset:
    """Relations of implication and co-implication, read off the order."""
    out = set()
    for w, u, v in itertools.product(range(n), repeat=3):
        for z in range(n):
            if name == IMPLICATION and (w, z) in leq and (u, z) in leq and (z, v) in leq:
                out.add((w, u, v))
                break
            if name == COIMPLICATION and (z, w) in leq and (z, u) in leq and (v, z) in leq:
                out.add((w, u, v))
                break
    return frozenset(out)


@dataclass(frozen=True)
class Frame:
    worlds: int
    leq: frozenset
    relations: tuple  # sorted (name, frozenset of tuples) pairs
    sig: Signature | None = field(default=None, compare=False, hash=False)

    @classmethod
    def make(cls, worlds: int, leq: Iterable = (), relations: Mapping | None = None,
             sig: Signature | None = None) -> "Frame":
        order = {(w, w) for w in range(worlds)} | {tuple(p) for p in leq}
        rels = tuple(sorted((name, frozenset(tuple(t) for t in ts)) for name, ts in (relations or {}).items()))
        return cls(worlds, frozenset(order), rels, sig)

    def relation(self, name: str) -> frozenset:
        for key, ts in self.relations:
            if key == name:
                return ts
        if name in STANDARD_NAMES:
            return _derived(name, self.worlds, self.leq)
        raise KeyError(f"frame has no relation for {name!r}")

    def relation_names(self) -> list[str]:
        return [k for k, _ in self.relations]

    def with_relations(self, relations: Mapping) -> "Frame":
        merged = dict(self.relations)
        merged.update({k: frozenset(v) for k, v in relations.items()})
        return Frame(self.worlds, self.leq, tuple(sorted(merged.items())), self.sig)

    def up(self, xs: Iterable[int]) -> frozenset:
        xs = set(xs)
        return frozenset(v for (u, v) in self.leq if u in xs)

    def down(self, xs: Iterable[int]) -> frozenset:
        xs = set(xs)
        return frozenset(u for (u, v) in self.leq if v in xs)

    def interior(self, xs: Iterable[int]) -> frozenset:
        """Largest up-set inside xs."""
        everything = frozenset(range(self.worlds))
        return everything - self.down(everything - frozenset(xs))

    def is_upset(self, xs: Iterable[int]) -> bool:
        xs = frozenset(xs)
        return self.up(xs) == xs

    def upsets(self) -> list[frozenset]:
        return [frozenset(w for w in range(self.worlds) if m >> w & 1) for m in upset_masks(self.worlds, self.leq)]

    def to_json(self) -> dict:
        return {
            "worlds": self.worlds,
            "leq": sorted([list(p) for p in self.leq if p[0] != p[1]]),
            "rel": {k: sorted(list(t) for t in ts) for k, ts in self.relations},
        }

    def describe(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


def load_frame(text: str, sig: Signature | None = None) -> Frame:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"frame parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    n = obj.get("worlds")
    if not isinstance(n, int) or n < 1:
        raise ValueError("frame needs a positive integer 'worlds'")
    for pair in obj.get("leq", []):
        if len(pair) != 2 or not all(0 <= x < n for x in pair):
            raise ValueError(f"bad order pair {pair!r}")
    for name, ts in obj.get("rel", {}).items():
        for t in ts:
            if not all(isinstance(x, int) and 0 <= x < n for x in t):
                raise ValueError(f"relation {name!r}: bad tuple {t!r}")
    return Frame.make(n, obj.get("leq", []), obj.get("rel", {}), sig)


def dump_frame(fr: Frame) -> str:
    return json.dumps(fr.to_json())


def _free_connectives(sig: Signature):
    return [c for c in sig.connectives if not c.is_standard and c.relation is None]


def _closure_steps(c, n: int, leq: frozenset):
    """For each relation coordinate, pairs (u, v) such that membership moves from u to v."""
    eta = frame_relation_type(c).rel_order_type
    steps = []
    for e in eta:
        upward = e == ONE
        if c.family == "G":
            upward = not upward
        steps.append([(u, v) if upward else (v, u) for (u, v) in leq if u != v])
    return steps


def validate_frame(fr: Frame, sig: Signature | None = None) -> list[str]:
    """Violations of the order axioms and the compatibility conditions."""
    sig = sig or fr.sig
    out = []
    n, leq = fr.worlds, fr.leq
    for (a, b) in leq:
        if (b, a) in leq and a != b:
            out.append(f"order not antisymmetric on {a},{b}")
        for (c, d) in leq:
            if b == c and (a, d) not in leq:
                out.append(f"order not transitive: {a}<={b}<={d}")
    if sig is None:
        return out
    for c in _free_connectives(sig):
        try:
            rel = fr.relation(c.name)
        except KeyError:
            out.append(f"missing relation for {c.name}")
            continue
        for t in rel:
            if len(t) != c.arity + 1:
                out.append(f"{c.name}: tuple {t} has wrong length")
        steps = _closure_steps(c, n, leq)
        for t in sorted(rel):
            if len(t) != c.arity + 1:
                continue
            for i, pairs in enumerate(steps):
                for (u, v) in pairs:
                    if t[i] == u:
                        s = t[:i] + (v,) + t[i + 1:]
                        if s not in rel:
                            out.append(f"{c.name}: {t} in relation requires {s}")
    return out


def close_frame(fr: Frame, sig: Signature | None = None) -> Frame:
    sig = sig or fr.sig
    new = {}
    for c in _free_connectives(sig):
        rel = set(fr.relation(c.name)) if c.name in fr.relation_names() else set()
        steps = _closure_steps(c, fr.worlds, fr.leq)
        frontier = list(rel)
        while frontier:
            t = frontier.pop()
            for i, pairs in enumerate(steps):
                for (u, v) in pairs:
                    if t[i] == u:
                        s = t[:i] + (v,) + t[i + 1:]
                        if s not in rel:
                            rel.add(s)
                            frontier.append(s)
        new[c.name] = rel
    return fr.with_relations(new)


# -------------------------------------------------------------- posets and sets


def upset_masks(n: int, leq: frozenset) -> list[int]:
    out = []
    for m in range(1 << n):
        if all(not (m >> u & 1) or (m >> v & 1) for (u, v) in leq):
            out.append(m)
    return out


@lru_cache(maxsize=None)
def labelled_posets(n: int) -> tuple[frozenset, ...]:
    """All partial orders on range(n), built one element at a time."""
    if n == 0:
        return (frozenset(),)
    out = []
    for base in labelled_posets(n - 1):
        m = n - 1
        downs = [frozenset(w for w in range(m) if d >> w & 1) for d in range(1 << m)]
        downs = [d for d in downs if all((u in d) for (u, v) in base if v in d)]
        ups = [frozenset(w for w in range(m) if x >> w & 1) for x in range(1 << m)]
        ups = [u for u in ups if all((v in u) for (w, v) in base if w in u)]
        for d in downs:
            for u in ups:
                if d & u:
                    continue
                if all((a, b) in base for a in d for b in u):
                    new = set(base) | {(m, m)} | {(a, m) for a in d} | {(m, b) for b in u}
                    out.append(frozenset(new))
    return tuple(out)


def _perm_order(leq: frozenset, perm: tuple[int, ...]) -> frozenset:
    return frozenset((perm[a], perm[b]) for (a, b) in leq)


def _order_code(n: int, leq: frozenset) -> int:
    return sum(1 << (a * n + b) for (a, b) in leq)


@lru_cache(maxsize=None)
def canonical_posets(n: int) -> tuple[tuple[frozenset, tuple[tuple[int, ...], ...]], ...]:
    """Posets on n points up to isomorphism, each with its automorphism group."""
    perms = list(itertools.permutations(range(n)))
    seen = {}
    for leq in labelled_posets(n):
        code = min(_order_code(n, _perm_order(leq, p)) for p in perms)
        if code not in seen:
            seen[code] = leq
    out = []
    for code in sorted(seen):
        leq = seen[code]
        autos = tuple(p for p in perms if _perm_order(leq, p) == leq)
        out.append((leq, autos))
    return tuple(out)


def _closed_sets(c, n: int, leq: frozenset, cap: int) -> list[int]:
    """All relations for connective c closed under its compatibility condition, as bitmasks."""
    k = c.arity + 1
    tuples = list(itertools.product(range(n), repeat=k))
    index = {t: i for i, t in enumerate(tuples)}
    steps = _closure_steps(c, n, leq)
    # Strictly larger elements in the direction membership propagates.
    succ = [0] * len(tuples)
    for t, i in index.items():
        for pos, pairs in enumerate(steps):
            for (u, v) in pairs:
                if t[pos] == u:
                    succ[i] |= 1 << index[t[:pos] + (v,) + t[pos + 1:]]
    above = list(succ)
    changed = True
    while changed:
        changed = False
        for i in range(len(tuples)):
            acc = above[i]
            m = acc
            while m:
                low = m & -m
                acc |= above[low.bit_length() - 1]
                m ^= low
            if acc != above[i]:
                above[i] = acc
                changed = True
    order = sorted(range(len(tuples)), key=lambda i: bin(above[i]).count("1"))
    out: list[int] = []

    def rec(pos: int, current: int):
        if pos == len(order):
            out.append(current)
            if len(out) > cap:
                raise CapExceeded(f"more than {cap} relations for {c.name} on {n} worlds")
            return
        i = order[pos]
        rec(pos + 1, current)
        if current & above[i] == above[i]:
            rec(pos + 1, current | (1 << i))

    rec(0, 0)
    return out


# ------------------------------------------------------------------ batches


@dataclass
class FrameBatch:
    """Frames with the same worlds and order; relations stacked along axis 0."""

    n: int
    leq: frozenset
    names: tuple[str, ...]
    rels: dict  # name -> bool array (F, n, ..., n)
    sig: Signature | None = None

    @property
    def size(self) -> int:
        if not self.names:
            return 1
        return self.rels[self.names[0]].shape[0]

    def leq_array(self) -> np.ndarray:
        a = np.zeros((1, self.n, self.n), bool)
        for (u, v) in self.leq:
            a[0, u, v] = True
        return a

    def relation_arrays(self) -> dict[str, np.ndarray]:
        out = {LEQ: self.leq_array()}
        out.update(self.rels)
        for name in STANDARD_NAMES:
            a = np.zeros((1, self.n, self.n, self.n), bool)
            for t in _derived(name, self.n, self.leq):
                a[(0,) + t] = True
            out[name] = a
        return out

    def frame(self, i: int) -> Frame:
        rels = {name: frozenset(map(tuple, np.argwhere(self.rels[name][i]).tolist())) for name in self.names}
        return Frame.make(self.n, self.leq, rels, self.sig)

    def frames(self) -> Iterator[Frame]:
        for i in range(self.size):
            yield self.frame(i)

    def chunks(self, size: int) -> Iterator["FrameBatch"]:
        total = self.size
        if total <= size or not self.names:
            yield self
            return
        for start in range(0, total, size):
            yield FrameBatch(self.n, self.leq, self.names,
                             {k: v[start:start + size] for k, v in self.rels.items()}, self.sig)


def batch_of(frames: list[Frame], names: Iterable[str] | None = None) -> FrameBatch:
    fr0 = frames[0]
    if any(f.worlds != fr0.worlds or f.leq != fr0.leq for f in frames):
        raise ValueError("frames in a batch must share worlds and order")
    names = tuple(sorted(names if names is not None else
                         (k for k in fr0.relation_names() if k not in STANDARD_NAMES)))
    rels = {}
    for name in names:
        arity = None
        for f in frames:
            for t in f.relation(name):
                arity = len(t)
                break
            if arity:
                break
        if arity is None:
            c = fr0.sig.get(name) if fr0.sig is not None and name in fr0.sig else None
            arity = c.arity + 1 if c is not None else 2
        a = np.zeros((len(frames),) + (fr0.worlds,) * arity, bool)
        for i, f in enumerate(frames):
            for t in f.relation(name):
                a[(i,) + tuple(t)] = True
        rels[name] = a
    return FrameBatch(fr0.worlds, fr0.leq, names, rels, fr0.sig)


def _bit_permutation(n: int, k: int, perm: tuple[int, ...]) -> np.ndarray:
    tuples = list(itertools.product(range(n), repeat=k))
    index = {t: i for i, t in enumerate(tuples)}
    return np.array([index[tuple(perm[x] for x in t)] for t in tuples], dtype=np.uint64)


def _permute_codes(codes: np.ndarray, target: np.ndarray) -> np.ndarray:
    out = np.zeros_like(codes)
    one = np.uint64(1)
    for b, dest in enumerate(target):
        out |= ((codes >> np.uint64(b)) & one) << np.uint64(dest)
    return out


def enumerate_batches(sig: Signature, max_worlds: int, up_to_iso: bool = True, min_worlds: int = 1,
                      max_frames: int = 3_000_000) -> Iterator[FrameBatch]:
    cap = max_worlds_cap()
    if max_worlds > cap:
        raise CapExceeded(f"max worlds {max_worlds} exceeds the cap {cap} (set SK_MAX_WORLDS to raise it)")
    free = _free_connectives(sig)
    names = tuple(sorted(c.name for c in free))
    by_name = {c.name: c for c in free}
    for n in range(min_worlds, max_worlds + 1):
        if up_to_iso:
            posets = canonical_posets(n)
        else:
            posets = tuple((leq, ((tuple(range(n))),)) for leq in labelled_posets(n))
        for leq, autos in posets:
            if not names:
                yield FrameBatch(n, leq, (), {}, sig)
                continue
            choices = [_closed_sets(by_name[name], n, leq, max_frames) for name in names]
            total = 1
            for ch in choices:
                total *= len(ch)
            if total > max_frames:
                raise CapExceeded(f"{total} frames on one order of {n} worlds exceed {max_frames}")
            widths = [n ** (by_name[name].arity + 1) for name in names]
            grids = np.meshgrid(*[np.array(ch, dtype=np.uint64) for ch in choices], indexing="ij")
            cols = [g.reshape(-1) for g in grids]
            if up_to_iso and len(autos) > 1:
                if sum(widths) > 64:
                    raise CapExceeded("relations too wide for isomorphism reduction")
                keep = _canonical_mask(cols, widths, [by_name[x].arity + 1 for x in names], n, autos)
                cols = [c[keep] for c in cols]
            yield _decode(sig, n, leq, names, by_name, cols)


def _decode(sig, n, leq, names, by_name, cols) -> FrameBatch:
    rels = {}
    for name, col in zip(names, cols):
        k = by_name[name].arity + 1
        width = n ** k
        bits = ((col[:, None] >> np.arange(width, dtype=np.uint64)) & np.uint64(1)).astype(bool)
        rels[name] = bits.reshape((len(col),) + (n,) * k)
    return FrameBatch(n, leq, names, rels, sig)


@lru_cache(maxsize=4096)
def _closed_array(c, n: int, leq: frozenset) -> np.ndarray:
    return np.array(_closed_sets(c, n, leq, 1 << 24), dtype=np.uint64)


def sample_batches(sig: Signature, worlds: int, per_order: int, seed: int = 0) -> Iterator[FrameBatch]:
    """Random frames with exactly `worlds` points: `per_order` draws on every labelled order.

    Relations are drawn uniformly among the compatible ones, so this reaches sizes
    where exhaustive enumeration is out of budget.
    """
    rng = np.random.default_rng(seed)
    free = _free_connectives(sig)
    names = tuple(sorted(c.name for c in free))
    by_name = {c.name: c for c in free}
    for leq in labelled_posets(worlds):
        if not names:
            yield FrameBatch(worlds, leq, (), {}, sig)
            continue
        cols = []
        for name in names:
            choices = _closed_array(by_name[name], worlds, leq)
            cols.append(choices[rng.integers(0, len(choices), per_order)])
        yield _decode(sig, worlds, leq, names, by_name, cols)


def _canonical_mask(cols, widths, arities, n, autos) -> np.ndarray:
    def combined(parts):
        code = np.zeros_like(parts[0])
        shift = 0
        for part, width in zip(parts, widths):
            code |= part << np.uint64(shift)
            shift += width
        return code

    own = combined(cols)
    best = own.copy()
    for perm in autos:
        if perm == tuple(range(n)):
            continue
        permuted = [_permute_codes(c, _bit_permutation(n, k, perm)) for c, k in zip(cols, arities)]
        best = np.minimum(best, combined(permuted))
    return own == best


def enumerate_frames(sig: Signature, max_worlds: int, up_to_iso: bool = True, min_worlds: int = 1) -> Iterator[Frame]:
    for batch in enumerate_batches(sig, max_worlds, up_to_iso, min_worlds):
        yield from batch.frames()


def frame_count(sig: Signature, max_worlds: int, up_to_iso: bool = True, min_worlds: int = 1) -> int:
    return sum(b.size for b in enumerate_batches(sig, max_worlds, up_to_iso, min_worlds))


# ------------------------------------------------------------------ valuations


def valuation_space(batch_n: int, leq: frozenset, names: list[str], kind: str) -> dict[str, np.ndarray]:
    """All valuations of `names`, laid out along axis 1."""
    if kind == PERSISTENT:
        choices = upset_masks(batch_n, leq)
    else:
        choices = list(range(1 << batch_n))
    dt = dtype_for(batch_n)
    if not names:
        return {}
    grids = np.meshgrid(*[np.array(choices, dtype=dt)] * len(names), indexing="ij")
    return {name: g.reshape(1, -1) for name, g in zip(names, grids)}


def _kind(kind: str) -> str:
    if kind in (ARBITRARY, CLASSICAL):
        return ARBITRARY
    if kind == PERSISTENT:
        return PERSISTENT
    raise ValueError(f"unknown valuation kind {kind!r}")


def _chunk_size(n: int, n_vals: int) -> int:
    return max(1, (1 << 21) // max(1, n_vals))


def holds_on_batch(ineq: Inequality, sig: Signature, batch: FrameBatch, kind: str,
                   witness: bool = False):
    """Per-frame validity over the batch; optionally the first failing valuation index."""
    kind = _kind(kind)
    lhs, rhs = compile_term(ineq.lhs, sig), compile_term(ineq.rhs, sig)
    names = variables(ineq)
    env = valuation_space(batch.n, batch.leq, names, kind)
    n_vals = next(iter(env.values())).shape[1] if env else 1
    results = []
    fails = []
    for part in batch.chunks(_chunk_size(batch.n, n_vals)):
        ev = Evaluator(part.n, part.relation_arrays(), env)
        bad = ev.eval(lhs) & ~ev.eval(rhs)
        bad = np.broadcast_to(bad, (part.size, n_vals))
        ok = ~bad.any(axis=1)
        results.append(ok)
        if witness:
            fails.append(np.argmax(bad != 0, axis=1))
    ok = np.concatenate(results)
    if not witness:
        return ok
    idx = np.concatenate(fails)
    return ok, idx, env


def _valuation_at(env: dict, names: list[str], i: int) -> dict[str, frozenset]:
    out = {}
    for name in names:
        m = int(env[name][0, i])
        out[name] = frozenset(w for w in range(8 * env[name].itemsize) if m >> w & 1)
    return out


def is_valid(ineq: Inequality, fr: Frame, kind: str = PERSISTENT, sig: Signature | None = None) -> bool:
    sig = sig or fr.sig
    batch = batch_of([fr], _needed_names(ineq, sig, fr))
    return bool(holds_on_batch(ineq, sig, batch, kind)[0])


def counterexample(ineq: Inequality, fr: Frame, kind: str = PERSISTENT, sig: Signature | None = None):
    """A refuting valuation, or None."""
    sig = sig or fr.sig
    batch = batch_of([fr], _needed_names(ineq, sig, fr))
    ok, idx, env = holds_on_batch(ineq, sig, batch, kind, witness=True)
    if ok[0]:
        return None
    return _valuation_at(env, variables(ineq), int(idx[0]))


def _needed_names(f, sig: Signature, fr: Frame) -> list[str]:
    bases = relation_bases(compile_term(f.lhs, sig)) | relation_bases(compile_term(f.rhs, sig)) \
        if isinstance(f, Inequality) else relation_bases(compile_term(f, sig))
    return sorted(b for b in bases if b != LEQ and b not in STANDARD_NAMES)


def extension(f, fr: Frame, val: Mapping[str, Iterable[int]], sig: Signature | None = None) -> frozenset:
    sig = sig or fr.sig
    missing = [v for v in variables(f) if v not in val]
    if missing:
        raise ValueError(f"valuation does not cover {', '.join(missing)}")
    dt = dtype_for(fr.worlds)
    env = {k: np.array([[sum(1 << w for w in ws)]], dtype=dt) for k, ws in val.items()}
    term = compile_term(f, sig)
    batch = batch_of([fr], sorted(b for b in relation_bases(term) if b != LEQ and b not in STANDARD_NAMES))
    ev = Evaluator(fr.worlds, batch.relation_arrays(), env)
    m = int(np.broadcast_to(ev.eval(term), (1, 1))[0, 0])
    return frozenset(w for w in range(fr.worlds) if m >> w & 1)


def lift_valuation(U: Mapping[str, Iterable[int]], eps: Mapping[str, str], fr: Frame) -> dict[str, frozenset]:
    out = {}
    for name, xs in U.items():
        out[name] = fr.interior(xs) if eps.get(name, ONE) == ONE else fr.up(xs)
    return out


# ------------------------------------------------------------------ transfer


@dataclass
class TransferReport:
    frame: Frame
    inequality: Inequality
    eps: dict
    dle_valid: bool
    bae_valid: bool
    counterexample: dict | None = None

    @property
    def agree(self) -> bool:
        return self.dle_valid == self.bae_valid

    def to_json(self) -> dict:
        from .formula import show

        return {
            "frame": self.frame.to_json(),
            "inequality": show(self.inequality),
            "eps": self.eps,
            "dle_valid": self.dle_valid,
            "bae_valid": self.bae_valid,
            "agree": self.agree,
            "counterexample": {k: sorted(v) for k, v in self.counterexample.items()} if self.counterexample else None,
        }


def transfer_check(ineq: Inequality, eps: Mapping[str, str], fr: Frame, sig: Signature | None = None,
                   s4_prefix: bool = True) -> TransferReport:
    from .signature import target_signature
    from .translate import tau_eps

    sig = sig or fr.sig
    target = target_signature(sig)
    translated = tau_eps(ineq, eps, sig, s4_prefix=s4_prefix)
    dle = is_valid(ineq, fr, PERSISTENT, sig)
    bae = is_valid(translated, fr, ARBITRARY, target)
    cex = None
    if dle != bae:
        cex = counterexample(ineq, fr, PERSISTENT, sig) if not dle else counterexample(translated, fr, ARBITRARY, target)
    return TransferReport(fr, ineq, dict(eps), dle, bae, cex)


def transfer_sweep(ineq: Inequality, eps: Mapping[str, str], sig: Signature, max_worlds: int,
                   s4_prefix: bool = True) -> tuple[int, list[TransferReport]]:
    """Check every frame up to max_worlds; returns (frames checked, disagreements)."""
    from .signature import target_signature
    from .translate import tau_eps

    target = target_signature(sig)
    translated = tau_eps(ineq, eps, sig, s4_prefix=s4_prefix)
    used = connectives(ineq)
    sub = sig.restrict(used)
    checked = 0
    bad = []
    for batch in enumerate_batches(sub, max_worlds):
        dle = holds_on_batch(ineq, sig, batch, PERSISTENT)
        bae = holds_on_batch(translated, target, batch, ARBITRARY)
        checked += batch.size
        for i in np.nonzero(dle != bae)[0]:
            fr = batch.frame(int(i))
            bad.append(transfer_check(ineq, eps, Frame(fr.worlds, fr.leq, fr.relations, sig), sig, s4_prefix))
    return checked, bad


# ------------------------------------------------------------------ translation identities


@dataclass
class IdentityReport:
    """Pointwise comparison of a formula with its translation over many frames."""

    frames: int = 0
    comparisons: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _lift_table(n: int, leq: frozenset, value: str) -> np.ndarray:
    """mask -> interior (value 1) or up-closure (value d), for every subset of n worlds."""
    fr = Frame.make(n, leq)
    out = np.zeros(1 << n, dtype=np.int64)
    for m in range(1 << n):
        xs = [w for w in range(n) if m >> w & 1]
        ys = fr.interior(xs) if value == ONE else fr.up(xs)
        out[m] = sum(1 << w for w in ys)
    return out


def translation_identities(formulas, eps: Mapping[str, str], sig: Signature, max_worlds: int,
                           s4_prefix: bool = True) -> IdentityReport:
    """Check both directions linking a formula with its translation.

    (a) for persistent V the formula and its translation denote the same set;
    (b) for arbitrary U the translation under U equals the formula under the
    order-type lift of U.
    """
    from .signature import target_signature
    from .translate import tau_eps

    target = target_signature(sig)
    pairs = [(f, tau_eps(f, eps, sig, s4_prefix)) for f in formulas]
    terms = [(f, compile_term(f, sig), compile_term(t, target)) for f, t in pairs]
    used = set().union(*(connectives(f) for f in formulas)) if formulas else set()
    names = sorted(set().union(*(variables(f) for f in formulas))) if formulas else []
    rep = IdentityReport()
    for batch in enumerate_batches(sig.restrict(used), max_worlds):
        rep.frames += batch.size
        dt = dtype_for(batch.n)
        per = valuation_space(batch.n, batch.leq, names, PERSISTENT)
        arb = valuation_space(batch.n, batch.leq, names, ARBITRARY)
        lifted = {k: _lift_table(batch.n, batch.leq, eps[k])[v.astype(np.int64)].astype(dt) for k, v in arb.items()}
        for part in batch.chunks(4096):
            rels = part.relation_arrays()
            ev_p, ev_a, ev_l = (Evaluator(part.n, rels, env) for env in (per, arb, lifted))
            for f, src, tgt in terms:
                a = ev_p.eval(src) != ev_p.eval(tgt)
                b = ev_a.eval(tgt) != ev_l.eval(src)
                rep.comparisons += np.broadcast_to(a, (part.size, a.shape[-1])).size
                rep.comparisons += np.broadcast_to(b, (part.size, b.shape[-1])).size
                for label, bad in (("a", a), ("b", b)):
                    if bad.any():
                        i = int(np.argwhere(np.broadcast_to(bad, (part.size, bad.shape[-1])))[0, 0])
                        rep.violations.append((label, f, part.frame(i)))
    return rep
