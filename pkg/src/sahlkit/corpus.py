"""Regression corpus: inequalities with expected classification and semantic behaviour.

Line format::

    id ; signature ; inequality ; expectation ; expectation ...

Expectations:

    sahlqvist EPS              Sahlqvist at EPS
    not-sahlqvist              Sahlqvist for no order-type
    inductive EPS omega=EDGES  inductive at EPS for the given order
    inductive-only EPS omega=EDGES   as above and not Sahlqvist at EPS
    not-inductive              inductive for no order-type
    correspond [EPS] [worlds=N]      correspondent found and confirmed by the frame oracle
    no-correspondent           the correspondent pipeline rejects the input
    transfer EPS [worlds=N]    validity agrees with the translation on every small frame

EPS is `p=1,q=d`; EDGES is `r<p,p<q`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .formula import Inequality, parse_inequality, show
from .gentree import classify, is_inductive, is_sahlqvist
from .signature import Signature, resolve_signature


class CorpusError(ValueError):
    pass


@dataclass
class Expectation:
    kind: str
    eps: dict | None = None
    omega: tuple = ()
    worlds: int | None = None

    def label(self) -> str:
        parts = [self.kind]
        if self.eps:
            parts.append(",".join(f"{k}={v}" for k, v in self.eps.items()))
        if self.omega:
            parts.append("omega=" + ",".join(f"{a}<{b}" for a, b in self.omega))
        if self.worlds:
            parts.append(f"worlds={self.worlds}")
        return " ".join(parts)


@dataclass
class Entry:
    id: str
    sig: Signature
    inequality: Inequality
    expectations: list[Expectation]
    line: int = 0


@dataclass
class Outcome:
    entry: Entry
    expectation: Expectation
    ok: bool
    seconds: float
    detail: str = ""
    frame: object = None
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "id": f"{self.entry.id}: {self.expectation.kind}",
            "entry": self.entry.id,
            "signature": self.entry.sig.name,
            "inequality": show(self.entry.inequality),
            "check": self.expectation.label(),
            "ok": self.ok,
            "seconds": round(self.seconds, 4),
            "detail": self.detail,
        }


def parse_eps(text: str) -> dict:
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise CorpusError(f"bad order-type entry {part!r}")
        k, v = (s.strip() for s in part.split("=", 1))
        v = {"1": "1", "d": "d", "D": "d", "∂": "d", "partial": "d"}.get(v)
        if v is None:
            raise CorpusError(f"order-type values are 1 or d, got {part!r}")
        out[k] = v
    return out


def parse_omega(text: str) -> tuple:
    edges = []
    for part in text.split(","):
        part = part.strip()
        if part:
            if "<" not in part:
                raise CorpusError(f"bad dependency edge {part!r}")
            a, b = (s.strip() for s in part.split("<", 1))
            edges.append((a, b))
    return tuple(edges)


def _expectation(text: str) -> Expectation:
    words = text.split()
    if not words:
        raise CorpusError("empty expectation")
    kind, rest = words[0], words[1:]
    known = {"sahlqvist", "not-sahlqvist", "inductive", "inductive-only", "not-inductive", "correspond",
             "no-correspondent", "transfer"}
    if kind not in known:
        raise CorpusError(f"unknown expectation {kind!r}")
    exp = Expectation(kind)
    for w in rest:
        if w.startswith("omega="):
            exp.omega = parse_omega(w[6:])
        elif w.startswith("worlds="):
            exp.worlds = int(w[7:])
        else:
            exp.eps = parse_eps(w)
    if kind in ("sahlqvist", "inductive", "inductive-only", "transfer") and exp.eps is None:
        raise CorpusError(f"{kind} needs an order-type")
    return exp


def read_corpus(text: str) -> list[Entry]:
    entries = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(";")]
        if len(parts) < 3:
            raise CorpusError(f"line {no}: expected 'id ; signature ; inequality ; ...'")
        try:
            sig = resolve_signature(parts[1])
            ineq = parse_inequality(parts[2], sig)
            exps = [_expectation(p) for p in parts[3:] if p]
        except ValueError as exc:
            raise CorpusError(f"line {no}: {exc}") from None
        entries.append(Entry(parts[0], sig, ineq, exps, no))
    return entries


def default_corpus_text() -> str:
    return resources.files("sahlkit").joinpath("data/corpus.txt").read_text(encoding="utf-8")


def load_corpus(path: str | Path | None = None) -> list[Entry]:
    if path is None:
        return read_corpus(default_corpus_text())
    return read_corpus(Path(path).read_text(encoding="utf-8"))


def check(entry: Entry, exp: Expectation, max_worlds: int = 4) -> Outcome:
    from .correspond import NotInductive, Unsupported, correspondent, oracle_equivalence
    from .semantics import transfer_sweep

    t0 = time.perf_counter()
    sig, ineq = entry.sig, entry.inequality
    detail, frame, extra = "", None, {}
    kind = exp.kind
    if kind == "sahlqvist":
        v = is_sahlqvist(ineq, exp.eps, sig)
        ok, detail = v.ok, "; ".join(v.diagnostics)
    elif kind == "not-sahlqvist":
        rep = classify(ineq, sig)
        found = [w for w in rep.witnesses if w.sahlqvist]
        ok = not found
        detail = "" if ok else f"Sahlqvist at {found[0].eps_dict()}"
    elif kind in ("inductive", "inductive-only"):
        v = is_inductive(ineq, exp.eps, exp.omega, sig)
        ok, detail = v.ok, "; ".join(v.diagnostics)
        if ok and kind == "inductive-only" and is_sahlqvist(ineq, exp.eps, sig):
            ok, detail = False, "also Sahlqvist at this order-type"
    elif kind == "not-inductive":
        rep = classify(ineq, sig)
        ok = not rep.witnesses
        detail = "" if ok else f"inductive at {rep.witnesses[0].eps_dict()}"
    elif kind == "correspond":
        worlds = exp.worlds or max_worlds
        try:
            corr = correspondent(ineq, sig, exp.eps)
        except (NotInductive, Unsupported) as exc:
            ok, detail = False, str(exc)
        else:
            verdict = oracle_equivalence(ineq, corr.formula, sig, worlds)
            ok = bool(verdict)
            extra = {"fo": corr.sexpr, "eps": corr.eps, "frames": getattr(verdict, "frames", None)}
            detail = f"{corr.infix}  [{getattr(verdict, 'frames', 0)} frames up to {worlds} worlds]"
            if not ok:
                frame = verdict.frame
                detail = f"refuted on {frame.describe()}"
    elif kind == "no-correspondent":
        try:
            corr = correspondent(ineq, sig, exp.eps)
            ok, detail = False, f"produced {corr.infix}"
        except (NotInductive, Unsupported) as exc:
            ok, detail = True, str(exc)
    elif kind == "transfer":
        worlds = exp.worlds or min(max_worlds, 3)
        checked, bad = transfer_sweep(ineq, exp.eps, sig, worlds)
        ok = not bad
        detail = f"{checked} frames, {len(bad)} disagreements"
        if bad:
            frame = bad[0].frame
    else:  # pragma: no cover - rejected when parsing
        raise CorpusError(kind)
    return Outcome(entry, exp, ok, time.perf_counter() - t0, detail, frame, extra)


def _check_entry(args) -> list[Outcome]:
    entry, max_worlds = args
    return [check(entry, x, max_worlds) for x in entry.expectations]


def run(entries: list[Entry], max_worlds: int = 4, jobs: int = 1) -> list[Outcome]:
    """Check every expectation; with jobs > 1 entries are spread over worker processes.

    Output order follows the corpus regardless of which worker finishes first.
    """
    if max_worlds < 1:
        raise CorpusError("max_worlds must be positive")
    work = [(e, max_worlds) for e in entries]
    if jobs <= 1 or len(entries) < 2:
        per_entry = [_check_entry(w) for w in work]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_entry = list(pool.map(_check_entry, work, chunksize=1))
    return [o for group in per_entry for o in group]
