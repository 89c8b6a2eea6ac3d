"""Signatures of distributive lattice expansions and their Boolean targets."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

ONE = "1"
DUAL = "d"

DLE = "DLE"
BAE = "BAE"

# Distinguished symbols of the Boolean target language.
NEG = "neg"
DIA_GEQ = "dia_geq"
BOX_LEQ = "box_leq"

# Connectives with a fixed meaning: their frame relation is derived from the
# order and the translation expands their companions into Boolean terms.
IMPLICATION = "->"
COIMPLICATION = ">-"
STANDARD_NAMES = frozenset({IMPLICATION, COIMPLICATION})

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class SignatureError(ValueError):
    pass


def flip(entry: str) -> str:
    return DUAL if entry == ONE else ONE


@dataclass(frozen=True)
class OrderType:
    entries: tuple[str, ...]

    def __post_init__(self):
        bad = [e for e in self.entries if e not in (ONE, DUAL)]
        if bad:
            raise SignatureError(f"order-type entries must be '1' or 'd', got {bad!r}")

    @classmethod
    def of(cls, entries: Iterable[str]) -> "OrderType":
        return cls(tuple(entries))

    def opposite(self) -> "OrderType":
        return OrderType(tuple(flip(e) for e in self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> str:
        return self.entries[i]

    def __str__(self) -> str:
        return "(" + ",".join(self.entries) + ")"


@dataclass(frozen=True)
class Connective:
    name: str
    family: str  # "F" or "G"
    arity: int
    coord_types: OrderType
    # Name of the DLE connective whose frame relation this symbol uses, for
    # companions f° in a target signature.
    relation: str | None = None

    def __post_init__(self):
        if self.family not in ("F", "G"):
            raise SignatureError(f"{self.name}: family must be F or G")
        if self.arity < 0:
            raise SignatureError(f"{self.name}: negative arity")
        if len(self.coord_types) != self.arity:
            raise SignatureError(
                f"{self.name}: arity {self.arity} but order-type of length {len(self.coord_types)}"
            )

    @property
    def is_standard(self) -> bool:
        return self.name in STANDARD_NAMES

    @property
    def relation_name(self) -> str:
        return self.relation if self.relation is not None else self.name


@dataclass(frozen=True)
class FrameRelationType:
    connective: Connective
    rel_arity: int
    rel_order_type: OrderType


@dataclass(frozen=True)
class Signature:
    name: str
    connectives: tuple[Connective, ...]
    dialect: str = DLE
    _index: dict = field(default=None, compare=False, hash=False, repr=False)
    # For a target signature: the signature it was built from.
    source: "Signature | None" = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.dialect not in (DLE, BAE):
            raise SignatureError(f"unknown dialect {self.dialect!r}")
        index = {}
        for c in self.connectives:
            if c.name in index:
                raise SignatureError(f"duplicate connective name {c.name!r}")
            index[c.name] = c
        object.__setattr__(self, "_index", index)
        for c in self.connectives:
            if c.is_standard and (c.arity != 2 or c.coord_types != OrderType((DUAL, ONE))):
                raise SignatureError(f"{c.name!r} is reserved for arity 2 with order-type (d,1)")
            if c.name == IMPLICATION and c.family != "G":
                raise SignatureError("'->' must be in family G")
            if c.name == COIMPLICATION and c.family != "F":
                raise SignatureError("'>-' must be in family F")
        if self.dialect == BAE:
            for name, fam in ((DIA_GEQ, "F"), (BOX_LEQ, "G")):
                c = index.get(name)
                if c is None or c.family != fam or c.coord_types != OrderType((ONE,)):
                    raise SignatureError(f"BAE signature lacks {name}")

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def get(self, name: str) -> Connective:
        try:
            return self._index[name]
        except KeyError:
            raise SignatureError(f"unknown connective {name!r} in signature {self.name!r}") from None

    @property
    def F(self) -> tuple[Connective, ...]:
        return tuple(c for c in self.connectives if c.family == "F")

    @property
    def G(self) -> tuple[Connective, ...]:
        return tuple(c for c in self.connectives if c.family == "G")

    @property
    def has_neg(self) -> bool:
        return self.dialect == BAE

    def restrict(self, names: Iterable[str]) -> "Signature":
        """Sub-signature keeping only the named connectives (and the BAE core)."""
        keep = set(names)
        if self.dialect == BAE:
            keep |= {DIA_GEQ, BOX_LEQ}
        return Signature(self.name, tuple(c for c in self.connectives if c.name in keep), self.dialect,
                         source=self.source)


def _conn(name, family, ot) -> Connective:
    return Connective(name, family, len(ot), OrderType(tuple(ot)))


def frame_relation_type(c: Connective) -> FrameRelationType:
    eta = (ONE,) + c.coord_types.opposite().entries
    return FrameRelationType(c, c.arity + 1, OrderType(eta))


def frame_relation_types(sig: Signature) -> set[FrameRelationType]:
    if sig.dialect != DLE:
        raise SignatureError("frame relation types are defined for DLE signatures")
    return {frame_relation_type(c) for c in sig.connectives}


def companion_name(name: str) -> str:
    if name == IMPLICATION:
        return "imp_o"
    if name == COIMPLICATION:
        return "coimp_o"
    return name + "_o"


def target_signature(sig: Signature) -> Signature:
    if sig.dialect == BAE:
        raise SignatureError(f"signature {sig.name!r} is already Boolean")
    conns = [_conn(DIA_GEQ, "F", [ONE]), _conn(BOX_LEQ, "G", [ONE])]
    for c in sig.connectives:
        conns.append(
            Connective(companion_name(c.name), c.family, c.arity, OrderType((ONE,) * c.arity), relation=c.name)
        )
    return Signature(sig.name + "-target", tuple(conns), BAE, source=sig)


_IMP = _conn(IMPLICATION, "G", [DUAL, ONE])
_COIMP = _conn(COIMPLICATION, "F", [DUAL, ONE])
_DIA = _conn("dia", "F", [ONE])
_BOX = _conn("box", "G", [ONE])

_BUILTINS = {
    "intuitionistic": (_IMP,),
    "co-intuitionistic": (_COIMP,),
    "bi-intuitionistic": (_COIMP, _IMP),
    "fischer-servi": (_DIA, _IMP, _BOX),
    "wolter-bimodal": (_COIMP, _DIA, _IMP, _BOX),
    "positive-modal": (_DIA, _BOX),
    "dml": (_DIA, _conn("lhd", "F", [DUAL]), _BOX, _conn("rhd", "G", [DUAL])),
    "lattice": (),
}

# Boolean targets offered directly: the S4 pair alone, and the pair with a
# classical box and diamond.
_TARGETS = {"s4": "lattice", "classical-modal": "positive-modal"}

BUILTIN_NAMES = tuple(_BUILTINS) + tuple(_TARGETS)


def builtin(name: str) -> Signature:
    if name in _TARGETS:
        return target_signature(builtin(_TARGETS[name]))
    try:
        conns = _BUILTINS[name]
    except KeyError:
        raise SignatureError(f"unknown builtin signature {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    return Signature(name, conns, DLE)


def _load_conn(obj, family: str, where: str) -> Connective:
    if not isinstance(obj, dict):
        raise SignatureError(f"{where}: connective must be an object")
    missing = {"name", "arity", "ot"} - set(obj)
    if missing:
        raise SignatureError(f"{where}: missing keys {sorted(missing)}")
    name, arity, ot = obj["name"], obj["arity"], obj["ot"]
    if not isinstance(name, str) or not (_IDENT.match(name) or name in STANDARD_NAMES):
        raise SignatureError(f"{where}: bad connective name {name!r}")
    if not isinstance(arity, int) or isinstance(arity, bool):
        raise SignatureError(f"{where}: arity must be an integer")
    if not isinstance(ot, list):
        raise SignatureError(f"{where}: ot must be a list")
    return Connective(name, family, arity, OrderType(tuple(ot)))


def load_signature(text: str) -> Signature:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SignatureError(f"signature parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise SignatureError("signature must be a JSON object")
    name = obj.get("name", "custom")
    conns = []
    for fam in ("F", "G"):
        items = obj.get(fam, [])
        if not isinstance(items, list):
            raise SignatureError(f"{fam} must be a list")
        conns += [_load_conn(c, fam, f"{fam}[{i}]") for i, c in enumerate(items)]
    return Signature(str(name), tuple(conns), DLE)


def dump_signature(sig: Signature) -> str:
    if sig.dialect != DLE:
        raise SignatureError("only DLE signatures are serialized")
    out = {"name": sig.name, "F": [], "G": []}
    for c in sig.connectives:
        out[c.family].append({"name": c.name, "arity": c.arity, "ot": list(c.coord_types.entries)})
    return json.dumps(out)


def resolve_signature(spec: str) -> Signature:
    """A builtin name, or a path to a signature file."""
    if spec in BUILTIN_NAMES:
        return builtin(spec)
    try:
        with open(spec, encoding="utf-8") as fh:
            return load_signature(fh.read())
    except FileNotFoundError:
        raise SignatureError(f"no builtin or file named {spec!r}") from None
