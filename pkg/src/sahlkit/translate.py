"""Order-type parametric translation into the Boolean target language."""

from __future__ import annotations

from typing import Mapping

from .formula import App, And, Bot, Formula, Inequality, Neg, Or, Top, Var, variables
from .signature import (
    BOX_LEQ,
    COIMPLICATION,
    DIA_GEQ,
    DLE,
    DUAL,
    IMPLICATION,
    ONE,
    Signature,
    SignatureError,
    builtin,
    companion_name,
)


class TranslationError(ValueError):
    pass


def polarity_vector(conn) -> tuple[bool, ...]:
    """Which arguments of a companion application are wrapped in negation."""
    return tuple(t == DUAL for t in conn.coord_types)


def _tau(f: Formula, eps: Mapping[str, str], sig: Signature, prefix: bool) -> Formula:
    if isinstance(f, Var):
        if f.name not in eps:
            raise TranslationError(f"order-type does not cover variable {f.name!r}")
        return App(BOX_LEQ if eps[f.name] == ONE else DIA_GEQ, (f,))
    if isinstance(f, (Bot, Top)):
        return f
    if isinstance(f, And):
        return And(_tau(f.left, eps, sig, prefix), _tau(f.right, eps, sig, prefix))
    if isinstance(f, Or):
        return Or(_tau(f.left, eps, sig, prefix), _tau(f.right, eps, sig, prefix))
    if isinstance(f, App):
        c = sig.get(f.conn)
        args = [_tau(a, eps, sig, prefix) for a in f.args]
        args = [Neg(a) if neg else a for a, neg in zip(args, polarity_vector(c))]
        if c.name == IMPLICATION:
            return App(BOX_LEQ, (Or(args[0], args[1]),))
        if c.name == COIMPLICATION:
            return App(DIA_GEQ, (And(args[0], args[1]),))
        inner = App(companion_name(c.name), tuple(args))
        if not prefix:
            return inner
        return App(DIA_GEQ if c.family == "F" else BOX_LEQ, (inner,))
    raise TranslationError(f"cannot translate {f!r}")


def tau_eps(f, eps: Mapping[str, str], sig: Signature, s4_prefix: bool = True):
    """Translate a formula or inequality.

    With s4_prefix=False the companion applications lose their outer
    modality; implication and co-implication keep theirs, since it is part
    of their meaning.
    """
    if sig.dialect != DLE:
        raise SignatureError("the translation applies to DLE signatures")
    if isinstance(f, Inequality):
        return Inequality(_tau(f.lhs, eps, sig, s4_prefix), _tau(f.rhs, eps, sig, s4_prefix))
    return _tau(f, eps, sig, s4_prefix)


_GMT = {
    "tau": ("intuitionistic", ONE),
    "sigma": ("co-intuitionistic", DUAL),
    "tau_prime": ("bi-intuitionistic", ONE),
    "sigma_prime": ("bi-intuitionistic", DUAL),
}


def gmt(f, variant: str, sig: Signature | None = None):
    """The fixed translations: constant order-type over the matching signature."""
    try:
        sig_name, value = _GMT[variant]
    except KeyError:
        raise TranslationError(f"unknown variant {variant!r}") from None
    expected = builtin(sig_name)
    if sig is not None and set(sig.connectives) != set(expected.connectives):
        raise SignatureError(f"variant {variant} expects the {sig_name} signature")
    eps = {v: value for v in variables(f)}
    return tau_eps(f, eps, expected)
