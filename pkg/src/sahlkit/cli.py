"""Command-line interface.

Exit codes: 0 success, 1 a check failed (invalid, refuted, disagreement), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .formula import ParseError, parse_inequality, show
from .gentree import BoundExceeded, classify, find_witnesses
from .signature import BAE, SignatureError, resolve_signature

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated settings shared by every command."""

    command: str
    sig: str = "intuitionistic"
    eps: dict | None = None
    max_worlds: int = 3
    max_vars: int = 12
    fmt: str = "text"
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.max_worlds < 1 or self.max_vars < 1 or self.jobs < 1:
            raise UsageError("bounds must be positive")

    @classmethod
    def from_args(cls, a: argparse.Namespace) -> "RunConfig":
        return cls(
            command=a.command,
            sig=getattr(a, "sig", "intuitionistic"),
            eps=_parse_eps(getattr(a, "eps", None)),
            max_worlds=next((v for v in (getattr(a, "max_worlds", None), getattr(a, "verify", None)) if v is not None), 3),
            max_vars=getattr(a, "max_vars", 12),
            fmt=getattr(a, "fmt", "text"),
            jobs=getattr(a, "jobs", 1),
        )

    def eps_for(self, ineq) -> dict:
        """The order-type, which must cover every variable of `ineq`."""
        from .formula import variables

        eps = _need(self.eps, "--eps")
        missing = [v for v in variables(ineq) if v not in eps]
        if missing:
            raise UsageError(f"--eps does not cover {', '.join(missing)}")
        return eps


def _env_worlds(default: int) -> int:
    raw = os.environ.get("SK_MAX_WORLDS")
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, ineq: bool = True, eps: bool = False, figures: bool = False):
    p.add_argument("--sig", default="intuitionistic", help="builtin signature name or signature JSON file")
    if ineq:
        p.add_argument("--ineq", help="inequality 'lhs <= rhs'")
    if eps:
        p.add_argument("--eps", help="order-type such as p=1,q=d")
    p.add_argument("--format", dest="fmt", choices=("text", "json", "csv"), default="text")
    if figures:
        p.add_argument("--figures", type=Path, help="directory for rendered figures")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sahlkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("classify", help="Sahlqvist / inductive witnesses")
    _common(p)
    p.add_argument("--mode", choices=("both", "sahlqvist", "inductive"), default="both")
    p.add_argument("--max-vars", type=int, default=12)

    p = sub.add_parser("translate", help="order-type-parametric translation")
    _common(p, eps=True)
    p.add_argument("--no-s4-prefix", action="store_true")
    p.add_argument("--pretty", action="store_true")

    p = sub.add_parser("modelcheck", help="validity on one frame")
    _common(p)
    p.add_argument("--frame", type=Path, required=False)
    p.add_argument("--kind", choices=("persistent", "classical", "arbitrary"), default="persistent")

    p = sub.add_parser("transfer-check", help="validity versus validity of the translation")
    _common(p, eps=True, figures=True)
    p.add_argument("--max-worlds", type=int, default=_env_worlds(3))
    p.add_argument("--no-s4-prefix", action="store_true")

    p = sub.add_parser("correspond", help="first-order correspondent")
    _common(p, eps=True, figures=True)
    p.add_argument("--verify", type=int, metavar="N", help="check against all frames up to N worlds")
    p.add_argument("--no-s4-prefix", action="store_true")
    p.add_argument("--steps", action="store_true", help="show the reduction steps")

    p = sub.add_parser("algebra", help="finite algebra checks")
    asub = p.add_subparsers(dest="algebra_command", parser_class=_Parser)
    q = asub.add_parser("demo-mix", help="embedding diagram without the mix axiom")
    q.add_argument("--format", dest="fmt", choices=("text", "json"), default="text")
    q.add_argument("--figures", type=Path)
    q = asub.add_parser("check", help="diagram, adjunction and S4 checks for one frame")
    _common(q, ineq=False, figures=True)
    q.add_argument("--frame", type=Path)

    p = sub.add_parser("corpus", help="regression corpus")
    csub = p.add_subparsers(dest="corpus_command", parser_class=_Parser)
    q = csub.add_parser("run", help="check every expectation in a corpus file")
    q.add_argument("path", nargs="?", help="corpus file (default: the bundled corpus)")
    q.add_argument("--format", dest="fmt", choices=("text", "json", "csv"), default="text")
    q.add_argument("--figures", type=Path)
    q.add_argument("--max-worlds", type=int, default=_env_worlds(4))
    q.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


# ------------------------------------------------------------------ helpers


def _need(value, flag: str):
    if value is None:
        raise UsageError(f"missing {flag}")
    return value


def _parse_eps(text):
    from .corpus import CorpusError, parse_eps

    if text is None:
        return None
    try:
        return parse_eps(text)
    except CorpusError as exc:
        raise UsageError(str(exc)) from None


def _emit(out, fmt: str, payload: dict, text_lines: list[str], rows: list[dict] | None = None):
    if fmt == "json":
        out.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        rows = rows if rows is not None else [{k: v for k, v in payload.items() if not isinstance(v, (list, dict))}]
        if rows:
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
            out.write(buf.getvalue())
    else:
        out.write("\n".join(text_lines) + "\n")


def _read_frame(path: Path | None, sig):
    from .semantics import load_frame, validate_frame

    path = _need(path, "--frame")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    frame_sig = sig.source if sig.dialect == BAE else sig
    fr = load_frame(text, frame_sig)
    problems = validate_frame(fr, frame_sig)
    if problems:
        raise UsageError("invalid frame: " + "; ".join(problems[:5]))
    return fr


def _figure_paths(directory: Path | None):
    if directory is None:
        return None
    directory.mkdir(parents=True, exist_ok=True)
    return directory


# ------------------------------------------------------------------ commands


def cmd_classify(a, out) -> int:
    sig = resolve_signature(a.sig)
    ineq = parse_inequality(_need(a.ineq, "--ineq"), sig)
    if a.mode == "both":
        rep = classify(ineq, sig, a.max_vars)
    else:
        rep = find_witnesses(ineq, a.mode, sig, a.max_vars)
    payload = {"command": "classify", "ok": True, **rep.to_json()}
    lines = [f"inequality: {show(ineq)}", f"verdict: {rep.verdict}"]
    for w in rep.witnesses:
        eps = ",".join(f"{k}={v}" for k, v in w.eps)
        omega = ",".join(f"{x}<{y}" for x, y in w.omega) or "-"
        lines.append(f"  witness eps={eps} omega={omega}" + (" (sahlqvist)" if w.sahlqvist else ""))
    rows = [{"verdict": rep.verdict, "eps": dict(w.eps), "omega_edges": [list(e) for e in w.omega],
             "sahlqvist": w.sahlqvist} for w in rep.witnesses] or [{"verdict": rep.verdict}]
    _emit(out, a.fmt, payload, lines, rows)
    return EXIT_OK


def cmd_translate(a, out) -> int:
    from .translate import tau_eps

    sig = resolve_signature(a.sig)
    ineq = parse_inequality(_need(a.ineq, "--ineq"), sig)
    eps = a.cfg.eps_for(ineq)
    t = tau_eps(ineq, eps, sig, s4_prefix=not a.no_s4_prefix)
    payload = {"command": "translate", "ok": True, "inequality": show(ineq), "eps": eps,
               "s4_prefix": not a.no_s4_prefix, "translation": show(t)}
    _emit(out, a.fmt, payload, [show(t, pretty=a.pretty)])
    return EXIT_OK


def cmd_modelcheck(a, out) -> int:
    from .semantics import counterexample

    sig = resolve_signature(a.sig)
    ineq = parse_inequality(_need(a.ineq, "--ineq"), sig)
    fr = _read_frame(a.frame, sig)
    kind = "arbitrary" if a.kind in ("classical", "arbitrary") else "persistent"
    if sig.dialect == BAE and kind == "persistent":
        raise UsageError("Boolean signatures are evaluated with --kind classical")
    cex = counterexample(ineq, fr, kind, sig)
    valid = cex is None
    payload = {"command": "modelcheck", "ok": valid, "valid": valid, "kind": kind, "inequality": show(ineq),
               "counterexample": {k: sorted(v) for k, v in cex.items()} if cex else None}
    lines = [f"{'valid' if valid else 'not valid'} ({kind} valuations)"]
    if cex:
        lines.append("counterexample: " + ", ".join(f"{k}={sorted(v)}" for k, v in cex.items()))
    _emit(out, a.fmt, payload, lines)
    return EXIT_OK if valid else EXIT_FAIL


def cmd_transfer(a, out) -> int:
    from .semantics import transfer_sweep

    sig = resolve_signature(a.sig)
    if sig.dialect == BAE:
        raise UsageError("transfer-check takes an inequality over a DLE signature")
    ineq = parse_inequality(_need(a.ineq, "--ineq"), sig)
    eps_list = [a.cfg.eps_for(ineq)] if a.eps else [w.eps_dict() for w in classify(ineq, sig).witnesses]
    if not eps_list:
        raise UsageError("no witnessing order-type; pass --eps")
    figdir = _figure_paths(a.figures)
    results, lines, rows, ok = [], [], [], True
    for eps in eps_list:
        checked, bad = transfer_sweep(ineq, eps, sig, a.max_worlds, s4_prefix=not a.no_s4_prefix)
        label = ",".join(f"{k}={v}" for k, v in eps.items())
        ok &= not bad
        results.append({"eps": eps, "frames": checked, "disagreements": [b.to_json() for b in bad[:10]],
                        "pass": not bad})
        rows.append({"eps": label, "frames": checked, "disagreements": len(bad), "pass": not bad})
        lines.append(f"eps {label}: {'pass' if not bad else 'FAIL'} ({checked} frames, {len(bad)} disagreements)")
        for b in bad[:3]:
            lines.append(f"  counterexample frame {b.frame.describe()}")
        if figdir is not None and bad:
            from .plotting import frame_figure

            for k, b in enumerate(bad[:3]):
                frame_figure(b.frame, figdir / f"transfer-{label.replace(',', '_')}-{k}.png",
                             f"disagreement at {label}")
    payload = {"command": "transfer-check", "ok": ok, "inequality": show(ineq), "max_worlds": a.max_worlds,
               "results": results}
    _emit(out, a.fmt, payload, lines, rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_correspond(a, out) -> int:
    from .correspond import NotInductive, Unsupported, correspondent, oracle_equivalence

    sig = resolve_signature(a.sig)
    ineq = parse_inequality(_need(a.ineq, "--ineq"), sig)
    eps = a.cfg.eps
    try:
        corr = correspondent(ineq, sig, eps, s4_prefix=not a.no_s4_prefix)
    except (NotInductive, Unsupported) as exc:
        payload = {"command": "correspond", "ok": False, "inequality": show(ineq), "error": str(exc),
                   "reason": type(exc).__name__}
        _emit(out, a.fmt, payload, [f"no correspondent: {exc}"])
        return EXIT_FAIL
    payload = {"command": "correspond", "ok": True, **corr.to_json()}
    lines = [f"eps: {','.join(f'{k}={v}' for k, v in corr.eps.items())}", f"fo: {corr.infix}",
             f"sexpr: {corr.sexpr}"]
    if a.steps:
        for st in corr.reduction.steps:
            lines.append(f"  {st.rule}: {st.detail}" if st.detail else f"  {st.rule}")
            lines += [f"    {q.show()}" for q in st.system]
    ok = True
    if a.verify:
        verdict = oracle_equivalence(ineq, corr.formula, sig, a.verify)
        ok = bool(verdict)
        payload["ok"] = ok
        if ok:
            payload["verified_frames"] = verdict.frames
            lines.append(f"verified on {verdict.frames} frames up to {a.verify} worlds")
        else:
            payload["refuting_frame"] = verdict.frame.to_json()
            lines.append(f"REFUTED on {verdict.frame.describe()}")
            if a.figures is not None:
                from .plotting import frame_figure

                frame_figure(verdict.frame, _figure_paths(a.figures) / "refuting-frame.png", "refuting frame")
        if a.figures is not None and ok:
            _correspond_figure(ineq, sig, corr, a.verify, _figure_paths(a.figures))
    rows = [{"eps": corr.eps, "fo": corr.sexpr, "ok": ok}]
    _emit(out, a.fmt, payload, lines, rows)
    return EXIT_OK if ok else EXIT_FAIL


def _correspond_figure(ineq, sig, corr, worlds, figdir):
    """Draw the first frame on which the inequality fails, if any."""
    from .correspond import fo_holds, frame_class
    from .plotting import frame_figure
    from .semantics import enumerate_batches

    frame_sig, _ = frame_class(ineq, sig)
    for batch in enumerate_batches(frame_sig, worlds):
        holds = fo_holds(corr.formula, batch)
        if not holds.all():
            i = int((~holds).nonzero()[0][0])
            frame_figure(batch.frame(i), figdir / "smallest-failing-frame.png",
                         "a smallest frame where the correspondent fails")
            return


def cmd_algebra(a, out) -> int:
    from .algebra import frame_suite, mix_counterexample

    if a.algebra_command == "demo-mix":
        rep = mix_counterexample()
        if a.figures is not None:
            from .plotting import mix_figure

            mix_figure(rep, _figure_paths(a.figures) / "mix-counterexample.png")
        payload = {"command": "algebra demo-mix", **rep.to_json()}
        _emit(out, a.fmt, payload, rep.lines() + [f"report: {'pass' if rep.ok else 'FAIL'}"])
        return EXIT_OK if rep.ok else EXIT_FAIL
    if a.algebra_command == "check":
        sig = resolve_signature(a.sig)
        if sig.dialect == BAE:
            raise UsageError("algebra check takes a DLE signature")
        fr = _read_frame(a.frame, sig)
        reports = frame_suite(fr, sig)
        ok = all(r.ok for r in reports)
        if a.figures is not None:
            from .algebra import complex_algebra
            from .plotting import algebra_figure, frame_figure

            d = _figure_paths(a.figures)
            frame_figure(fr, d / "frame.png", "frame")
            A = complex_algebra(fr, sig)
            unary = [n for n, (_, ot) in A.kinds.items() if len(ot) == 1]
            algebra_figure(A, d / "upset-algebra.png", unary, "up-set algebra")
        payload = {"command": "algebra check", "ok": ok, "reports": [r.to_json() for r in reports]}
        lines = [f"{r.name}: {'pass' if r.ok else 'FAIL'} ({r.checked} points)" for r in reports]
        for r in reports:
            lines += [f"  {f}" for f in r.failures]
        rows = [{"check": r.name, "ok": r.ok, "checked": r.checked} for r in reports]
        _emit(out, a.fmt, payload, lines, rows)
        return EXIT_OK if ok else EXIT_FAIL
    raise UsageError("algebra needs a subcommand: demo-mix or check")


def cmd_corpus(a, out) -> int:
    from .corpus import CorpusError, load_corpus, run

    if a.corpus_command != "run":
        raise UsageError("corpus needs a subcommand: run")
    try:
        entries = load_corpus(a.path)
    except OSError as exc:
        raise UsageError(f"cannot read corpus: {exc}") from None
    except CorpusError as exc:
        raise UsageError(str(exc)) from None
    outcomes = run(entries, a.max_worlds, a.jobs)
    rows = [o.row() for o in outcomes]
    ok = all(r["ok"] for r in rows)
    if a.figures is not None:
        from .plotting import corpus_chart, frame_figure

        d = _figure_paths(a.figures)
        corpus_chart(rows, d / "corpus-summary.png")
        for o in outcomes:
            if o.frame is not None:
                frame_figure(o.frame, d / f"{o.entry.id}-{o.expectation.kind}.png", f"{o.entry.id}: counterexample")
    passed = sum(r["ok"] for r in rows)
    lines = [f"{'PASS' if r['ok'] else 'FAIL'}  {r['id']:<34} {r['seconds']:>8.3f}s  {r['detail'][:80]}"
             for r in rows]
    lines.append(f"{passed}/{len(rows)} checks as expected")
    payload = {"command": "corpus run", "ok": ok, "passed": passed, "total": len(rows), "results": rows}
    _emit(out, a.fmt, payload, lines, rows)
    return EXIT_OK if ok else EXIT_FAIL


_COMMANDS = {
    "classify": cmd_classify,
    "translate": cmd_translate,
    "modelcheck": cmd_modelcheck,
    "transfer-check": cmd_transfer,
    "correspond": cmd_correspond,
    "algebra": cmd_algebra,
    "corpus": cmd_corpus,
}


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(_COMMANDS))
        args.cfg = RunConfig.from_args(args)
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"sahlkit: usage error: {exc}\n")
        return EXIT_USAGE
    except (ParseError, SignatureError, BoundExceeded) as exc:
        err.write(f"sahlkit: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        # frame files, order-types and caps
        err.write(f"sahlkit: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
