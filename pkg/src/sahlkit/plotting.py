"""Hasse diagrams of frames and finite lattices, and a summary chart for corpus runs.

Everything renders through the non-interactive Agg backend straight to files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_OP_COLOURS = ["tab:red", "tab:blue", "tab:green", "tab:purple", "tab:orange"]


def covers(leq: np.ndarray) -> list[tuple[int, int]]:
    """Covering pairs (a, b): a < b with nothing strictly between."""
    n = leq.shape[0]
    lt = leq & ~np.eye(n, dtype=bool)
    out = []
    for a in range(n):
        for b in range(n):
            if lt[a, b] and not any(lt[a, c] and lt[c, b] for c in range(n)):
                out.append((a, b))
    return out


def hasse_layout(leq: np.ndarray) -> np.ndarray:
    """Rank each element by its longest chain from below; spread ranks horizontally."""
    n = leq.shape[0]
    lt = leq & ~np.eye(n, dtype=bool)
    rank = np.zeros(n, int)
    for _ in range(n):
        for b in range(n):
            below = np.flatnonzero(lt[:, b])
            if below.size:
                rank[b] = max(rank[b], rank[below].max() + 1)
    pos = np.zeros((n, 2))
    for r in np.unique(rank):
        members = np.flatnonzero(rank == r)
        xs = np.linspace(-(len(members) - 1) / 2, (len(members) - 1) / 2, len(members))
        pos[members, 0] = xs
        pos[members, 1] = r
    return pos


def _loop(ax, p, colour):
    ax.annotate("", xy=(p[0] + 0.05, p[1] + 0.06), xytext=(p[0] - 0.05, p[1] + 0.06),
                arrowprops=dict(arrowstyle="->", color=colour, connectionstyle="arc3,rad=-2.5", lw=1.2))


def _arrow(ax, p, q, colour, rad=0.25):
    ax.annotate("", xy=q, xytext=p,
                arrowprops=dict(arrowstyle="->", color=colour, shrinkA=9, shrinkB=9,
                                connectionstyle=f"arc3,rad={rad}", lw=1.2))


def draw_hasse(ax, leq: np.ndarray, labels: Sequence[str], arrows: Mapping[str, Sequence[tuple[int, int]]] = (),
               title: str | None = None):
    """Order as a Hasse diagram; each entry of `arrows` is drawn as coloured directed edges."""
    leq = np.asarray(leq, bool)
    pos = hasse_layout(leq)
    for a, b in covers(leq):
        ax.plot(pos[[a, b], 0], pos[[a, b], 1], color="black", lw=1.5, zorder=1)
    ax.scatter(pos[:, 0], pos[:, 1], s=60, color="black", zorder=2)
    for i, lab in enumerate(labels):
        ax.annotate(str(lab), pos[i], xytext=(7, -3), textcoords="offset points", fontsize=9)
    handles = []
    for k, (name, edges) in enumerate(dict(arrows).items()):
        colour = _OP_COLOURS[k % len(_OP_COLOURS)]
        for u, v in edges:
            if u == v:
                _loop(ax, pos[u], colour)
            else:
                _arrow(ax, pos[u], pos[v], colour)
        handles.append(plt.Line2D([], [], color=colour, label=name))
    if handles:
        ax.legend(handles=handles, loc="upper left", fontsize=8, frameon=False)
    ax.set_axis_off()
    ax.margins(0.25)
    if title:
        ax.set_title(title, fontsize=10)


def frame_figure(fr, path: str | Path, title: str | None = None) -> Path:
    """Worlds ordered by <=, with every binary relation drawn as arrows."""
    n = fr.worlds
    leq = np.zeros((n, n), bool)
    for u, v in fr.leq:
        leq[u, v] = True
    arrows, skipped = {}, []
    for name in fr.relation_names():
        tuples = fr.relation(name)
        if name in ("->", ">-"):
            continue
        if all(len(t) == 2 for t in tuples) and tuples:
            arrows["R_" + name] = sorted(tuples)
        elif tuples:
            skipped.append(name)
    fig, ax = plt.subplots(figsize=(3.2 + 0.4 * n, 3.2))
    label = title or "frame"
    if skipped:
        label += f"\n(relations not drawn: {', '.join(skipped)})"
    draw_hasse(ax, leq, [str(w) for w in range(n)], arrows, label)
    return _save(fig, path)


def algebra_figure(alg, path: str | Path, ops: Sequence[str] = (), title: str | None = None) -> Path:
    """Hasse diagram of a finite algebra with its unary operations as arrows."""
    arrows = {}
    for name in ops:
        table = alg.ops[name]
        arrows[name] = [(i, int(table[i])) for i in range(alg.size)]
    fig, ax = plt.subplots(figsize=(3.6, 3.6))
    draw_hasse(ax, alg.leq, alg.labels, arrows, title)
    return _save(fig, path)


def mix_figure(report, path: str | Path) -> Path:
    """The five-element lattice beside the eight-element Boolean algebra, boxes as arrows."""
    fig, axes = plt.subplots(1, 2, figsize=(7.5, 3.8))
    A, B = report.A, report.B
    draw_hasse(axes[0], A.leq, A.labels, {"box": [(i, int(A.ops["box"][i])) for i in range(A.size)]}, "A")
    draw_hasse(axes[1], B.leq, B.labels,
               {"box_o": [(i, int(B.ops["box_o"][i])) for i in range(B.size)],
                "box_le": [(i, int(report.triple.box()[i])) for i in range(B.size) if report.triple.box()[i] != i]},
               "B")
    fig.suptitle("diagram commutes; mix axiom fails at b", fontsize=10)
    return _save(fig, path)


def corpus_chart(rows: Sequence[Mapping], path: str | Path) -> Path:
    """Per-entry wall time, coloured by pass/fail."""
    names = [r["id"] for r in rows]
    times = [max(float(r.get("seconds", 0.0)), 1e-4) for r in rows]
    colours = ["tab:green" if r.get("ok") else "tab:red" for r in rows]
    fig, ax = plt.subplots(figsize=(7, 0.28 * len(rows) + 1.2))
    y = np.arange(len(rows))
    ax.barh(y, times, color=colours)
    ax.set_yticks(y, names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("seconds")
    passed = sum(1 for r in rows if r.get("ok"))
    ax.set_title(f"corpus: {passed}/{len(rows)} entries as expected", fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
