"""Static SVG plots drawn from result tables with the Agg backend.

SVG output is made byte-stable by fixing the hash salt, dropping the date
metadata and emitting text as text rather than glyph paths.
"""

from __future__ import annotations

import math
from fractions import Fraction

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_plot", "to_float"]

_RC = {
    "svg.hashsalt": "bhtlab",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (5.0, 3.6),
}


def to_float(v) -> float:
    """Best-effort numeric value of a table cell; NaN when not numeric."""
    if isinstance(v, bool):
        return float(v)
    try:
        if isinstance(v, str):
            return float(Fraction(v.strip()))
        return float(v)
    except (TypeError, ValueError, ZeroDivisionError):
        return math.nan


def _column(table, name: str) -> list[float]:
    i = list(table.header).index(name)
    return [to_float(r[i]) for r in table.rows]


def render_plot(plot, table, path: str) -> None:
    """Write the plot described by ``plot`` (an experiments ``Plot``) to ``path``."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        try:
            if plot.kind == "lattice":
                _lattice(ax, table, plot)
            else:
                xs = _column(table, plot.x)
                for y in plot.ys:
                    ys = _column(table, y)
                    pts = [(a, b) for a, b in zip(xs, ys) if math.isfinite(a) and math.isfinite(b)
                           and (not plot.logy or b > 0) and (not plot.logx or a > 0)]
                    if plot.kind == "line":
                        pts.sort()
                    if not pts:
                        continue
                    px, py = zip(*pts)
                    if plot.kind == "line":
                        ax.plot(px, py, marker="o", ms=3, lw=1.2, label=y)
                    else:
                        ax.scatter(px, py, s=12, label=y)
                if plot.logx:
                    ax.set_xscale("log")
                if plot.logy:
                    ax.set_yscale("log")
                ax.set_xlabel(plot.x)
                if len(plot.ys) > 1:
                    ax.legend(frameon=False)
                elif plot.ys:
                    ax.set_ylabel(plot.ys[0])
            ax.set_title(plot.title or plot.name)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)


def _lattice(ax, table, plot) -> None:
    """Reciprocal-coordinate lattice: covered targets, missing targets, other covered points."""
    r1 = _column(table, plot.x)
    r2 = _column(table, plot.ys[0])
    cov = _column(table, "covered")
    tgt = _column(table, "target")
    groups = {
        "covered target": ("tab:green", "o"),
        "missing target": ("tab:red", "x"),
        "covered other": ("tab:gray", "."),
    }
    for label, (color, marker) in groups.items():
        pts = [(a, b) for a, b, c, t in zip(r1, r2, cov, tgt)
               if (label == "covered target" and c and t) or (label == "missing target" and t and not c)
               or (label == "covered other" and c and not t)]
        if pts:
            px, py = zip(*pts)
            ax.scatter(px, py, c=color, marker=marker, s=18, label=label)
    ax.plot([0.5, 1.0], [1.0, 0.5], c="k", lw=0.8, ls="--")
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.set_aspect("equal")
    ax.set_xlabel("1/p1")
    ax.set_ylabel("1/p2")
    ax.legend(frameon=False, fontsize=7, loc="upper left", bbox_to_anchor=(1.0, 1.0))
