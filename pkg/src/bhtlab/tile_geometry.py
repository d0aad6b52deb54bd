"""Intervals, grids, phase-space rectangles, tiles and trees.

Everything here is combinatorial and immutable.  Intervals are half-open
``[left, right)``.  Endpoint comparisons use a relative tolerance of
``REL_TOL`` so that intervals built from floating-point dilations of
dyadic rationals compare as intended.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "REL_TOL",
    "Interval",
    "Grid",
    "Rect",
    "Tile",
    "Tree",
    "rect_leq",
    "freq_not_prec",
    "grid_check",
    "maximal_rects",
    "is_tree",
    "tree_base",
    "rho",
    "trees_from_maximal",
    "tiles_to_text",
    "tiles_from_text",
]

REL_TOL = 1e-12


def _le(a: float, b: float) -> bool:
    """``a <= b`` up to relative tolerance."""
    return a <= b + REL_TOL * max(1.0, abs(a), abs(b))


def _eq(a: float, b: float) -> bool:
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Interval:
    """Half-open interval ``[left, right)``."""

    left: float
    right: float

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)):
            raise ValueError("interval endpoints must be finite")
        if not self.left < self.right:
            raise ValueError(f"empty interval [{self.left}, {self.right})")

    @property
    def length(self) -> float:
        return self.right - self.left

    @property
    def center(self) -> float:
        return 0.5 * (self.left + self.right)

    def contains(self, other: "Interval") -> bool:
        """Inclusion ``other ⊆ self``."""
        return _le(self.left, other.left) and _le(other.right, self.right)

    def same(self, other: "Interval") -> bool:
        return _eq(self.left, other.left) and _eq(self.right, other.right)

    def intersects(self, other: "Interval") -> bool:
        """Nonempty intersection of the half-open intervals."""
        lo = max(self.left, other.left)
        hi = min(self.right, other.right)
        return not _le(hi, lo)

    def contains_point(self, x) -> np.ndarray | bool:
        return (self.left <= x) & (x < self.right)

    def dilate(self, a: float) -> "Interval":
        """Concentric dilation ``aI``."""
        h = 0.5 * a * self.length
        return Interval(self.center - h, self.center + h)

    def scale(self, x: float) -> "Interval":
        """Pointwise image ``x·I`` (reverses orientation for ``x < 0``)."""
        a, b = x * self.left, x * self.right
        return Interval(min(a, b), max(a, b))

    def distance(self, x) -> np.ndarray:
        """Distance from points ``x`` to the closure of the interval."""
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, np.maximum(self.left - x, x - self.right))

    def __repr__(self):
        return f"[{self.left:.6g}, {self.right:.6g})"


@dataclass(frozen=True)
class Grid:
    """Finite family of intervals; see :func:`grid_check`."""

    intervals: tuple
    id: str = "grid"

    def __init__(self, intervals: Iterable[Interval], id: str = "grid"):
        object.__setattr__(self, "intervals", tuple(intervals))
        object.__setattr__(self, "id", id)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def unique(self) -> "Grid":
        out: list[Interval] = []
        for iv in sorted(self.intervals, key=lambda v: (v.left, -v.right)):
            if not any(iv.same(o) for o in out[-8:]):
                out.append(iv)
        return Grid(out, self.id)


@dataclass(frozen=True)
class Rect:
    """Phase-space rectangle ``time × freq``."""

    time: Interval
    freq: Interval

    def intersects(self, other: "Rect") -> bool:
        return self.time.intersects(other.time) and self.freq.intersects(other.freq)


def rect_leq(a: Rect, b: Rect) -> bool:
    """The order ``a ≪ b``: componentwise inclusion."""
    return b.time.contains(a.time) and b.freq.contains(a.freq)


def freq_not_prec(a: Interval, b: Interval) -> bool:
    """``a ⊀ b``, i.e. ``a.right > b.left``."""
    return a.right > b.left and not _eq(a.right, b.left)


def grid_check(g: Iterable[Interval]) -> bool:
    """True iff every pair is disjoint or nested.

    Sorting by ``(left, -right)`` reduces the pairwise test to a stack
    sweep, O(n log n).
    """
    ivs = sorted(g, key=lambda v: (v.left, -v.right))
    stack: list[Interval] = []
    for iv in ivs:
        while stack and _le(stack[-1].right, iv.left):
            stack.pop()
        if stack and not stack[-1].contains(iv):
            return False
        stack.append(iv)
    return True


@dataclass(frozen=True, eq=False)
class Tile:
    """Tile ``s = (k, n, l)`` with its time and frequency intervals.

    ``packets`` holds the three sampled wave packets (or ``None`` for
    purely combinatorial tiles) and ``coeffs`` the cached pairings
    ``<f_i, φ_i(s)>``.  ``coeffs`` is the only mutable slot and is filled
    through :meth:`with_coeffs`.
    """

    k: int
    n: int
    l: int
    I: Interval
    omega: tuple
    packets: tuple | None = None
    coeffs: tuple | None = None
    tid: int = -1

    def __post_init__(self):
        if len(self.omega) != 3:
            raise ValueError("a tile carries three frequency intervals")

    def rect(self, i: int) -> Rect:
        """``ρ_i(s) = I(s) × ω_i(s)`` for ``i`` in 1..3."""
        return Rect(self.I, self.omega[i - 1])

    def with_coeffs(self, coeffs: Sequence[complex]) -> "Tile":
        return Tile(self.k, self.n, self.l, self.I, self.omega,
                    self.packets, tuple(complex(c) for c in coeffs), self.tid)

    def with_id(self, tid: int) -> "Tile":
        return Tile(self.k, self.n, self.l, self.I, self.omega,
                    self.packets, self.coeffs, tid)

    def omegas_disjoint(self) -> bool:
        return not any(self.omega[a].intersects(self.omega[b])
                       for a, b in itertools.combinations(range(3), 2))

    def nested_in(self, grid: Iterable[Interval]) -> bool:
        """If ``ω_i ⊊ J`` for some ``J`` in ``grid`` then every ``ω_j ⊂ J``."""
        for J in grid:
            for w in self.omega:
                if J.contains(w) and not J.same(w):
                    if not all(J.contains(v) for v in self.omega):
                        return False
        return True

    def __repr__(self):
        return f"Tile(k={self.k}, n={self.n}, l={self.l}, I={self.I})"


def rho(s: Tile, iota: int) -> Rect:
    return s.rect(iota)


def maximal_rects(tiles: Sequence[Tile], iota: int) -> list[Tile]:
    """Tiles whose ``ρ_ι`` is maximal under ``≪``.

    Tiles with identical rectangles are represented once (the first in
    input order).
    """
    out = []
    rects = [rho(s, iota) for s in tiles]
    for a, ra in enumerate(rects):
        dominated = False
        for b, rb in enumerate(rects):
            if a == b:
                continue
            if rect_leq(ra, rb):
                if not rect_leq(rb, ra) or b < a:
                    dominated = True
                    break
        if not dominated:
            out.append(tiles[a])
    return out


def is_tree(tiles: Sequence[Tile], iota: int) -> bool:
    """True iff ``{ρ_ι(s)}`` has exactly one ``≪``-maximal element."""
    tiles = list(tiles)
    if not tiles:
        raise ValueError("tile set must be nonempty")
    return len(maximal_rects(tiles, iota)) == 1


def tree_base(tiles: Sequence[Tile], iota: int) -> Tile:
    tiles = list(tiles)
    top = maximal_rects(tiles, iota)
    if len(top) != 1:
        raise ValueError("no unique maximal element")
    return top[0]


@dataclass(frozen=True, eq=False)
class Tree:
    """Tree of type ``iota`` with base tile ``base``; ``J = I(base)``."""

    tiles: tuple
    iota: int
    base: Tile
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.iota not in (1, 2, 3):
            raise ValueError("tree type must be 1, 2 or 3")
        top = rho(self.base, self.iota)
        if not all(rect_leq(rho(s, self.iota), top) for s in self.tiles):
            raise ValueError("base does not dominate the tree")

    @property
    def J(self) -> Interval:
        return self.base.I

    def __len__(self):
        return len(self.tiles)


def trees_from_maximal(tiles: Sequence[Tile], iota: int) -> list[Tree]:
    """Cover a tile family by trees rooted at its maximal elements."""
    trees = []
    for b in maximal_rects(tiles, iota):
        top = rho(b, iota)
        members = tuple(s for s in tiles if rect_leq(rho(s, iota), top))
        trees.append(Tree(members, iota, b))
    return trees


def tiles_to_text(tiles: Iterable[Tile]) -> str:
    """One line per tile: ``k n l I.left I.right w1.l w1.r w2.l w2.r w3.l w3.r``."""
    rows = []
    for s in tiles:
        vals = [s.I.left, s.I.right]
        for w in s.omega:
            vals += [w.left, w.right]
        rows.append(" ".join([str(s.k), str(s.n), str(s.l)]
                             + [repr(float(v)) for v in vals]))
    return "\n".join(rows) + ("\n" if rows else "")


def tiles_from_text(text: str) -> list[Tile]:
    out = []
    for tid, line in enumerate(ln for ln in text.splitlines() if ln.strip()):
        parts = line.split()
        k, n, l = (int(v) for v in parts[:3])
        v = [float(x) for x in parts[3:]]
        I = Interval(v[0], v[1])
        om = (Interval(v[2], v[3]), Interval(v[4], v[5]), Interval(v[6], v[7]))
        out.append(Tile(k, n, l, I, om, tid=tid))
    return out
