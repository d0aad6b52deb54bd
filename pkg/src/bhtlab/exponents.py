"""Exact exponent bookkeeping: the bound region, duality, interpolation, closure.

Pairs are stored in reciprocal coordinates ``(1/p1, 1/p2)`` as
``Fraction``; ``∞`` is the reciprocal ``0``.  No floating point is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

__all__ = [
    "INF",
    "ExponentPair",
    "in_theorem_region",
    "dual_pairs",
    "interpolate",
    "prop1_seed",
    "prop2_seed",
    "seed_lattice",
    "ClosureReport",
    "closure_search",
]


class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "inf"


INF = _Infinity()


def _recip(p) -> Fraction:
    if p is INF or p == "inf":
        return Fraction(0)
    p = Fraction(p)
    if p <= 0:
        raise ValueError("exponents must be positive")
    return 1 / p


@dataclass(frozen=True)
class ExponentPair:
    r1: Fraction
    r2: Fraction
    tag: str = "derived_interp"
    step: int = 0

    @classmethod
    def of(cls, p1, p2, tag: str = "seed_prop1", step: int = 0) -> "ExponentPair":
        return cls(_recip(p1), _recip(p2), tag, step)

    @staticmethod
    def _p(r: Fraction):
        return INF if r == 0 else 1 / r

    @property
    def p1(self):
        return self._p(self.r1)

    @property
    def p2(self):
        return self._p(self.r2)

    @property
    def p(self):
        """``p = p1 p2/(p1 + p2)``, i.e. ``1/p = 1/p1 + 1/p2``."""
        return self._p(self.r1 + self.r2)

    @property
    def key(self) -> tuple[Fraction, Fraction]:
        return (self.r1, self.r2)

    def __repr__(self):
        return f"({self.p1}, {self.p2})"


def in_theorem_region(pair: ExponentPair) -> bool:
    """``1 < p1, p2 <= ∞`` and ``2/3 < p < ∞``."""
    r1, r2 = pair.r1, pair.r2
    return 0 <= r1 < 1 and 0 <= r2 < 1 and 0 < r1 + r2 < Fraction(3, 2)


def dual_pairs(pair: ExponentPair, step: int = 0) -> set[ExponentPair]:
    """``{(p1, p'), (p', p2)}`` with ``p'`` dual to ``p``."""
    r1, r2 = pair.r1, pair.r2
    if not (0 < r1 < 1 and 0 < r2 < 1):
        raise ValueError("need 1 < p1, p2 < ∞")
    if r1 + r2 > 1:
        raise ValueError("need p >= 1")
    rp = 1 - r1 - r2
    return {ExponentPair(r1, rp, "derived_dual", step), ExponentPair(rp, r2, "derived_dual", step)}


def interpolate(a: ExponentPair, b: ExponentPair, theta, step: int = 0) -> ExponentPair:
    """Pair with reciprocals ``θ/a + (1-θ)/b`` componentwise."""
    theta = Fraction(theta)
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    for q in (a, b):
        if not (0 <= q.r1 < 1 and 0 <= q.r2 < 1):
            raise ValueError("pairs must lie in (1, ∞]")
    return ExponentPair(theta * a.r1 + (1 - theta) * b.r1,
                        theta * a.r2 + (1 - theta) * b.r2, "derived_interp", step)


def prop1_seed(r1: Fraction, r2: Fraction) -> bool:
    """``1 < p1, p2 < 2`` and ``p > 2/3``."""
    half = Fraction(1, 2)
    return half < r1 < 1 and half < r2 < 1 and r1 + r2 < Fraction(3, 2)


def prop2_seed(r1: Fraction, r2: Fraction) -> bool:
    """``2 < p1, p2 < ∞`` and ``1 < p < 2``."""
    half = Fraction(1, 2)
    return 0 < r1 < half and 0 < r2 < half and half < r1 + r2 < 1


def seed_lattice(N: int) -> list[ExponentPair]:
    out = []
    for a in range(N + 1):
        for b in range(N + 1):
            r1, r2 = Fraction(a, N), Fraction(b, N)
            if prop1_seed(r1, r2):
                out.append(ExponentPair(r1, r2, "seed_prop1", 0))
            elif prop2_seed(r1, r2):
                out.append(ExponentPair(r1, r2, "seed_prop2", 0))
    return out


@dataclass
class ClosureReport:
    N: int
    refine: int
    good: dict
    rounds: int

    def target_points(self, straddle: bool = True) -> list[tuple[Fraction, Fraction]]:
        """Theorem-region points of the ``1/N`` lattice; optionally only ``min p <= 2 <= max p``."""
        half = Fraction(1, 2)
        out = []
        for a in range(self.N + 1):
            for b in range(self.N + 1):
                q = ExponentPair(Fraction(a, self.N), Fraction(b, self.N))
                if not in_theorem_region(q):
                    continue
                if straddle and not (min(q.r1, q.r2) <= half <= max(q.r1, q.r2)):
                    continue
                out.append(q.key)
        return out

    def coverage(self, straddle: bool = True) -> float:
        pts = self.target_points(straddle)
        return sum(k in self.good for k in pts) / len(pts) if pts else 1.0

    def missing(self, straddle: bool = True) -> list[tuple[Fraction, Fraction]]:
        return [k for k in self.target_points(straddle) if k not in self.good]

    def reached(self, p1, p2) -> bool:
        return ExponentPair.of(p1, p2).key in self.good

    def rows(self) -> list[tuple]:
        out = []
        for (r1, r2), q in sorted(self.good.items()):
            p1, p2 = q.p1, q.p2
            n1, d1 = (1, 0) if p1 is INF else (p1.numerator, p1.denominator)
            n2, d2 = (1, 0) if p2 is INF else (p2.numerator, p2.denominator)
            out.append((n1, d1, n2, d2, q.tag, q.step))
        return out


def _hull(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Integer convex hull, counter-clockwise, by the monotone chain."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for q in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], q) <= 0:
            lower.pop()
        lower.append(q)
    upper: list = []
    for q in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], q) <= 0:
            upper.pop()
        upper.append(q)
    return lower[:-1] + upper[:-1]


def _in_hull(hull: list[tuple[int, int]], A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Exact integer test for lattice points in the closed hull."""
    if len(hull) == 1:
        return (A == hull[0][0]) & (B == hull[0][1])
    if len(hull) == 2:
        (x0, y0), (x1, y1) = hull
        cr = (x1 - x0) * (B - y0) - (y1 - y0) * (A - x0)
        dot = (A - x0) * (x1 - x0) + (B - y0) * (y1 - y0)
        return (cr == 0) & (dot >= 0) & (dot <= (x1 - x0) ** 2 + (y1 - y0) ** 2)
    ok = np.ones(A.shape, bool)
    for (x0, y0), (x1, y1) in zip(hull, hull[1:] + hull[:1]):
        ok &= (x1 - x0) * (B - y0) - (y1 - y0) * (A - x0) >= 0
    return ok


def closure_search(N: int, refine: int = 1, max_rounds: int = 64,
                   seeds: Iterable[ExponentPair] | None = None,
                   rule: str = "grid") -> ClosureReport:
    """Close the seed set under duality and interpolation on a finite lattice.

    The working lattice is ``(1/(N·refine))ℤ^2``; ``∞`` is the reciprocal
    ``0``.  ``rule="grid"`` interpolates pairs with ``θ ∈ (1/N)ℤ`` and
    drops outputs off the lattice.  ``rule="hull"`` allows every rational
    ``θ``: iterated interpolation then fills the convex hull, and all
    lattice points of the hull inside the bound region are added.
    Both variants terminate because the lattice is finite.
    """
    if rule not in ("grid", "hull"):
        raise ValueError("rule must be 'grid' or 'hull'")
    D = N * refine
    good: dict = {}
    for q in (seeds if seeds is not None else seed_lattice(N)):
        if (q.r1 * D).denominator == 1 and (q.r2 * D).denominator == 1:
            good.setdefault(q.key, q)
    ax = np.arange(D + 1, dtype=np.int64)
    GA, GB = (v.ravel() for v in np.meshgrid(ax, ax, indexing="ij"))
    region = (GA < D) & (GB < D) & (GA + GB > 0) & (2 * (GA + GB) < 3 * D)
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        new: dict = {}
        ints = {(int(r1 * D), int(r2 * D)) for r1, r2 in good}
        for a, b in ints:
            if 0 < a < D and 0 < b < D and a + b <= D:
                for a2, b2 in ((a, D - a - b), (D - a - b, b)):
                    k = (Fraction(a2, D), Fraction(b2, D))
                    if k not in good and k not in new:
                        new[k] = ExponentPair(k[0], k[1], "derived_dual", rounds)
        if rule == "grid":
            pts = sorted(ints)
            for i, (a, b) in enumerate(pts):
                for (c, d) in pts[i + 1:]:
                    for t in range(1, N):
                        x = t * a + (N - t) * c
                        y = t * b + (N - t) * d
                        if x % N or y % N:
                            continue
                        k = (Fraction(x // N, D), Fraction(y // N, D))
                        if k not in good and k not in new:
                            new[k] = ExponentPair(k[0], k[1], "derived_interp", rounds)
        else:
            hull = _hull(sorted(ints | {(int(r1 * D), int(r2 * D)) for r1, r2 in new}))
            ins = _in_hull(hull, GA, GB) & region
            for a, b in zip(GA[ins].tolist(), GB[ins].tolist()):
                k = (Fraction(a, D), Fraction(b, D))
                if k not in good and k not in new:
                    new[k] = ExponentPair(k[0], k[1], "derived_interp", rounds)
        if not new:
            break
        good.update(new)
    return ClosureReport(N, refine, good, rounds)
