"""Maximal functions, exceptional sets and weak-type bookkeeping.

All suprema run over intervals whose endpoints are sample points, so
``M`` here is the exact maximal function of the sampled data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .function_core import SampledFunction, lp_norm
from .tile_geometry import Interval, Tile

__all__ = [
    "MaximalProfile",
    "WeightedNorm",
    "hl_maximal",
    "p_maximal",
    "maximal_profile",
    "exceptional_set",
    "superlevel_intervals",
    "expanded_exceptional_measure",
    "sharp_maximal",
    "bmo_norm",
    "fefferman_stein_ratio",
    "smoothstep_cutoff",
    "theta_dualizer",
    "normalize_dualizer",
    "weighted_norm",
    "tile_sum",
    "tail_estimate_check",
]


@dataclass(frozen=True)
class MaximalProfile:
    base: SampledFunction
    p: float
    values: SampledFunction


@dataclass(frozen=True)
class WeightedNorm:
    J: Interval
    m: int

    def weight(self, x) -> np.ndarray:
        return (1.0 + self.J.distance(x)) ** self.m


def _maximal_exact(a: np.ndarray) -> np.ndarray:
    """``max`` over all windows ``[i, j]`` containing each index of the window mean."""
    n = a.size
    S = np.concatenate([[0.0], np.cumsum(a)])
    out = np.zeros(n)
    for i in range(n):
        j = np.arange(i, n)
        avg = (S[j + 1] - S[i]) / (j - i + 1)
        suf = np.maximum.accumulate(avg[::-1])[::-1]
        np.maximum(out[i:], suf, out=out[i:])
    return out


def _maximal_dyadic(a: np.ndarray) -> np.ndarray:
    """Supremum over dyadic blocks and their half-shifts, O(N log N)."""
    n = a.size
    out = a.copy()
    S = np.concatenate([[0.0], np.cumsum(a)])
    size = 1
    while size <= n:
        for shift in (0, size // 2) if size > 1 else (0,):
            starts = np.arange(-shift, n, size)
            lo = np.clip(starts, 0, n)
            hi = np.clip(starts + size, 0, n)
            keep = hi > lo
            lo, hi = lo[keep], hi[keep]
            avg = (S[hi] - S[lo]) / (hi - lo)
            blk = np.repeat(avg, hi - lo)
            np.maximum(out, blk, out=out)
        size *= 2
    return out


def hl_maximal(f: SampledFunction, dyadic: bool = False) -> SampledFunction:
    """Hardy–Littlewood maximal function of ``|f|`` over sample-aligned intervals.

    The exact version is O(N^2); ``dyadic=True`` restricts to dyadic
    blocks and their half-shifts, which is within a factor 4 of exact.
    """
    a = np.abs(f.samples).astype(float)
    vals = _maximal_dyadic(a) if dyadic else _maximal_exact(a)
    return f.like(vals)


def p_maximal(f: SampledFunction, p: float, dyadic: bool = False) -> SampledFunction:
    """``M_p f = (M |f|^p)^{1/p}``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    g = f.like(np.abs(f.samples) ** p)
    return f.like(hl_maximal(g, dyadic).samples ** (1.0 / p))


def maximal_profile(f: SampledFunction, p: float, dyadic: bool = False) -> MaximalProfile:
    """``M_p(Mf)``."""
    return MaximalProfile(f, p, p_maximal(hl_maximal(f, dyadic), p, dyadic))


def superlevel_intervals(f: SampledFunction, mask: np.ndarray) -> list[Interval]:
    """Maximal runs of ``True`` samples as half-open intervals ``[x_a, x_b + dx)``."""
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return []
    d = np.diff(np.concatenate([[0], m.astype(int), [0]]))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    x = f.x
    return [Interval(x[s], x[e - 1] + f.dx) for s, e in zip(starts, ends)]


def exceptional_set(fs: Sequence[SampledFunction | None], ps: Sequence[float],
                    lambda0: float, dyadic: bool = False,
                    require_normalized: bool = True) -> tuple[list[Interval], float]:
    """``{x : max_i M_{p_i}(M f_i)(x) >= λ0}`` as intervals, with its measure.

    ``None`` entries of ``fs`` are skipped, so the two-function version
    is ``exceptional_set([f1, f2, None], ...)``.
    """
    prof = None
    ref = None
    for f, p in zip(fs, ps):
        if f is None:
            continue
        if require_normalized and abs(lp_norm(f, p) - 1.0) > 1e-6:
            raise ValueError("inputs must be normalized in their L^p norms")
        v = maximal_profile(f, p, dyadic).values.samples
        prof = v if prof is None else np.maximum(prof, v)
        ref = f
    if ref is None:
        raise ValueError("no input functions")
    mask = prof >= lambda0
    ivs = superlevel_intervals(ref, mask)
    return ivs, float(mask.sum() * ref.dx)


def expanded_exceptional_measure(E0: Sequence[Interval], grid: Iterable[Interval],
                                 x: np.ndarray, dx: float) -> tuple[float, float]:
    """``|E'|`` and ``|E_0|`` for ``E' = E_0 ∪ ⋃ {4J : J ⊂ E_0}``, on a sample grid."""
    inE0 = np.zeros(x.size, bool)
    for iv in E0:
        inE0 |= iv.contains_point(x)
    inE = inE0.copy()
    for J in grid:
        if any(iv.contains(J) for iv in E0):
            inE |= J.dilate(4.0).contains_point(x)
    return float(inE.sum() * dx), float(inE0.sum() * dx)


def _grid_masks(g: SampledFunction, grid: Iterable[Interval]):
    x = g.x
    for J in grid:
        m = J.contains_point(x)
        if m.any():
            yield J, m


def sharp_maximal(g: SampledFunction, grid: Iterable[Interval]) -> SampledFunction:
    """``g^♯(x) = sup_{J ∋ x} |J|^{-1}∫_J |g - g_J|`` over the grid."""
    out = np.zeros(g.n)
    s = g.samples
    for J, m in _grid_masks(g, grid):
        v = s[m]
        osc = np.mean(np.abs(v - v.mean()))
        out[m] = np.maximum(out[m], osc)
    return g.like(out)


def bmo_norm(g: SampledFunction, grid: Iterable[Interval]) -> float:
    best = 0.0
    for J, m in _grid_masks(g, grid):
        v = g.samples[m]
        best = max(best, float(np.mean(np.abs(v - v.mean()))))
    return best


def fefferman_stein_ratio(g: SampledFunction, grid: Iterable[Interval], q: float) -> float:
    """``||g||_q / ||g^♯||_q``."""
    sh = lp_norm(sharp_maximal(g, grid), q)
    return lp_norm(g, q) / sh if sh > 0 else float("inf")


def smoothstep_cutoff(r, delta: float) -> np.ndarray:
    """Smooth radial cutoff: 0 on ``[0, 1-δ]``, 1 on ``[1, ∞)``, cubic smoothstep between."""
    r = np.asarray(r, dtype=float)
    u = np.clip((r - (1.0 - delta)) / delta, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def theta_dualizer(h: SampledFunction, delta: float) -> SampledFunction:
    """Pointwise ``θ(h) = θ(|h|)·e^{-i arg h}``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    s = np.asarray(h.samples, dtype=complex)
    r = np.abs(s)
    ph = np.divide(np.conj(s), r, out=np.zeros_like(s), where=r > 0)
    return h.like(smoothstep_cutoff(r, delta) * ph)


def normalize_dualizer(d: SampledFunction, p3: float) -> SampledFunction:
    nrm = lp_norm(d, p3)
    if nrm == 0:
        raise ValueError("dualizer has zero norm")
    return d.like(d.samples / nrm)


def weighted_norm(f: SampledFunction, J: Interval, m: int, r: float,
                  inverse: bool = False) -> float:
    """``(∫ |f|^r w_m^{±1})^{1/r}`` with ``w_m = (1 + dist(x, J))^m``."""
    if r < 1 or m < 0:
        raise ValueError("need r >= 1 and m >= 0")
    w = WeightedNorm(J, m).weight(f.x)
    if inverse:
        w = 1.0 / w
    return float((np.sum(np.abs(f.samples) ** r * w) * f.dx) ** (1.0 / r))


def tile_sum(tiles: Sequence[Tile], f1: SampledFunction, f2: SampledFunction,
             signs: Sequence[float] | None = None) -> SampledFunction:
    """``Σ ε(s)|I(s)|^{-1/2} <f1, φ_1(s)><f2, φ_2(s)> φ_3(s)`` on the grid of ``f1``."""
    from .function_core import inner
    acc = np.zeros(f1.n, complex)
    for r, s in enumerate(tiles):
        e = 1.0 if signs is None else signs[r]
        p1, p2, p3 = s.packets
        c1 = inner(f1, p1.sample(f1))
        c2 = inner(f2, p2.sample(f2))
        acc += e * s.I.length ** -0.5 * c1 * c2 * p3(f1.x)
    return f1.like(acc)


def tail_estimate_check(tiles: Sequence[Tile], f1: SampledFunction, f2: SampledFunction,
                        A_values: Sequence[float], p1: float, p2: float,
                        C_m: float = 1.0, m: float = 2.0, dyadic: bool = False) -> dict:
    """Tail of the single-interval tile sum outside ``AJ`` against its bound.

    The bound is ``C_m |J| A^{-m} (inf_J M_{p1} f1)(inf_J M_{p2} f2)``.
    Returns the ratios, and the fitted decay exponent of the left side
    in ``A`` (``inf`` when the tail vanishes at the sampling floor).
    ``dyadic=True`` uses the dyadic maximal shortcut for the infima.
    """
    if not tiles:
        return {"ratios": [0.0] * len(A_values), "exponent": float("inf"), "lhs": [0.0] * len(A_values)}
    J = tiles[0].I
    if not all(s.I.same(J) for s in tiles):
        raise ValueError("all tiles must share the same time interval")
    H = tile_sum(tiles, f1, f2)
    x = f1.x
    inJ = J.contains_point(x)
    m1 = p_maximal(f1, p1, dyadic).samples[inJ].min()
    m2 = p_maximal(f2, p2, dyadic).samples[inJ].min()
    lhs, ratios = [], []
    for A in A_values:
        out = ~J.dilate(A).contains_point(x)
        v = float(np.sum(np.abs(H.samples[out])) * f1.dx)
        rhs = C_m * J.length * A ** -m * m1 * m2
        lhs.append(v)
        ratios.append(v / rhs if rhs > 0 else float("inf"))
    A = np.asarray(A_values, float)
    L = np.asarray(lhs)
    pos = L > 0
    if pos.sum() >= 2:
        expo = -float(np.polyfit(np.log(A[pos]), np.log(L[pos]), 1)[0])
    else:
        expo = float("inf")
    return {"ratios": ratios, "lhs": lhs, "exponent": expo}
