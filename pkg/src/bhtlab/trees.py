"""Tree selection, counting functions, and per-tree square-function tools.

Tiles used here carry cached coefficients ``s.coeffs = (c1, c2, c3)``
with ``c_j = <f_j, φ_j(s)>``.  Thresholds use ``p'_j`` in both the
selection and the stopping bounds, so the residual bounds follow from the
selection exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .function_core import SampledFunction, inner, lp_norm
from .maximal import bmo_norm
from .tile_geometry import Interval, Tile, Tree, rect_leq, freq_not_prec, rho

__all__ = [
    "SelectionParams",
    "Forest",
    "SelectionResult",
    "CountingFunction",
    "eta_param",
    "square_function_l1",
    "select_trees",
    "audit_replay",
    "vacuity_holds",
    "calibrate_lambda0",
    "residual_bounds_check",
    "residual_sweep",
    "trilinear_form",
    "counting_function",
    "superlevel_measure",
    "layer_select",
    "separate_families",
    "tile_coefficient",
    "tree_square_function",
    "tree_cz_decompose",
    "walsh_family",
    "khinchine_lower",
    "khinchine_average",
    "tree_l2_from_l1",
    "classify_tree",
    "tree_count_scaling",
    "synthetic_instance",
    "forest_to_text",
]


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


def eta_param(p1, p2, p3, prefactor=1) -> Fraction:
    """Largest ``η`` with ``1/η`` integer and ``η <= pref·(2 - Σ1/p_i)·min_j(1 - 1/p_j)``."""
    ps = [_frac(p) for p in (p1, p2, p3)]
    if any(not (1 < p < 2) for p in ps):
        raise ValueError("exponents must lie in (1, 2)")
    s = sum(1 / p for p in ps)
    if not (1 < s < 2):
        raise ValueError("need 1 < 1/p1 + 1/p2 + 1/p3 < 2")
    bound = _frac(prefactor) * (2 - s) * min(1 - 1 / p for p in ps)
    inv = bound.denominator // bound.numerator + (bound.denominator % bound.numerator != 0)
    return Fraction(1, inv)


@dataclass(frozen=True)
class SelectionParams:
    p: tuple
    eta: Fraction
    eta_prefactor: Fraction = Fraction(1)
    lambda0: float | None = None
    mode: str = "desk"

    @classmethod
    def build(cls, p1, p2, p3, eta_prefactor=1, lambda0=None, mode="desk"):
        if mode not in ("desk", "paper"):
            raise ValueError("mode must be 'paper' or 'desk'")
        pref = Fraction(1, 2 ** 100) if mode == "paper" and eta_prefactor == 1 else _frac(eta_prefactor)
        ps = tuple(_frac(p) for p in (p1, p2, p3))
        return cls(ps, eta_param(*ps, prefactor=pref), pref, lambda0, mode)

    def pprime(self, j: int) -> Fraction:
        p = self.p[j - 1]
        return p / (p - 1)

    @property
    def k_vacuous(self) -> int:
        """``η^{-2}``."""
        return int(1 / self.eta ** 2)

    def rate35(self, j: int) -> Fraction:
        return self.eta + 1 / self.pprime(j)

    def thr35(self, k: int, j: int) -> float:
        """``2^{-ηk} 2^{-k/p'_j}``."""
        return 2.0 ** (-float(self.rate35(j) * k))

    def thr36(self, k: int, j: int) -> float:
        """``2^4 2^{-k/p'_j}``."""
        return 16.0 * 2.0 ** (-float(Fraction(k) / self.pprime(j)))

    def require_desk(self):
        if self.mode != "desk":
            raise ValueError("tree selection is only executable in desk mode")


@dataclass
class Forest:
    trees: list
    k: int
    iota: int
    j: int
    b: float


@dataclass
class SelectionResult:
    forests: dict
    strata: list
    remaining: tuple
    audit: list
    params: SelectionParams

    def trees(self) -> list[Tree]:
        out = []
        for key in sorted(self.forests):
            out.extend(self.forests[key].trees)
        return out

    def first_k(self) -> int | None:
        ks = [k for (k, _, _), f in self.forests.items() if f.trees]
        return min(ks) if ks else None


@dataclass(frozen=True)
class CountingFunction:
    intervals: tuple
    values: SampledFunction


def _coef(s: Tile, j: int) -> complex:
    if s.coeffs is None:
        raise ValueError(f"tile {s.tid} is missing coefficient data")
    return s.coeffs[j - 1]


def square_function_l1(tiles: Sequence[Tile], j: int, coeffs: Sequence[complex] | None = None) -> float:
    """Exact ``||(Σ |c_j(s)|^2/|I(s)| 1_{I(s)})^{1/2}||_1`` for piecewise-constant data."""
    if not tiles:
        return 0.0
    cs = coeffs if coeffs is not None else [_coef(s, j) for s in tiles]
    lefts = np.array([s.I.left for s in tiles])
    rights = np.array([s.I.right for s in tiles])
    w = np.abs(np.asarray(cs, complex)) ** 2 / (rights - lefts)
    pts = np.unique(np.concatenate([lefts, rights]))
    mids = 0.5 * (pts[:-1] + pts[1:])
    inside = (lefts[None, :] <= mids[:, None]) & (mids[:, None] < rights[None, :])
    dens = np.sqrt(inside.astype(float) @ w)
    return math.fsum(dens * np.diff(pts))


class _Pool:
    """Precomputed ``≪`` relations for the three rectangle types."""

    def __init__(self, tiles: Sequence[Tile]):
        self.tiles = list(tiles)
        n = len(self.tiles)
        self.leq = {}
        for iota in (1, 2, 3):
            r = [rho(s, iota) for s in self.tiles]
            m = np.zeros((n, n), bool)
            for a in range(n):
                for b in range(n):
                    m[a, b] = rect_leq(r[a], r[b])
            self.leq[iota] = m
        self.absc = np.array([[abs(_coef(s, j)) for j in (1, 2, 3)] for s in self.tiles]) if n else np.zeros((0, 3))
        self.ilen = np.array([s.I.length for s in self.tiles])


def _maximal_idx(cand: np.ndarray, leq: np.ndarray) -> list[int]:
    """Indices of candidates whose rectangle is not strictly below another candidate's."""
    idx = np.flatnonzero(cand)
    out = []
    for a in idx:
        strictly_below = leq[a, idx] & ~leq[idx, a]
        if not strictly_below.any():
            out.append(int(a))
    return out


def _cell_candidates(P: _Pool, pool: np.ndarray, k: int, iota: int, j: int,
                     prm: SelectionParams) -> list[tuple[int, np.ndarray, float, float]]:
    """Maximal admissible convex trees as ``(base, members, value, threshold)``."""
    leq = P.leq[iota]
    if iota == j:
        thr = prm.thr35(k, j)
        good = pool & (P.absc[:, j - 1] >= thr * np.sqrt(P.ilen))
        out = []
        bases = _maximal_idx(good, leq)
        seen = set()
        for b in bases:
            members = good & leq[:, b]
            key = members.tobytes()
            if key in seen:
                continue
            seen.add(key)
            ratio = float(np.min(P.absc[members, j - 1] / np.sqrt(P.ilen[members])))
            out.append((b, members, ratio, thr))
        return out
    thr = prm.thr36(k, j)
    fam = []
    for b in np.flatnonzero(pool):
        members = pool & leq[:, b]
        tiles = [P.tiles[i] for i in np.flatnonzero(members)]
        val = square_function_l1(tiles, j) / P.ilen[b]
        if val >= thr:
            fam.append((int(b), members, val, thr))
    out, seen = [], set()
    for b, m, v, t in fam:
        key = m.tobytes()
        if key in seen:
            continue
        if any((m2 & ~m).any() and not (m & ~m2).any() for _, m2, _, _ in fam):
            continue
        seen.add(key)
        out.append((b, m, v, t))
    return out


def _choose(P: _Pool, cands, iota: int, j: int) -> tuple:
    """Frequency-edge tie-break, then larger ``|J_T|``, then leftmost ``J_T``."""
    def om(c):
        return P.tiles[c[0]].omega[iota - 1]

    def J(c):
        return P.tiles[c[0]].I

    if iota < j:
        key = lambda c: (-om(c).right, -J(c).length, J(c).left, c[0])
    elif iota > j:
        key = lambda c: (om(c).left, -J(c).length, J(c).left, c[0])
    else:
        key = lambda c: (-J(c).length, J(c).left, c[0])
    best = min(cands, key=key)
    for c in cands:
        if iota < j and not freq_not_prec(om(best), om(c)):
            raise AssertionError("frequency tie-break violated")
        if iota > j and not freq_not_prec(om(c), om(best)):
            raise AssertionError("frequency tie-break violated")
    return best


def _next_event(P: _Pool, pool: np.ndarray, k: int, prm: SelectionParams) -> int | None:
    """Smallest ``k' >= k`` at which some cell can select a tree from ``pool``."""
    best = None

    def fires35(kk, j, idx):
        return P.absc[idx, j - 1] >= prm.thr35(kk, j) * math.sqrt(P.ilen[idx])

    def fires36(kk, j, val):
        return val >= prm.thr36(kk, j)

    def settle(kk, pred):
        kk = max(kk, k)
        while not pred(kk):
            kk += 1
        while kk > k and pred(kk - 1):
            kk -= 1
        return kk

    for j in (1, 2, 3):
        rate = float(prm.rate35(j))
        for i in np.flatnonzero(pool):
            c = P.absc[i, j - 1]
            if c == 0:
                continue
            r = math.log2(math.sqrt(P.ilen[i]) / c) / rate
            kk = settle(max(0, math.ceil(r)), lambda q, i=i, j=j: fires35(q, j, i))
            best = kk if best is None else min(best, kk)
    for iota in (1, 2, 3):
        leq = P.leq[iota]
        for b in np.flatnonzero(pool):
            members = pool & leq[:, b]
            tiles = [P.tiles[i] for i in np.flatnonzero(members)]
            for j in (1, 2, 3):
                if j == iota:
                    continue
                val = square_function_l1(tiles, j) / P.ilen[b]
                if val == 0:
                    continue
                pp = float(prm.pprime(j))
                r = pp * math.log2(16.0 / val)
                kk = settle(max(0, math.ceil(r)), lambda q, v=val, j=j: fires36(q, j, v))
                best = kk if best is None else min(best, kk)
    return best


def select_trees(tiles: Sequence[Tile], prm: SelectionParams,
                 k_max: int | None = None) -> SelectionResult:
    """Run the selection recursion to exhaustion.

    For each ``k``, each ``(ι, j)`` cell (``ι`` outer, ``j`` inner) draws
    trees from ``S_{k-1}`` minus the trees already chosen in that cell.
    Values of ``k`` at which no cell can fire leave ``S_k = S_{k-1}`` and
    are skipped.
    """
    prm.require_desk()
    P = _Pool(tiles)
    n = len(P.tiles)
    pool = np.ones(n, bool)
    forests: dict = {}
    strata = []
    audit = []
    k = 0
    tree_id = 0
    while pool.any():
        ev = _next_event(P, pool, k, prm)
        if ev is None or (k_max is not None and ev > k_max):
            break
        k = ev
        removed = np.zeros(n, bool)
        for iota in (1, 2, 3):
            for j in (1, 2, 3):
                cell_pool = pool.copy()
                trees = []
                l = 0
                while True:
                    cands = _cell_candidates(P, cell_pool, k, iota, j, prm)
                    if not cands:
                        break
                    b, members, val, thr = _choose(P, cands, iota, j)
                    ids = np.flatnonzero(members)
                    T = Tree(tuple(P.tiles[i] for i in ids), iota, P.tiles[b],
                             meta={"k": k, "j": j, "l": l, "id": tree_id,
                                   "condition": "35" if iota == j else "36",
                                   "threshold": thr, "value": val})
                    trees.append(T)
                    audit.append((k, iota, j, l, tree_id, T.meta["condition"], thr, val))
                    cell_pool &= ~members
                    removed |= members
                    l += 1
                    tree_id += 1
                b_val = prm.thr35(k, j) if iota == j else 2.0 ** (-float(Fraction(k) / prm.pprime(j)))
                forests[(k, iota, j)] = Forest(trees, k, iota, j, b_val)
        pool &= ~removed
        strata.append((k, tuple(P.tiles[i].tid for i in np.flatnonzero(pool))))
        k += 1
    remaining = tuple(P.tiles[i] for i in np.flatnonzero(pool))
    return SelectionResult(forests, strata, remaining, audit, prm)


def audit_replay(tiles: Sequence[Tile], res: SelectionResult) -> bool:
    """Recompute every recorded decision from the stratification; True iff identical."""
    by_tid = {s.tid: s for s in tiles}
    prev = tuple(s.tid for s in tiles)
    P = _Pool(tiles)
    pos = {s.tid: i for i, s in enumerate(P.tiles)}
    for k, rest in res.strata:
        base_pool = np.zeros(len(tiles), bool)
        base_pool[[pos[t] for t in prev]] = True
        for iota in (1, 2, 3):
            for j in (1, 2, 3):
                cell_pool = base_pool.copy()
                for T in res.forests[(k, iota, j)].trees:
                    cands = _cell_candidates(P, cell_pool, k, iota, j, res.params)
                    if not cands:
                        return False
                    b, members, val, thr = _choose(P, cands, iota, j)
                    ids = {P.tiles[i].tid for i in np.flatnonzero(members)}
                    if ids != {s.tid for s in T.tiles} or val != T.meta["value"] or thr != T.meta["threshold"]:
                        return False
                    cell_pool &= ~members
                if _cell_candidates(P, cell_pool, k, iota, j, res.params):
                    return False
        prev = rest
    del by_tid
    return True


def vacuity_holds(tiles: Sequence[Tile], prm: SelectionParams) -> bool:
    """No tree can be selected at any ``k <= η^{-2}``.

    Thresholds decrease in ``k``, so it suffices to test the full pool at
    ``k = η^{-2}``.
    """
    if not tiles:
        return True
    P = _Pool(tiles)
    pool = np.ones(len(P.tiles), bool)
    K = prm.k_vacuous
    return not any(_cell_candidates(P, pool, K, i, j, prm)
                   for i in (1, 2, 3) for j in (1, 2, 3))


def calibrate_lambda0(tiles: Sequence[Tile], profile: Sequence[float],
                      prm: SelectionParams) -> tuple[float, list[Tile]]:
    """Largest ``λ0`` for which the tiles with ``profile < λ0`` are vacuous.

    ``profile[r]`` is ``inf_{I(s_r)} max_i M_{p_i}(M f_i)``; a tile is
    discarded when ``I(s) ⊂ E``, i.e. when its profile is ``>= λ0``.
    Returns ``λ0`` and the kept tiles.
    """
    order = np.argsort(profile, kind="stable")
    vals = np.asarray(profile, float)[order]
    lo, hi = 0, len(order)
    if vacuity_holds([tiles[i] for i in order], prm):
        return float("inf"), list(tiles)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if vacuity_holds([tiles[i] for i in order[:mid]], prm):
            lo = mid
        else:
            hi = mid
    lam = float(vals[lo])
    kept = [tiles[i] for i in range(len(tiles)) if profile[i] < lam]
    return lam, kept


def residual_bounds_check(S_k: Sequence[Tile], k: int, prm: SelectionParams) -> list[tuple]:
    """Violations of the stopping bounds on ``S_k``.

    Checks the coefficient bound for every tile and index, and the
    square-function bound for every convex tree rooted at any tile of
    ``S_k``; any tree of ``S_k`` lies inside one of these with the same
    base and the bound is monotone in the tree.
    """
    out = []
    if not S_k:
        return out
    P = _Pool(S_k)
    for r, s in enumerate(P.tiles):
        for i in (1, 2, 3):
            if not P.absc[r, i - 1] <= prm.thr35(k, i) * math.sqrt(P.ilen[r]):
                out.append(("40", s.tid, i))
    pool = np.ones(len(P.tiles), bool)
    for iota in (1, 2, 3):
        for b in range(len(P.tiles)):
            members = [P.tiles[i] for i in np.flatnonzero(P.leq[iota][:, b])]
            for j in (1, 2, 3):
                if j == iota:
                    continue
                v = square_function_l1(members, j)
                if not v <= prm.thr36(k, j) * P.ilen[b]:
                    out.append(("41", P.tiles[b].tid, iota, j))
    del pool
    return out


def residual_sweep(tiles: Sequence[Tile], res: SelectionResult) -> list[tuple]:
    """Run :func:`residual_bounds_check` at every ``k`` where the bound is tightest.

    Between selection events ``S_k`` is constant and the bounds shrink
    with ``k``, so each stratum is checked at the last ``k`` it survives.
    """
    by = {s.tid: s for s in tiles}
    out = []
    ks = [k for k, _ in res.strata]
    prev = [s.tid for s in tiles]
    if ks and ks[0] > 0:
        out += [(ks[0] - 1,) + v for v in residual_bounds_check([by[t] for t in prev], ks[0] - 1, res.params)]
    for r, (k, rest) in enumerate(res.strata):
        last = ks[r + 1] - 1 if r + 1 < len(ks) else k
        S = [by[t] for t in rest]
        out += [(k,) + v for v in residual_bounds_check(S, k, res.params)]
        if last != k:
            out += [(last,) + v for v in residual_bounds_check(S, last, res.params)]
    return out


def _merge(E: Iterable[Interval]) -> list[tuple[float, float]]:
    ivs = sorted((iv.left, iv.right) for iv in E)
    out: list[list[float]] = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def trilinear_form(tiles: Sequence[Tile], E: Iterable[Interval] = ()) -> float:
    """``Σ_{I(s) ⊄ E} |I(s)|^{-1/2} |c1 c2 c3|``."""
    comps = _merge(E)
    terms = []
    for s in tiles:
        inside = any(a <= s.I.left and s.I.right <= b for a, b in comps)
        if not inside:
            c = [abs(_coef(s, j)) for j in (1, 2, 3)]
            terms.append(s.I.length ** -0.5 * c[0] * c[1] * c[2])
    return math.fsum(terms)


def _elementary(intervals: Sequence[Interval]):
    if not intervals:
        return np.zeros(0), np.zeros((0, 0), bool)
    pts = np.unique(np.concatenate([[iv.left for iv in intervals], [iv.right for iv in intervals]]))
    mids = 0.5 * (pts[:-1] + pts[1:])
    L = np.array([iv.left for iv in intervals])
    R = np.array([iv.right for iv in intervals])
    inside = (L[None, :] <= mids[:, None]) & (mids[:, None] < R[None, :])
    return pts, inside


def counting_function(intervals: Sequence[Interval], template: SampledFunction) -> CountingFunction:
    """``N(x) = #{T : x ∈ J_T}`` on the sample grid of ``template``."""
    x = template.x
    vals = np.zeros(x.size, dtype=np.int64)
    for iv in intervals:
        vals += iv.contains_point(x)
    return CountingFunction(tuple(intervals), template.like(vals.astype(float)))


def superlevel_measure(intervals: Sequence[Interval], lam: float) -> float:
    """Exact ``|{N >= λ}|`` from the interval endpoints."""
    pts, inside = _elementary(list(intervals))
    if pts.size == 0:
        return 0.0
    N = inside.sum(axis=1)
    return math.fsum(np.diff(pts)[N >= lam])


def layer_select(intervals: Sequence[Interval], lam: int) -> list[int]:
    """Indices of a sub-family with the same ``λ``-superlevel set and ``||N||_∞ <= λ``.

    Intervals are processed by decreasing length, then left endpoint; one
    is kept iff it does not push the kept count above ``λ``.  Both
    postconditions are asserted on the elementary segments.
    """
    ivs = list(intervals)
    pts, inside = _elementary(ivs)
    if pts.size == 0:
        return []
    order = sorted(range(len(ivs)), key=lambda r: (-ivs[r].length, ivs[r].left, r))
    kept = np.zeros(len(pts) - 1, dtype=np.int64)
    keep = []
    for r in order:
        col = inside[:, r]
        if (kept[col] + 1).max(initial=0) <= lam:
            kept[col] += 1
            keep.append(r)
    full = inside.sum(axis=1)
    if not np.array_equal(full >= lam, kept >= lam) or kept.max(initial=0) > lam:
        raise RuntimeError("layer selection postconditions failed; the family is not a grid")
    return sorted(keep)


def separate_families(forest: Sequence[Tree], A: float, max_classes: int | None = None):
    """Greedy coloring of bases by conflicts of ``A J_T × ω_ι(s_T)``.

    Returns ``(classes, leftover, ratio)`` with ``ratio = Σ_{leftover}|J_T| /
    Σ_{class 1}|J_T|``.
    """
    if A <= 1:
        raise ValueError("need A > 1")
    cap = int(max_classes if max_classes is not None else min(A ** 10, 10 ** 6))
    order = sorted(range(len(forest)), key=lambda r: (-forest[r].J.length, forest[r].J.left, r))
    boxes = []
    for T in forest:
        w = T.base.omega[T.iota - 1]
        boxes.append((T.J.dilate(A), w))
    classes: list[list[int]] = []
    leftover: list[int] = []
    for r in order:
        placed = False
        for cl in classes:
            if all(not (boxes[r][0].intersects(boxes[q][0]) and boxes[r][1].intersects(boxes[q][1])) for q in cl):
                cl.append(r)
                placed = True
                break
        if not placed:
            if len(classes) < cap:
                classes.append([r])
            else:
                leftover.append(r)
    for cl in classes:
        for a, b in itertools.combinations(cl, 2):
            if boxes[a][0].intersects(boxes[b][0]) and boxes[a][1].intersects(boxes[b][1]):
                raise AssertionError("class is not separated")
    first = math.fsum(forest[r].J.length for r in classes[0]) if classes else 0.0
    left = math.fsum(forest[r].J.length for r in leftover)
    ratio = left / first if first > 0 else 0.0
    return [[forest[r] for r in cl] for cl in classes], [forest[r] for r in leftover], ratio


def tile_coefficient(s: Tile, j: int, f: SampledFunction | None = None) -> complex:
    """``<f, φ_j(s)>`` from the packet when ``f`` is given, else the cached value."""
    if f is None:
        return _coef(s, j)
    if s.packets is None:
        raise ValueError("tile has no packets")
    return inner(f, s.packets[j - 1].sample(f))


def tree_square_function(T: Sequence[Tile], f: SampledFunction | None, j: int,
                         template: SampledFunction | None = None) -> SampledFunction:
    """``(Σ_{s∈T} |<f, φ_j(s)>|^2/|I(s)| 1_{I(s)})^{1/2}`` sampled on a grid."""
    grid = f if f is not None else template
    if grid is None:
        raise ValueError("need f or a template grid")
    acc = np.zeros(grid.n)
    x = grid.x
    for s in T:
        c = tile_coefficient(s, j, f)
        acc += abs(c) ** 2 / s.I.length * s.I.contains_point(x)
    return grid.like(np.sqrt(acc))


def tree_cz_decompose(f: SampledFunction, lam: float, grid: Iterable[Interval],
                      theta_fn: Callable):
    """Grid Calderón–Zygmund decomposition with bad parts orthogonal to ``θ``.

    Interval selection compares exact rational sums of the samples.
    Returns ``(g, [(I_n, b_n, λ_n)])``; asserts ``|λ_n| <= ||f||_{L1(I_n)}/|I_n|``
    and ``Σ|I_n| <= ||f||_1/λ``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    a = np.abs(f.samples)
    pref = [Fraction(0)]
    for v in a:
        pref.append(pref[-1] + Fraction(float(v)))
    x = f.x
    lamF = Fraction(float(lam))
    heavy = []
    for J in grid:
        idx = np.flatnonzero(J.contains_point(x))
        if idx.size == 0 or idx[-1] - idx[0] + 1 != idx.size:
            continue
        S = pref[idx[-1] + 1] - pref[idx[0]]
        if S >= lamF * idx.size:
            heavy.append((J, int(idx[0]), int(idx[-1]) + 1))
    sel = [h for h in heavy if not any(o[0].contains(h[0]) and not o[0].same(h[0]) for o in heavy)]
    uniq = []
    for h in sorted(sel, key=lambda h: (h[1], h[2])):
        if not uniq or h[1] >= uniq[-1][2]:
            uniq.append(h)
    th = np.asarray(theta_fn(x), complex)
    out = []
    bad = np.zeros(f.n, complex)
    tot = pref[-1]
    count = 0
    for J, i0, i1 in uniq:
        seg = slice(i0, i1)
        fl = np.asarray(f.samples[seg], complex)
        tl = th[seg]
        ln = np.sum(fl * np.conj(tl)) / np.sum(np.abs(tl) ** 2)
        b = np.zeros(f.n, complex)
        b[seg] = fl - ln * tl
        bad += b
        l1 = float(np.sum(np.abs(fl)))
        if abs(ln) * (i1 - i0) > l1 * (1 + 1e-12) + 1e-300:
            raise AssertionError("coefficient bound failed")
        out.append((J, f.like(b), complex(ln)))
        count += i1 - i0
    if lamF * count > tot:
        raise AssertionError("total measure bound failed")
    return f.like(f.samples - bad), out


def walsh_family(tiles: Sequence[Tile], template: SampledFunction) -> list[SampledFunction]:
    """Orthonormal ``h_s`` with ``|h_s| = |I(s)|^{-1/2}`` on ``I(s)`` and zero elsewhere.

    ``h_s`` is the Walsh function of index ``t_s 2^D`` on ``I(s)`` with
    ``t_s`` distinct odd integers and ``D`` the depth range of the
    dyadic ``I(s)``.  Restricting to a dyadic subinterval at depth ``d``
    shifts the index right by ``d``, which never matches another index.
    """
    if not tiles:
        return []
    Lmax = max(s.I.length for s in tiles)
    depths = [round(math.log2(Lmax / s.I.length)) for s in tiles]
    for s, d in zip(tiles, depths):
        if not math.isclose(Lmax / s.I.length, 2.0 ** d, rel_tol=1e-12):
            raise ValueError("time intervals must be dyadically related")
    D = max(depths)
    x = template.x
    out = []
    for r, s in enumerate(tiles):
        m = (2 * r + 1) << D
        u = (x - s.I.left) / s.I.length
        inside = s.I.contains_point(x)
        bits = m.bit_length()
        if template.dx * (1 << bits) > s.I.length * (1 + 1e-12):
            raise ValueError("grid too coarse for the Walsh family")
        cell = np.floor(np.clip(u, 0, 1 - 1e-15) * (1 << bits)).astype(np.int64)
        sign = np.ones(x.size)
        for b in range(bits):
            if (m >> b) & 1:
                sign *= 1 - 2 * ((cell >> (bits - 1 - b)) & 1)
        out.append(template.like(np.where(inside, sign, 0.0) / math.sqrt(s.I.length)))
    return out


def khinchine_lower(p: float, complex_coeffs: bool) -> float:
    """Lower Khinchine constant ``A_p`` for Rademacher sums, ``p <= 2``.

    Real case uses the sharp constants; complex coefficients lose ``√2``.
    """
    if not 0 < p <= 2:
        raise ValueError("need 0 < p <= 2")
    p0 = 1.8474
    if p < p0:
        a = 2.0 ** (0.5 - 1.0 / p)
    else:
        a = math.sqrt(2.0) * (math.gamma((p + 1) / 2) / math.sqrt(math.pi)) ** (1.0 / p)
    return a / math.sqrt(2.0) if complex_coeffs else a


def khinchine_average(T: Sequence[Tile], f: SampledFunction | None, j: int, p: float,
                      trials: int, rng, template: SampledFunction | None = None,
                      exact_limit: int = 12) -> dict:
    """Average of ``||Σ ε(s) c_s h_s||_p^p`` against ``∫(Σ|c_s|^2|h_s|^2)^{p/2}``.

    Exact over all sign patterns when ``|T| <= exact_limit``, Monte Carlo
    otherwise.  Returns the average, its standard error, the square
    function integral and the two-sided bracket.
    """
    grid = f if f is not None else template
    hs = walsh_family(T, grid)
    cs = np.array([tile_coefficient(s, j, f) for s in T], complex)
    H = np.array([h.samples for h in hs]) if hs else np.zeros((0, grid.n))
    sq = math.fsum((np.sum(np.abs(cs)[:, None] ** 2 * H ** 2, axis=0) ** (p / 2)) * grid.dx)
    if len(T) <= exact_limit:
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=len(T))))
    else:
        signs = rng.choice((-1.0, 1.0), size=(trials, len(T)))
    vals = []
    for e in signs:
        g = (e * cs) @ H
        vals.append(float(np.sum(np.abs(g) ** p) * grid.dx))
    vals = np.array(vals)
    exact = len(T) <= exact_limit
    se = 0.0 if exact else float(vals.std(ddof=1) / math.sqrt(len(vals)))
    is_complex = bool(np.any(np.abs(cs.imag) > 0))
    lo = khinchine_lower(p, is_complex) ** p * sq
    hi = sq
    avg = float(vals.mean())
    ok = (avg >= lo - 3 * se - 1e-12 * sq) and (avg <= hi + 3 * se + 1e-12 * sq)
    return {"average": avg, "stderr": se, "square": sq, "lower": lo, "upper": hi,
            "exact": exact, "ok": ok}


def tree_l2_from_l1(T: Tree, j: int, f: SampledFunction | None = None,
                    template: SampledFunction | None = None) -> dict:
    """``(Σ|c|^2)^{1/2}`` against ``||square function||_1 |J_T|^{-1/2}``."""
    cs = [tile_coefficient(s, j, f) for s in T.tiles]
    lhs = math.sqrt(math.fsum(abs(c) ** 2 for c in cs))
    rhs = square_function_l1(list(T.tiles), j, cs) * T.J.length ** -0.5
    out = {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0}
    grid = f if f is not None else template
    if grid is not None:
        sf = tree_square_function(T.tiles, f, j, template=grid)
        out["bmo"] = bmo_norm(sf, [s.I for s in T.tiles])
    return out


def classify_tree(T: Tree, k: int, eta) -> dict:
    """The five subsets ``min``, ``fat``, ``boundary``, ``boundary_max``, ``nice``."""
    iota = T.iota
    tiles = list(T.tiles)
    R = [rho(s, iota) for s in tiles]

    def strictly(a, b):
        return rect_leq(R[a], R[b]) and not rect_leq(R[b], R[a])

    n = len(tiles)
    mins = {r for r in range(n) if not any(strictly(q, r) for q in range(n))}
    J = T.J
    fat = {r for r in range(n) if 2.0 ** 5 * 2.0 ** (float(eta) * k) * tiles[r].I.length >= J.length}
    shrunk = J.dilate(1 - 2.0 ** -4)
    bd = {r for r in range(n) if not tiles[r].I.intersects(shrunk)}
    bdmax = {r for r in bd if not any(strictly(r, q) for q in bd)}
    nice = set(range(n)) - mins - fat - bd
    pick = lambda S: [tiles[r] for r in sorted(S)]
    out = {"min": pick(mins), "fat": pick(fat), "boundary": pick(bd),
           "boundary_max": pick(bdmax), "nice": pick(nice)}
    covered = mins | fat | bd | nice
    if covered != set(range(n)) or not bdmax <= bd:
        raise AssertionError("partition audit failed")
    return out


def tree_count_scaling(results: Sequence[SelectionResult], ks: Sequence[int],
                       slack: float = 0.2) -> dict:
    """Rows ``(k, ι, j, Σ_l |J_T|, log2 bound)`` summed over instances, with fitted exponents.

    The exponent is the least-squares slope of ``log2 Σ`` in ``k`` over
    rows with a positive sum; ``nan`` when fewer than two rows qualify.
    """
    if not results:
        return {"rows": [], "fits": {}}
    prm = results[0].params
    rows = []
    fits = {}
    for iota in (1, 2, 3):
        for j in (1, 2, 3):
            pp = prm.pprime(j)
            sums = []
            for k in ks:
                tot = math.fsum(T.J.length for r in results
                                for T in r.forests.get((k, iota, j), Forest([], k, iota, j, 0)).trees)
                rows.append((k, iota, j, tot, float(10 * prm.eta * pp * k + k)))
                sums.append(tot)
            s = np.array(sums)
            pos = s > 0
            if pos.sum() >= 2:
                slope = float(np.polyfit(np.asarray(ks, float)[pos], np.log2(s[pos]), 1)[0])
            else:
                slope = float("nan")
            limit = 1 + float(10 * prm.eta * pp) + slack
            fits[(iota, j)] = {"exponent": slope, "limit": limit,
                               "ok": not (slope > limit)}
    return {"rows": rows, "fits": fits}


def synthetic_instance(rng, n_tiles: int, prm: SelectionParams, depth: int = 3,
                       loud: float = 0.1, window: int = 8) -> tuple[list[Tile], np.ndarray]:
    """Random tiles with dyadic time and triadic frequency intervals.

    ``I`` has length ``4·2^{-d}`` inside ``[0, 16)``; ``ω`` has length
    ``27·3^{-d}`` inside ``[0, 54)`` and ``ω_1, ω_2, ω_3`` are its thirds
    from the left.  Both shrink with ``d``, so deep trees exist under the
    componentwise order.  Quiet coefficients sit at levels
    ``η^{-2} + 1 .. η^{-2} + window``; a ``loud`` fraction sits below
    ``η^{-2}``.  The returned profile is ``max_j |c_j| |I|^{-1/2}``.
    """
    K = prm.k_vacuous
    seen = set()
    tiles = []
    while len(tiles) < n_tiles:
        d = int(rng.integers(0, depth + 1))
        m = int(rng.integers(0, 4 * 2 ** d))
        q = int(rng.integers(0, 2 * 3 ** d))
        if (d, m, q) in seen:
            continue
        seen.add((d, m, q))
        L = 4.0 * 2.0 ** -d
        I = Interval(m * L, (m + 1) * L)
        w = 9.0 * 3.0 ** -d
        om = tuple(Interval((3 * q + r) * w, (3 * q + r + 1) * w) for r in range(3))
        is_loud = rng.random() < loud
        cs = []
        for j in (1, 2, 3):
            kap = int(rng.integers(0, K + 1)) if is_loud else int(rng.integers(K + 1, K + window + 1))
            rate = float(prm.rate35(j))
            u = 2.0 ** (rate * rng.random())
            mag = math.sqrt(L) * 2.0 ** (-rate * kap) * u
            cs.append(mag * np.exp(2j * np.pi * rng.random()))
        tiles.append(Tile(d, m, q, I, om, coeffs=tuple(cs), tid=len(tiles)))
    prof = np.array([max(abs(c) for c in s.coeffs) / math.sqrt(s.I.length) for s in tiles])
    return tiles, prof


def forest_to_text(forest: Forest) -> str:
    """Header ``k iota j b``, then one line per tree: base id, then member ids."""
    lines = [f"{forest.k} {forest.iota} {forest.j} {forest.b!r}"]
    for T in forest.trees:
        lines.append(" ".join([str(T.base.tid)] + [str(s.tid) for s in T.tiles]))
    return "\n".join(lines) + "\n"
