"""Windows, wave packets, model coefficients and tile maps.

The frequency window ``φ̂`` is a Meyer-type bump on ``[-1/2, 1/2]`` whose
half-integer translates satisfy ``Σ_l φ̂(ξ - l/2)^2 = 1``; with unit time
steps this makes ``{φ_{k,n,l/2}}`` a tight frame with bound one.  The scale
window ``ψ̂`` lives on ``[L³-1, L³+1]`` and its ``2^{εk}``-dilates sum to
one on the positive half line.

Packets follow

    φ_{κ,n,l}(x) = 2^{-εκ/2} φ(2^{-εκ}x - n) e^{2πi 2^{-εκ} x l},

so ``φ̂_{κ,n,l}(ξ) = a^{-1/2} φ̂(ξ/a - l) e^{-2πin(ξ/a - l)}`` with
``a = 2^{-εκ}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from shapely import minimum_bounding_radius
from shapely.geometry import MultiPoint, Polygon, box

from .function_core import SampledFunction, inner
from .tile_geometry import Interval, Tile, grid_check

__all__ = [
    "PHI_RADIUS", "PHI_C", "PHI_A", "PSI_C",
    "AlphaParams", "paper_L", "desk_min_L",
    "phi_hat", "PhiWindow", "PsiWindow", "WindowPair",
    "build_phi", "build_psi", "build_windows",
    "Packet", "wave_packet",
    "frame_coefficients", "frame_synthesis", "frame_reconstruct", "frame_matrix",
    "ModelIndex", "coefficient_support_predicate", "support_intervals",
    "integrand_support_nonempty", "coefficient_table", "model_coefficient",
    "coefficient_decay_check", "model_operator_apply", "model_sum_apply",
    "model_sum_box", "default_lambdas", "assign_tiles", "tile_constraints",
    "random_tile_family", "theta", "theta_oscillation_check", "inf_deviation",
]

PHI_RADIUS = 0.5
PHI_C = 1.4
PHI_A = 0.85
PSI_C = 5.0


# ---------------------------------------------------------------- parameters

def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v)


def paper_L(alpha) -> int:
    """Smallest integer larger than ``2^10·max{|α|, 1/|α|, 1/|1+α|}``."""
    a = _frac(alpha)
    if a == 0 or a == -1:
        raise ValueError("alpha must avoid 0 and -1")
    m = 1024 * max(abs(a), 1 / abs(a), 1 / abs(1 + a))
    return math.floor(m) + 1


def desk_min_L(alpha) -> int:
    """Smallest desk ``L >= 4`` for which the coefficient vanishing law holds.

    With ``φ̂`` of radius 1/2 and ``ψ̂`` of radius 1, a nonzero coefficient
    forces ``|l_1 - c_1| < 1 + (|α| + 2)/|1+α|`` and
    ``|l_2 - c_2| < 1 + 3/|1+α|``.
    """
    a = _frac(alpha)
    if a == 0 or a == -1:
        raise ValueError("alpha must avoid 0 and -1")
    need = 1 + max(abs(a) + 2, Fraction(3)) / abs(1 + a)
    return max(4, math.floor(need) + 1)


@dataclass(frozen=True)
class AlphaParams:
    """Parameter ``α`` with its scale ``L`` and ``ε = L^{-3}``.

    ``mode='paper'`` enforces the paper-size ``L`` and is meant for exact
    symbolic checks; ``mode='desk'`` allows small ``L`` (at least
    :func:`desk_min_L`).
    """

    alpha: Fraction
    L: int
    mode: str = "desk"

    def __init__(self, alpha, L: int | None = None, mode: str = "desk"):
        a = _frac(alpha)
        if a == 0 or a == -1:
            raise ValueError("alpha must avoid 0 and -1")
        if mode not in ("paper", "desk"):
            raise ValueError("mode must be 'paper' or 'desk'")
        if mode == "paper":
            need = paper_L(a)
        else:
            need = desk_min_L(a)
        if L is None:
            L = need
        if L < need:
            raise ValueError(f"L={L} is below the {mode}-mode minimum {need}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "L", int(L))
        object.__setattr__(self, "mode", mode)

    @property
    def eps(self) -> Fraction:
        return Fraction(1, self.L ** 3)

    @property
    def af(self) -> float:
        return float(self.alpha)

    def a(self, k: int) -> float:
        """Frequency scale ``2^{-εk}``."""
        return 2.0 ** (-float(self.eps) * k)

    def require_desk(self):
        if self.mode != "desk":
            raise ValueError("paper mode is symbolic only; use desk mode for numerics")


# ------------------------------------------------------------------- windows

def _g(t, c, a):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 0
    out[m] = np.exp(-c / t[m] ** a)
    return out


def phi_hat(xi) -> np.ndarray:
    """``φ̂(ξ) = cos(π/2·h(2|ξ|))`` on ``|ξ| < 1/2`` with a smooth step ``h``.

    ``h(t) + h(1-t) = 1`` gives ``φ̂(ξ)^2 + φ̂(ξ-1/2)^2 = 1`` on ``[0, 1/2]``.
    """
    t = 2.0 * np.abs(np.asarray(xi, dtype=float))
    g0 = _g(t, PHI_C, PHI_A)
    g1 = _g(1.0 - t, PHI_C, PHI_A)
    den = g0 + g1
    h = np.divide(g0, den, out=np.ones_like(t), where=den > 0)
    return np.where(t < 1.0, np.cos(0.5 * np.pi * h), 0.0)


def _bump(u, c=PSI_C):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1.0
    out[m] = np.exp(-c / (1.0 - u[m] ** 2))
    return out


class _Table:
    """Spline table of a smooth real or complex profile."""

    def __init__(self, x, y, cutoff):
        self.cutoff = cutoff
        self.spline = CubicSpline(x, y)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.spline(np.clip(x, -self.cutoff, self.cutoff))
        return np.where(np.abs(x) <= self.cutoff, out, 0.0)


def _profile_table(hat: Callable, center: float, n: int = 1 << 16,
                   dx: float = 1.0 / 256) -> _Table:
    """Inverse Fourier transform of ``hat(ξ + center)`` sampled on a table."""
    T = n * dx
    xi = np.fft.fftfreq(n, dx)
    vals = hat(xi + center)
    y = np.fft.fftshift(np.fft.ifft(vals)) * n / T
    x = (np.arange(n) - n // 2) * dx
    if np.allclose(y.imag, 0.0, atol=1e-15 * np.abs(y).max()):
        y = y.real
    return _Table(x, y, 0.25 * T)


@dataclass
class PhiWindow:
    """The frame window ``φ``."""

    hat: Callable = phi_hat
    radius: float = PHI_RADIUS
    frame_defect: float = float("nan")
    _table: _Table | None = field(default=None, repr=False)

    def values(self, x) -> np.ndarray:
        if self._table is None:
            self._table = _profile_table(self.hat, 0.0)
        return self._table(x)

    def sample(self, f: SampledFunction) -> SampledFunction:
        return f.like(self.values(f.x))


@dataclass
class PsiWindow:
    """The scale window ``ψ`` for a given ``L``."""

    L: int
    c: float = PSI_C
    _table: _Table | None = field(default=None, repr=False)

    @property
    def eps(self) -> float:
        return 1.0 / self.L ** 3

    def hat(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        L3 = float(self.L ** 3)
        eps = self.eps
        out = np.zeros_like(xi)
        num = _bump(xi - L3, self.c)
        m = num > 0
        if not np.any(m):
            return out
        x = xi[m]
        jlo = np.floor(np.log2((L3 - 1.0) / x) / eps) - 1
        jhi = np.ceil(np.log2((L3 + 1.0) / x) / eps) + 1
        span = int(np.max(jhi - jlo))
        den = np.zeros_like(x)
        for off in range(span + 1):
            den += _bump(2.0 ** (eps * (jlo + off)) * x - L3, self.c)
        out[m] = num[m] / den
        return out

    def partition_defect(self, xi) -> float:
        """``max |Σ_k ψ̂(2^{εk}ξ) - 1|`` over the given positive ``ξ``."""
        xi = np.asarray(xi, dtype=float)
        L3 = float(self.L ** 3)
        kmin = int(np.floor(np.log2(xi.min() / (L3 + 1.0)) / self.eps)) - 2
        kmax = int(np.ceil(np.log2(xi.max() / (L3 - 1.0)) / self.eps)) + 2
        acc = np.zeros_like(xi)
        for k in range(kmin, kmax + 1):
            acc += self.hat(2.0 ** (self.eps * k) * xi)
        return float(np.abs(acc - 1.0).max())

    def values(self, t) -> np.ndarray:
        if self._table is None:
            self._table = _profile_table(self.hat, float(self.L ** 3))
        t = np.asarray(t, dtype=float)
        return self._table(t) * np.exp(2j * np.pi * self.L ** 3 * t)


@dataclass
class WindowPair:
    psi: PsiWindow
    phi: PhiWindow

    @property
    def frame_defect(self) -> float:
        return self.phi.frame_defect


def build_psi(L: int, c: float = PSI_C) -> PsiWindow:
    if L < 4:
        raise ValueError("L must be at least 4")
    return PsiWindow(L, c)


def _test_family(n_funcs: int, T: float, n: int, rng) -> list[SampledFunction]:
    out = []
    x0 = -T / 2
    for _ in range(n_funcs):
        xi = np.fft.fftfreq(n, T / n)
        band = np.abs(xi) < 3.0
        spec = np.zeros(n, complex)
        spec[band] = rng.normal(size=band.sum()) + 1j * rng.normal(size=band.sum())
        s = np.fft.ifft(spec * np.exp(-2j * np.pi * xi * x0))
        out.append(SampledFunction(s, x0, T / n))
    return out


def build_phi(tol: float = 1e-6, seed: int = 0) -> PhiWindow:
    """Build ``φ`` and certify tightness on a band-limited test family."""
    w = PhiWindow()
    rng = np.random.default_rng(seed)
    T, n = 32.0, 512
    worst = 0.0
    lvals = np.arange(-8, 9)
    for f in _test_family(4, T, n, rng):
        r = frame_reconstruct(f, None, 0, lvals)
        worst = max(worst, np.linalg.norm(r.samples - f.samples) / np.linalg.norm(f.samples))
    w.frame_defect = worst
    if not worst < tol:
        raise RuntimeError(f"frame defect {worst:.3e} exceeds {tol:.1e}")
    return w


def build_windows(L: int) -> WindowPair:
    return WindowPair(build_psi(L), build_phi())


# ------------------------------------------------------------------- packets

_PHI = PhiWindow()


@dataclass(frozen=True)
class Packet:
    """Analytic packet ``amp·φ_{κ,n,l}``; ``l`` is the modulation (may be half-integer)."""

    kappa: int
    n: int
    l: float
    eps: float
    amp: float = 1.0

    @property
    def a(self) -> float:
        return 2.0 ** (-self.eps * self.kappa)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = self.a
        return (self.amp * math.sqrt(a) * _PHI.values(a * x - self.n)
                * np.exp(2j * np.pi * a * x * self.l))

    def hat(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        a = self.a
        u = xi / a - self.l
        return self.amp / math.sqrt(a) * phi_hat(u) * np.exp(-2j * np.pi * self.n * u)

    def freq_support(self) -> Interval:
        a = self.a
        return Interval(a * (self.l - PHI_RADIUS), a * (self.l + PHI_RADIUS))

    @property
    def center(self) -> float:
        return self.n / self.a

    def sample(self, f: SampledFunction, periodic: bool = False) -> SampledFunction:
        """Render on the grid of ``f``; ``periodic`` uses Fourier synthesis."""
        if not periodic:
            return f.like(self(f.x))
        T = f.length
        xi = np.fft.fftfreq(f.n, f.dx)
        coef = self.hat(xi) / T * np.exp(2j * np.pi * xi * f.x0)
        return f.like(np.fft.ifft(coef) * f.n)


def wave_packet(params: AlphaParams, kappa: int, n: int, l: float,
                grid: SampledFunction, periodic: bool = False) -> SampledFunction:
    """Sample ``φ_{κ,n,l}`` on the grid of ``grid``."""
    params.require_desk()
    return Packet(kappa, n, l, float(params.eps)).sample(grid, periodic)


# --------------------------------------------------------------------- frame

def _circle(f: SampledFunction, a: float) -> int:
    P = f.length * a
    Pi = int(round(P))
    if abs(P - Pi) > 1e-9 * max(1.0, P) or Pi < 1:
        raise ValueError("domain length must be an integer multiple of 2^{εk}")
    return Pi


def frame_coefficients(f: SampledFunction, params: AlphaParams | None, k: int,
                       l_values: Sequence[int]) -> np.ndarray:
    """``<f, φ_{k,n,l/2}>`` for all ``n`` on the periodic domain.

    Returns an array of shape ``(len(l_values), P)`` with ``P`` positions;
    row ``r`` column ``n`` is the pairing with the periodized packet at
    position ``n`` and modulation ``l_values[r]/2``.
    """
    eps = 0.0 if params is None else float(params.eps)
    a = 2.0 ** (-eps * k)
    P = _circle(f, a)
    T = f.length
    xi = np.fft.fftfreq(f.n, f.dx)
    c = np.fft.fft(f.samples) * np.exp(-2j * np.pi * xi * f.x0) / f.n
    jint = np.rint(xi * T).astype(int)
    out = np.zeros((len(l_values), P), complex)
    for r, l in enumerate(l_values):
        u = xi / a - 0.5 * l
        w = phi_hat(u)
        m = w > 0
        acc = np.zeros(P, complex)
        np.add.at(acc, jint[m] % P, c[m] * w[m] / math.sqrt(a))
        nn = np.arange(P)
        out[r] = np.fft.ifft(acc) * P * np.exp(-1j * np.pi * nn * l)
    return out


def frame_synthesis(coeffs: np.ndarray, template: SampledFunction,
                    params: AlphaParams | None, k: int,
                    l_values: Sequence[int]) -> SampledFunction:
    """``Σ_{n,l} c_{l,n} φ_{k,n,l/2}`` on the periodic domain of ``template``."""
    eps = 0.0 if params is None else float(params.eps)
    a = 2.0 ** (-eps * k)
    P = _circle(template, a)
    T = template.length
    xi = np.fft.fftfreq(template.n, template.dx)
    jint = np.rint(xi * T).astype(int)
    spec = np.zeros(template.n, complex)
    nn = np.arange(P)
    for r, l in enumerate(l_values):
        u = xi / a - 0.5 * l
        w = phi_hat(u)
        m = w > 0
        e = np.fft.fft(coeffs[r] * np.exp(1j * np.pi * nn * l))
        spec[m] += w[m] / math.sqrt(a) * e[jint[m] % P] / T
    s = np.fft.ifft(spec * np.exp(2j * np.pi * xi * template.x0)) * template.n
    return template.like(s)


def frame_reconstruct(f: SampledFunction, params: AlphaParams | None, k: int,
                      l_values: Sequence[int]) -> SampledFunction:
    c = frame_coefficients(f, params, k, l_values)
    out = frame_synthesis(c, f, params, k, l_values)
    if not np.iscomplexobj(f.samples):
        out = f.like(out.samples.real)
    return out


def frame_matrix(template: SampledFunction, params: AlphaParams | None, k: int,
                 l_values: Sequence[int]) -> tuple[np.ndarray, list]:
    """Dense matrix of periodized packets (rows) sampled on the grid."""
    eps = 0.0 if params is None else float(params.eps)
    a = 2.0 ** (-eps * k)
    P = _circle(template, a)
    rows, labels = [], []
    for l in l_values:
        for n in range(P):
            pk = Packet(k, n, 0.5 * l, eps)
            rows.append(pk.sample(template, periodic=True).samples)
            labels.append((n, l))
    return np.array(rows), labels


# -------------------------------------------------------------- coefficients

@dataclass(frozen=True)
class ModelIndex:
    k: int
    n1: int
    n2: int
    n3: int
    l1: int
    l2: int
    l3: int

    @property
    def diam(self) -> int:
        v = (self.n1, self.n2, self.n3)
        return max(v) - min(v)

    def as_tuple(self):
        return (self.k, self.n1, self.n2, self.n3, self.l1, self.l2, self.l3)


def support_intervals(params: AlphaParams, l3: int) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
    """Closed ``l_1`` and ``l_2`` ranges allowing a nonzero coefficient."""
    a, L = params.alpha, params.L
    c1 = -a / (1 + a) * l3 + Fraction(2, 1) / (1 + a) * L ** 3
    c2 = -Fraction(1) / (1 + a) * l3 - Fraction(2, 1) / (1 + a) * L ** 3
    return (c1 - L, c1 + L), (c2 - L, c2 + L)


def coefficient_support_predicate(params: AlphaParams, idx: ModelIndex) -> bool:
    (a1, b1), (a2, b2) = support_intervals(params, idx.l3)
    return a1 <= idx.l1 <= b1 and a2 <= idx.l2 <= b2


def default_lambdas(params: AlphaParams) -> tuple[Callable[[int], int], Callable[[int], int]]:
    """``λ_1, λ_2``: centers of the admissible ranges rounded to integers."""
    def lam1(l3):
        (a, b), _ = support_intervals(params, l3)
        return int(round((a + b) / 2))

    def lam2(l3):
        _, (a, b) = support_intervals(params, l3)
        return int(round((a + b) / 2))
    return lam1, lam2


def _support_polygon(params: AlphaParams, l1: int, l2: int, l3: int) -> Polygon:
    """Region of ``(ζ1, ζ2)`` where every factor of the integrand can be nonzero."""
    al = params.af
    L3 = float(params.L ** 3)
    r = PHI_RADIUS
    sq = box(0.5 * l1 - r, 0.5 * l2 - r, 0.5 * l1 + r, 0.5 * l2 + r)
    big = 1e4 + abs(l1) + abs(l2) + abs(l3)
    # |ζ1 + ζ2 + l3/2| < r
    s = -0.5 * l3
    strip3 = Polygon([(-big, s - r + big), (big, s - r - big),
                      (big, s + r - big), (-big, s + r + big)])
    # |ζ1 - α ζ2 - L³| < 1, parametrized along ζ2
    strip4 = Polygon([(L3 - 1 + al * -big, -big), (L3 + 1 + al * -big, -big),
                      (L3 + 1 + al * big, big), (L3 - 1 + al * big, big)])
    return sq.intersection(strip3).intersection(strip4)


def integrand_support_nonempty(params: AlphaParams, l1: int, l2: int, l3: int) -> bool:
    return _support_polygon(params, l1, l2, l3).area > 1e-14


def _phase_matrix(nvals: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.exp(-2j * np.pi * np.outer(nvals, u))


def coefficient_table(params: AlphaParams, l1: int, l2: int, l3: int,
                      n_range: int, M: int = 128, n3: int = 0,
                      psi: PsiWindow | None = None) -> np.ndarray:
    """``C(n1, n2, n3)`` for ``|n1 - n3|, |n2 - n3| <= n_range`` by Fourier quadrature.

    The value is ``∬ φ̂(ζ1-l1/2) φ̂(ζ2-l2/2) φ̂(-ζ1-ζ2-l3/2) ψ̂(ζ1-αζ2) e^{-2πiΦ}``
    with ``Φ = n1(ζ1-l1/2) + n2(ζ2-l2/2) + n3(-ζ1-ζ2-l3/2)``, evaluated by
    the midpoint rule on the unit box around ``(l1/2, l2/2)``.  The result
    does not depend on ``k``.  Returns shape ``(2R+1, 2R+1)`` indexed by
    ``n1 - n3 + R`` and ``n2 - n3 + R``.
    """
    params.require_desk()
    psi = psi or _psi_for(params.L)
    R = int(n_range)
    d = np.arange(-R, R + 1)
    if not integrand_support_nonempty(params, l1, l2, l3):
        return np.zeros((d.size, d.size), complex)
    u = (np.arange(M) + 0.5) / M - 0.5
    z1 = 0.5 * l1 + u
    z2 = 0.5 * l2 + u
    Z1, Z2 = np.meshgrid(z1, z2, indexing="ij")
    w3 = -Z1 - Z2 - 0.5 * l3
    F = (phi_hat(u)[:, None] * phi_hat(u)[None, :] * phi_hat(w3)
         * psi.hat(Z1 - params.af * Z2)) / M ** 2
    # n3 = 0 base table; common shifts give the sign (-1)^{n3(l1+l2+l3)}.
    tab = _phase_matrix(d, u) @ F @ _phase_matrix(d, u).T
    if n3 % 2 and (l1 + l2 + l3) % 2:
        tab = -tab
    return tab


@lru_cache(maxsize=8)
def _psi_for(L: int) -> PsiWindow:
    return build_psi(L)


def _space_coefficient(params: AlphaParams, idx: ModelIndex, h: float = 0.125,
                       extent: float = 40.0) -> complex:
    """Direct double integral in ``(x, t)`` at ``k = 0`` (independent oracle).

    The full integrand is band-limited with small bandwidth, so the
    trapezoidal rule with step ``h`` is spectrally accurate.
    """
    psi = _psi_for(params.L)
    eps = float(params.eps)
    p1 = Packet(0, idx.n1, 0.5 * idx.l1, eps)
    p2 = Packet(0, idx.n2, 0.5 * idx.l2, eps)
    p3 = Packet(0, idx.n3, 0.5 * idx.l3, eps)
    c = 0.5 * (idx.n1 + idx.n2)
    t = np.arange(-extent, extent + h / 2, h)
    x = c + np.arange(-extent, extent + h / 2, h)
    acc = 0.0 + 0.0j
    v3 = p3(x)
    al = params.af
    for tv, pv in zip(t, psi.values(t)):
        acc += pv * np.sum(p1(x - tv) * p2(x + al * tv) * v3)
    return complex(acc * h * h)


def model_coefficient(params: AlphaParams, idx: ModelIndex, M: int = 128,
                      method: str = "fourier") -> complex:
    """Coefficient ``C_{k,n1,n2,n3,l1,l2,l3}``; ``method='space'`` is the slow oracle."""
    params.require_desk()
    if method == "space":
        return _space_coefficient(params, idx)
    if method != "fourier":
        raise ValueError("method must be 'fourier' or 'space'")
    R = max(abs(idx.n1 - idx.n3), abs(idx.n2 - idx.n3))
    tab = coefficient_table(params, idx.l1, idx.l2, idx.l3, R, M, n3=idx.n3)
    return complex(tab[idx.n1 - idx.n3 + R, idx.n2 - idx.n3 + R])


def _diam_grid(R: int) -> np.ndarray:
    d = np.arange(-R, R + 1)
    D1, D2 = np.meshgrid(d, d, indexing="ij")
    return np.maximum(np.maximum(D1, D2), 0) - np.minimum(np.minimum(D1, D2), 0)


def coefficient_decay_check(params: AlphaParams, triples: Iterable[tuple[int, int, int]],
                            diams: Sequence[int] = (0, 1, 2, 4, 8), M: int = 128) -> dict:
    """Envelope of ``|C|`` against ``diam{n1, n2, n3}`` over a family of ``l``-triples.

    Returns the per-diameter maxima, the global peak, a log-log slope fit
    of ``|C|`` against ``1 + d/L`` and the ``d = 8`` to peak ratio.
    """
    R = max(diams)
    D = _diam_grid(R)
    env = np.zeros(R + 1)
    per_family = []
    for (l1, l2, l3) in triples:
        tab = np.abs(coefficient_table(params, l1, l2, l3, R, M))
        row = np.array([tab[D == d].max() for d in range(R + 1)])
        env = np.maximum(env, row)
        per_family.append(((l1, l2, l3), row))
    peak = env.max() if env.size else 0.0
    ds = np.array(list(diams))
    sel = env[ds] > 1e-12 * max(peak, 1e-300)
    slope = float("nan")
    if sel.sum() >= 2:
        xs = np.log(1 + ds[sel] / params.L)
        slope = float(np.polyfit(xs, np.log(env[ds][sel]), 1)[0])
    d0_is_max = all(row[0] >= row.max() * (1 - 1e-12) for _, row in per_family if row.max() > 0)
    monotone = bool(np.all(np.diff(env[ds]) <= 1e-15 * peak))
    return {
        "diams": list(map(int, ds)),
        "envelope": env[ds].tolist(),
        "peak": float(peak),
        "slope": slope,
        "ratio_at_max_diam": float(env[ds[-1]] / peak) if peak > 0 else 0.0,
        "d0_is_family_max": bool(d0_is_max),
        "monotone": monotone,
        "families": per_family,
    }


# ------------------------------------------------------------ model operators

def _pairings(f: SampledFunction, k: int, n: int, l: int, eps: float) -> complex:
    return inner(f, Packet(k, n, 0.5 * l, eps).sample(f))


def model_operator_apply(params: AlphaParams, idx: ModelIndex, f1: SampledFunction,
                         f2: SampledFunction) -> SampledFunction:
    """``2^{-εk/2} <f1, φ_{k,n1,l1/2}> <f2, φ_{k,n2,l2/2}> φ_{k,n3,l3/2}``."""
    params.require_desk()
    eps = float(params.eps)
    c1 = _pairings(f1, idx.k, idx.n1, idx.l1, eps)
    c2 = _pairings(f2, idx.k, idx.n2, idx.l2, eps)
    out = Packet(idx.k, idx.n3, 0.5 * idx.l3, eps).sample(f1).samples
    return f1.like(2.0 ** (-eps * idx.k / 2) * c1 * c2 * out)


def model_sum_apply(params: AlphaParams, indices, f1: SampledFunction,
                    f2: SampledFunction, M: int = 128) -> SampledFunction:
    """``Σ C(idx)·H_{idx*}(f1, f2)`` over a finite index list.

    ``idx*`` is ``idx`` with ``l3`` negated: the coefficient pairs the output
    packet without conjugation, so the frame expansion of the output uses
    the packet at modulation ``-l3/2``.  The work is grouped by
    ``(k, l1, l2, l3)`` and the output is accumulated on the periodic
    domain of ``f1`` (its length must be a multiple of ``2^{εk}``).
    """
    params.require_desk()
    eps = float(params.eps)
    arr = np.array([i.as_tuple() if isinstance(i, ModelIndex) else tuple(i)
                    for i in indices], dtype=np.int64).reshape(-1, 7)
    out = np.zeros(f1.n, complex)
    if arr.shape[0] == 0:
        return f1.like(out)
    keys = arr[:, [0, 4, 5, 6]]
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    cache_a: dict = {}
    for g, (k, l1, l2, l3) in enumerate(uniq):
        rows = arr[inv == g]
        n1, n2, n3 = rows[:, 1], rows[:, 2], rows[:, 3]
        R = int(max(np.abs(n1 - n3).max(), np.abs(n2 - n3).max()))
        base = coefficient_table(params, int(l1), int(l2), int(l3), R, M)
        C = base[n1 - n3 + R, n2 - n3 + R]
        C = np.where((n3 % 2 == 1) & ((l1 + l2 + l3) % 2 == 1), -C, C)
        if not np.any(C):
            continue
        A1 = _coef_row(f1, params, int(k), int(l1), cache_a)
        A2 = _coef_row(f2, params, int(k), int(l2), cache_a)
        P = A1.size
        w = C * A1[n1 % P] * A2[n2 % P] * 2.0 ** (-eps * k / 2)
        acc = np.zeros(P, complex)
        np.add.at(acc, n3 % P, w)
        out += frame_synthesis(acc[None, :], f1, params, int(k), [-int(l3)]).samples
    return f1.like(out)


def _coef_row(f, params, k, l, cache):
    key = (id(f), k, l)
    if key not in cache:
        cache[key] = frame_coefficients(f, params, k, [l])[0]
    return cache[key]


def model_sum_box(params: AlphaParams, f1: SampledFunction, f2: SampledFunction,
                  k: int, l3_values: Iterable[int], diam: int, M: int = 128,
                  l_radius: int | None = None) -> SampledFunction:
    """Single-scale model sum over all positions on the periodic domain.

    For each ``l3`` the ``l1, l2`` range over the admissible intervals
    (optionally clipped to ``l_radius`` around their centers) and
    ``n1 - n3, n2 - n3`` over ``[-diam, diam]``.
    """
    params.require_desk()
    eps = float(params.eps)
    a = params.a(k)
    P = _circle(f1, a)
    R = int(diam)
    d = np.arange(-R, R + 1)
    nn = np.arange(P)
    out = np.zeros(f1.n, complex)
    cache: dict = {}
    for l3 in l3_values:
        (a1, b1), (a2, b2) = support_intervals(params, l3)
        l1s = range(math.ceil(a1), math.floor(b1) + 1)
        l2s = range(math.ceil(a2), math.floor(b2) + 1)
        if l_radius is not None:
            c1, c2 = (a1 + b1) / 2, (a2 + b2) / 2
            l1s = [v for v in l1s if abs(v - c1) <= l_radius]
            l2s = [v for v in l2s if abs(v - c2) <= l_radius]
        acc = np.zeros(P, complex)
        for l1 in l1s:
            for l2 in l2s:
                base = coefficient_table(params, l1, l2, l3, R, M)
                if not np.any(base):
                    continue
                A1 = _coef_row(f1, params, k, l1, cache)
                A2 = _coef_row(f2, params, k, l2, cache)
                # sign for odd n3 when l1 + l2 + l3 is odd
                sgn = np.where((nn % 2 == 1) & ((l1 + l2 + l3) % 2 == 1), -1.0, 1.0)
                W1 = A1[(nn[:, None] + d[None, :]) % P]
                W2 = A2[(nn[:, None] + d[None, :]) % P]
                acc += sgn * np.einsum("ni,ij,nj->n", W1, base, W2)
        acc *= 2.0 ** (-eps * k / 2)
        out += frame_synthesis(acc[None, :], f1, params, k, [-int(l3)]).samples
    return f1.like(out)


# ----------------------------------------------------------------- tile maps

def _fit(target: Interval, width: float) -> Interval:
    """First fit of ``target`` into a width-``width`` interval on ``(width/16)ℤ``."""
    step = width / 16.0
    left = math.floor(target.left / step) * step
    right = left + width
    if right < target.right:
        raise ValueError(f"no interval of width {width:.6g} on the lattice covers {target}")
    return Interval(left, right)


def _prefactor(params: AlphaParams, nu: int) -> float:
    return float(params.L) ** -10 / nu ** 2


def assign_tiles(params: AlphaParams, s: tuple[int, int, int], nu: int, nu1: int,
                 nu2: int, lambda1: Callable | None = None,
                 lambda2: Callable | None = None, tid: int = -1) -> Tile:
    """Build the tile for ``s = (k, n, l)`` with its packets and intervals.

    ``|ω_i| = 2^{-ε(k+1/2)}L`` and ``|I| = 2^{ε/2}·2^4·2^{εk}ν`` sit in
    the middle of the admissible brackets; ``I`` is centered at
    ``2^{εk}n``.
    """
    k, n, l = (int(v) for v in s)
    if 1 + max(abs(nu1), abs(nu2)) != nu:
        raise ValueError("need 1 + max(|nu1|, |nu2|) = nu")
    lam1, lam2 = default_lambdas(params)
    lambda1 = lambda1 or lam1
    lambda2 = lambda2 or lam2
    eps = float(params.eps)
    al = params.af
    amp = _prefactor(params, nu)
    p1 = Packet(k, n + nu1, 0.5 * lambda1(l), eps, amp)
    p2 = Packet(k, n + nu2, 0.5 * lambda2(l), eps, amp)
    p3 = Packet(k, n, 0.5 * l, eps, amp)
    a = params.a(k)
    w = a * params.L * 2.0 ** (-eps / 2)
    t1 = p1.freq_support().scale(-(1 + al) / al)
    t2 = p2.freq_support().scale(-(1 + al))
    t3 = p3.freq_support()
    om = (_fit(t1, w), _fit(t2, w), _fit(t3, w))
    c = n / a
    half = 0.5 * 2.0 ** (eps / 2) * 16.0 * nu / a
    I = Interval(c - half, c + half)
    return Tile(k, n, l, I, om, packets=(p1, p2, p3), tid=tid)


def tile_constraints(params: AlphaParams, s: Tile, nu: int) -> dict:
    """Exact per-tile checks of the frequency and time constraints."""
    eps = float(params.eps)
    al = params.af
    a = params.a(s.k)
    p1, p2, p3 = s.packets
    res = {
        "20": s.omega[0].contains(p1.freq_support().scale(-(1 + al) / al)),
        "21": s.omega[1].contains(p2.freq_support().scale(-(1 + al))),
        "22": s.omega[2].contains(p3.freq_support()),
        "23": all(2.0 ** (-eps) * a * params.L <= w.length <= a * params.L for w in s.omega),
        "25": s.omegas_disjoint(),
        "26": abs(s.I.center - s.n / a) <= nu / a,
        "27": 16.0 * nu / a <= s.I.length <= 2.0 ** eps * 16.0 * nu / a,
    }
    return res


def random_tile_family(params: AlphaParams, count: int, rng, nu: int = 2,
                       k_values: Sequence[int] = (0, 1, 2), n_span: int = 4000,
                       l_span: int = 4000, max_tries: int = 100000) -> list[Tile]:
    """Random tiles whose time and frequency families are grids.

    Candidates that would break the grid property of ``I(S)`` or of the
    frequency intervals are rejected; this is the finite analogue of the
    separation assumptions on the index set.
    """
    tiles: list[Tile] = []
    times: list[Interval] = []
    freqs: list[Interval] = []
    tries = 0
    nu1, nu2 = nu - 1, -(nu - 1)
    while len(tiles) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not place enough separated tiles")
        k = int(rng.choice(k_values))
        n = int(rng.integers(-n_span, n_span))
        l = int(rng.integers(-l_span, l_span))
        s = assign_tiles(params, (k, n, l), nu, nu1, nu2, tid=len(tiles))
        if not (grid_check(times + [s.I]) and grid_check(freqs + list(s.omega))):
            continue
        tiles.append(s)
        times.append(s.I)
        freqs.extend(s.omega)
    return tiles


# ----------------------------------------------------------- oscillation bound

def theta(params: AlphaParams, i: int, xi: float) -> Callable:
    """``θ_{ξ,i}``: unimodular exponential matched to the ``i``-th frequency map."""
    al = params.af
    if i == 1:
        nu_ = -al / (1 + al) * xi
    elif i == 2:
        nu_ = -xi / (1 + al)
    elif i == 3:
        nu_ = xi
    else:
        raise ValueError("i must be 1, 2 or 3")
    return lambda x: np.exp(2j * np.pi * nu_ * np.asarray(x, dtype=float))


def inf_deviation(values: np.ndarray) -> float:
    """``inf_λ max |v - λ|``: radius of the smallest disc holding the points."""
    pts = np.column_stack([values.real, values.imag])
    if len(pts) == 1 or np.ptp(pts, axis=0).max() == 0:
        return 0.0
    return float(minimum_bounding_radius(MultiPoint(pts)))


def theta_oscillation_check(params: AlphaParams, s: Tile, i: int, j: int, xi: float,
                            J: Interval, samples: int = 513,
                            replace: Callable | None = None) -> float:
    """Ratio of ``inf_λ ||φ_i(s) - λθ_{ξ,i}||_{L∞(J)}`` to its allowed bound.

    The bound is ``|J| |I|^{-3/2} (1 + |c(J) - c(I)|/|I|)^{-2}``.  Since
    ``|θ| = 1``, the infimum equals ``inf_λ ||φ_i(s)θ^{-1} - λ||``.
    ``replace`` substitutes another function for ``φ_i(s)``.
    """
    if not s.omega[j - 1].contains_point(xi):
        raise ValueError("xi must lie in omega_j(s)")
    if J.length > s.I.length * (1 + 1e-12):
        raise ValueError("need |J| <= |I(s)|")
    x = np.linspace(J.left, J.right, samples)
    th = theta(params, i, xi)(x)
    f = (replace or s.packets[i - 1])(x)
    g = f / th
    lhs = inf_deviation(g)
    I = s.I
    rhs = J.length * I.length ** -1.5 * (1 + abs(J.center - I.center) / I.length) ** -2
    return lhs / rhs
