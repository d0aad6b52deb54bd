"""Sampled functions and the linear and bilinear Hilbert transforms.

Fourier convention: ``f̂(ξ) = ∫ f(x) e^{-2πixξ} dx``.  The linear Hilbert
transform is ``Hf(x) = p.v.∫ f(x-t) dt/t`` with multiplier ``-iπ sgn ξ``,
and the bilinear transform is

    H_α(f1, f2)(x) = p.v.∫ f1(x-t) f2(x+αt) dt/t.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "SampledFunction",
    "PvParams",
    "fourier",
    "inverse_fourier",
    "lp_norm",
    "inner",
    "pairing",
    "hilbert",
    "bht",
    "bht_degenerate",
    "bht_smoothed",
    "bht_smoothed_term",
    "adjoint_residual_1",
    "adjoint_residual_2",
    "dual_alpha_1",
    "dual_alpha_2",
]

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Uniform samples of a function on ``[x0, x0 + N·dx)``."""

    samples: np.ndarray
    x0: float
    dx: float

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("need a 1-d array of at least two samples")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        s = s.astype(complex if np.iscomplexobj(s) else float, copy=True)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "dx", float(self.dx))

    @classmethod
    def from_callable(cls, fn: Callable, x0: float, dx: float, n: int):
        x = x0 + dx * np.arange(n)
        return cls(np.asarray(fn(x)), x0, dx)

    @classmethod
    def on_grid(cls, length: float, n: int, values=None):
        """Centered grid ``[-length/2, length/2)`` with ``n`` samples."""
        dx = length / n
        s = np.zeros(n) if values is None else values
        return cls(s, -length / 2, dx)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.n * self.dx

    def like(self, samples) -> "SampledFunction":
        return SampledFunction(np.asarray(samples), self.x0, self.dx)

    def same_grid(self, other: "SampledFunction") -> bool:
        return (self.n == other.n and math.isclose(self.dx, other.dx, rel_tol=1e-12)
                and math.isclose(self.x0, other.x0, rel_tol=1e-12, abs_tol=1e-12 * self.dx))

    def _check(self, other):
        if not self.same_grid(other):
            raise ValueError("sampled functions live on different grids")

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            self._check(other)
            return self.like(self.samples + other.samples)
        return self.like(self.samples + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SampledFunction):
            self._check(other)
            return self.like(self.samples - other.samples)
        return self.like(self.samples - other)

    def __mul__(self, other):
        if isinstance(other, SampledFunction):
            self._check(other)
            return self.like(self.samples * other.samples)
        return self.like(self.samples * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.samples)

    def conj(self) -> "SampledFunction":
        return self.like(np.conj(self.samples))

    def shift_samples(self, m: int) -> "SampledFunction":
        """``g(x) = f(x - m·dx)`` with zero fill."""
        out = np.zeros_like(self.samples)
        if m >= 0:
            out[m:] = self.samples[: self.n - m]
        else:
            out[:m] = self.samples[-m:]
        return self.like(out)

    def boundary_mass(self, width: int = 4) -> float:
        s = np.abs(self.samples)
        peak = s.max()
        if peak == 0:
            return 0.0
        return float(max(s[:width].max(), s[-width:].max()) / peak)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x0,dx,n\n")
        buf.write(f"{float(self.x0)!r},{float(self.dx)!r},{self.n}\n")
        s = self.samples.astype(complex)
        for v in s:
            buf.write(f"{float(v.real)!r},{float(v.imag)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledFunction":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        x0, dx, n = lines[1].split(",")
        vals = np.array([[float(a) for a in ln.split(",")] for ln in lines[2:]])
        if vals.shape[0] != int(n):
            raise ValueError("sample count does not match header")
        s = vals[:, 0] + 1j * vals[:, 1]
        if not np.any(vals[:, 1]):
            s = vals[:, 0]
        return cls(s, float(x0), float(dx))


@dataclass(frozen=True)
class PvParams:
    """Principal-value discretization.

    ``inner_cut`` and ``outer_cut`` default (``None``) to ``2·dx`` and the
    domain length; the latter covers every ``t`` with ``x - t`` on the grid.
    ``levels`` is the number of step halvings used by Richardson
    extrapolation.
    """

    inner_cut: float | None = None
    outer_cut: float | None = None
    rule: str = "simpson"
    levels: int = 2
    upsample: int = 4

    def __post_init__(self):
        if self.rule not in ("midpoint", "simpson"):
            raise ValueError("rule must be 'midpoint' or 'simpson'")
        if self.levels < 0:
            raise ValueError("levels must be nonnegative")
        if (self.inner_cut is not None and self.outer_cut is not None
                and not self.inner_cut < self.outer_cut):
            raise ValueError("inner cut must be smaller than outer cut")

    def resolve(self, f: SampledFunction) -> tuple[float, float]:
        d = 2 * f.dx if self.inner_cut is None else float(self.inner_cut)
        R = f.length if self.outer_cut is None else float(self.outer_cut)
        if not 0 < d < R:
            raise ValueError("need 0 < inner_cut < outer_cut")
        return d, R


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def _freq_grid(f: SampledFunction) -> tuple[float, float]:
    dxi = 1.0 / (f.n * f.dx)
    return -0.5 * f.n * dxi, dxi


def fourier(f: SampledFunction) -> SampledFunction:
    """Discrete approximation of ``f̂`` on the centered frequency grid."""
    if not _is_pow2(f.n):
        raise ValueError("fourier transform needs a power-of-two length")
    n = f.n
    xi0, dxi = _freq_grid(f)
    j = np.arange(n)
    pre = f.samples * np.exp(-2j * np.pi * xi0 * j * f.dx)
    post = f.dx * np.exp(-2j * np.pi * f.x0 * (xi0 + j * dxi))
    return SampledFunction(np.fft.fft(pre) * post, xi0, dxi)


def inverse_fourier(F: SampledFunction, x0: float) -> SampledFunction:
    """Inverse of :func:`fourier` given the spatial left endpoint ``x0``."""
    if not _is_pow2(F.n):
        raise ValueError("fourier transform needs a power-of-two length")
    n = F.n
    dx = 1.0 / (n * F.dx)
    j = np.arange(n)
    pre = F.samples * np.exp(2j * np.pi * x0 * (F.x0 + j * F.dx))
    post = n * F.dx * np.exp(2j * np.pi * F.x0 * j * dx)
    return SampledFunction(np.fft.ifft(pre) * post, x0, dx)


def lp_norm(f: SampledFunction, p: float) -> float:
    """Riemann-sum ``L^p`` (quasi-)norm for ``p >= 2/3``; ``p = inf`` allowed."""
    if p < 2.0 / 3.0 - 1e-15:
        raise ValueError("p must be at least 2/3")
    a = np.abs(f.samples)
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a ** p) * f.dx) ** (1.0 / p))


def inner(f: SampledFunction, g: SampledFunction) -> complex:
    """``<f, g> = ∫ f·conj(g)``."""
    f._check(g)
    return complex(np.sum(f.samples * np.conj(g.samples)) * f.dx)


def pairing(f: SampledFunction, g: SampledFunction) -> complex:
    """Bilinear pairing ``∫ f·g`` (no conjugation)."""
    f._check(g)
    return complex(np.sum(f.samples * g.samples) * f.dx)


def _warn_boundary(f: SampledFunction, name: str):
    if f.boundary_mass() > BOUNDARY_TOL and np.any(f.samples):
        warnings.warn(f"{name} does not decay at the domain boundary "
                      f"(relative edge magnitude {f.boundary_mass():.1e})",
                      RuntimeWarning, stacklevel=3)


def _hilbert_kernel(n: int) -> np.ndarray:
    """Discrete kernel ``2/m`` on odd offsets (exact for band-limited data)."""
    m = np.arange(-n + 1, n)
    w = np.zeros(m.size)
    odd = (m % 2) != 0
    w[odd] = 2.0 / m[odd]
    return w


def hilbert(f: SampledFunction, periodic: bool = False) -> SampledFunction:
    """Linear Hilbert transform ``p.v.∫ f(x-t) dt/t``.

    The default is the aperiodic sinc-interpolation kernel applied as a
    zero-padded linear convolution.  ``periodic=True`` applies the
    multiplier ``-iπ sgn ξ`` on the discrete circle instead; use it for
    periodic data such as trigonometric polynomials.
    """
    s = f.samples
    if periodic:
        xi = np.fft.fftfreq(f.n, f.dx)
        out = np.fft.ifft(np.fft.fft(s) * (-1j * np.pi * np.sign(xi)))
        if not np.iscomplexobj(s):
            out = out.real
        return f.like(out)
    n = f.n
    w = _hilbert_kernel(n)
    size = 1 << int(math.ceil(math.log2(3 * n - 2)))
    conv = np.fft.ifft(np.fft.fft(s, size) * np.fft.fft(w, size))
    out = conv[n - 1: 2 * n - 1]
    if not np.iscomplexobj(s):
        out = out.real
    return f.like(out)


class _Interp:
    """Off-grid evaluation with zero extension.

    Samples are first refined by an exact FFT zero-padding (band-limited
    interpolation), then a cubic spline is fitted on the finer grid.
    """

    def __init__(self, f: SampledFunction, upsample: int):
        s = f.samples
        if upsample > 1:
            n = f.n
            S = np.fft.fftshift(np.fft.fft(s))
            pad = (upsample - 1) * n
            S = np.concatenate([np.zeros(pad // 2, complex), S,
                                np.zeros(pad - pad // 2, complex)])
            fine = np.fft.ifft(np.fft.ifftshift(S)) * upsample
            if not np.iscomplexobj(s):
                fine = fine.real
            dx = f.dx / upsample
        else:
            fine, dx = s, f.dx
        x = f.x0 + dx * np.arange(fine.size)
        self.lo = x[0]
        self.hi = x[-1]
        self.spline = CubicSpline(x, fine)
        self.complex = np.iscomplexobj(fine)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.spline(x)
        out[(x < self.lo) | (x > self.hi)] = 0.0
        return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


def _composite(G: Callable, a: float, b: float, n: int, rule: str) -> np.ndarray:
    """Composite rule over ``[a, b]`` with ``n`` panels (``n`` even for Simpson)."""
    h = (b - a) / n
    if rule == "midpoint":
        acc = 0.0
        for t in a + h * (np.arange(n) + 0.5):
            acc = acc + G(t)
        return acc * h
    acc = G(a) + G(b)
    for i in range(1, n):
        acc = acc + (4.0 if i % 2 else 2.0) * G(a + i * h)
    return acc * h / 3.0


def _bht_core(f1: SampledFunction, f2: SampledFunction, alpha: float,
              pv: PvParams) -> np.ndarray:
    d, R = pv.resolve(f1)
    x = f1.x
    i1 = _Interp(f1, pv.upsample)
    i2 = _Interp(f2, pv.upsample)

    def G(t):
        return (i1(x - t) * i2(x + alpha * t) - i1(x + t) * i2(x - alpha * t)) / t

    inner_part = 0.0
    for node, wt in zip(_GL_NODES, _GL_WEIGHTS):
        inner_part = inner_part + 0.5 * d * wt * G(0.5 * d * (node + 1.0))

    n0 = max(2, int(math.ceil((R - d) / f1.dx)))
    n0 += n0 % 2
    order = 2 if pv.rule == "midpoint" else 4
    table = []
    for lev in range(pv.levels + 1):
        row = [_composite(G, d, R, n0 * 2 ** lev, pv.rule)]
        for j, prev in enumerate(table[-1] if table else []):
            fac = 2.0 ** (order + 2 * j)
            row.append(row[j] + (row[j] - prev) / (fac - 1.0))
        table.append(row)
    return inner_part + table[-1][-1]


def bht(f1: SampledFunction, f2: SampledFunction, alpha: float,
        pv: PvParams | None = None) -> SampledFunction:
    """Bilinear Hilbert transform by paired principal-value quadrature.

    For ``|α| > 1`` the substitution ``t -> -t/α`` gives
    ``H_α(f1, f2) = -sgn(α)·H_{1/α}(f2, f1)``, which keeps the t-step
    at the sampling scale of the faster factor.
    """
    pv = pv or PvParams()
    f1._check(f2)
    alpha = float(alpha)
    if alpha == 0.0 or alpha == -1.0:
        raise ValueError("alpha in {0, -1} is degenerate; use bht_degenerate")
    for f in (f1, f2):
        if not np.all(np.isfinite(f.samples)):
            raise ValueError("non-finite samples")
    pv.resolve(f1)
    _warn_boundary(f1, "f1")
    _warn_boundary(f2, "f2")
    if abs(alpha) > 1.0:
        out = -math.copysign(1.0, alpha) * _bht_core(f2, f1, 1.0 / alpha, pv)
    else:
        out = _bht_core(f1, f2, alpha, pv)
    if not (np.iscomplexobj(f1.samples) or np.iscomplexobj(f2.samples)):
        out = np.real(out)
    return f1.like(out)


def bht_degenerate(f1: SampledFunction, f2: SampledFunction, which: str,
                   periodic: bool = False) -> SampledFunction:
    """Limits of ``H_α`` at the exceptional parameters.

    ``alpha0`` gives ``H(f1)·f2`` and ``alphaMinus1`` gives ``H(f1·f2)``.
    ``alphaInf`` is the limit ``α -> +∞``, which equals ``-f1·H(f2)``;
    ``alphaMinusInf`` (``α -> -∞``) equals ``+f1·H(f2)``.
    """
    f1._check(f2)
    if which == "alpha0":
        return hilbert(f1, periodic) * f2
    if which == "alphaMinus1":
        return hilbert(f1 * f2, periodic)
    if which == "alphaInf":
        return -(f1 * hilbert(f2, periodic))
    if which == "alphaMinusInf":
        return f1 * hilbert(f2, periodic)
    raise ValueError(f"unknown degenerate case {which!r}")


def bht_smoothed_term(f1: SampledFunction, f2: SampledFunction, alpha: float,
                      k: int, psi_hat: Callable, eps: float,
                      floor: float = 1e-16) -> SampledFunction:
    """One scale of the smoothed transform.

    ``2^{-εk/2}∫ f1(x-t) f2(x+αt) ψ_k(t) dt`` equals the bilinear
    multiplier ``∬ f̂1(ζ1) f̂2(ζ2) ψ̂(2^{εk}(ζ1 - αζ2)) e^{2πix(ζ1+ζ2)}``.
    The double integral is evaluated exactly on the DFT lattice, keeping
    only frequency bins where the inputs exceed ``floor`` of their peak.
    """
    f1._check(f2)
    if not _is_pow2(f1.n):
        raise ValueError("smoothed transform needs a power-of-two length")
    n = f1.n
    F1 = np.fft.fft(f1.samples)
    F2 = np.fft.fft(f2.samples)
    xi = np.fft.fftfreq(n, f1.dx)
    m = np.arange(n)
    a1 = np.flatnonzero(np.abs(F1) > floor * max(np.abs(F1).max(), 1e-300))
    a2 = np.flatnonzero(np.abs(F2) > floor * max(np.abs(F2).max(), 1e-300))
    out = np.zeros(n, complex)
    if a1.size and a2.size:
        scale = 2.0 ** (eps * k)
        for chunk in np.array_split(a1, max(1, a1.size * a2.size // 2_000_000 + 1)):
            W = psi_hat(scale * (xi[chunk][:, None] - alpha * xi[a2][None, :]))
            prod = F1[chunk][:, None] * F2[a2][None, :] * W
            idx = (m[chunk][:, None] + m[a2][None, :]) % n
            out += np.bincount(idx.ravel(), weights=prod.real.ravel(), minlength=n)
            out += 1j * np.bincount(idx.ravel(), weights=prod.imag.ravel(), minlength=n)
    # Each factor contributes a 1/N from its inverse DFT; frequencies add,
    # so the product of the two trigonometric interpolants is one more
    # inverse DFT of the binned sums.
    return f1.like(np.fft.ifft(out) / n)


def bht_smoothed(f1: SampledFunction, f2: SampledFunction, alpha: float,
                 k_range: Iterable[int], psi_hat: Callable, eps: float) -> SampledFunction:
    """Truncated scale sum of the smoothed bilinear transform."""
    ks = list(k_range)
    if not ks:
        raise ValueError("empty k range")
    acc = np.zeros(f1.n, complex)
    for k in ks:
        acc += bht_smoothed_term(f1, f2, alpha, k, psi_hat, eps).samples
    return f1.like(acc)


def dual_alpha_1(alpha: float) -> tuple[float, float]:
    """Parameter and sign of the first adjoint identity."""
    return -alpha / (1.0 + alpha), math.copysign(1.0, 1.0 + alpha)


def dual_alpha_2(alpha: float) -> tuple[float, float]:
    """Parameter and sign of the second adjoint identity."""
    return -1.0 - alpha, -1.0


def _residual(lhs: complex, rhs: complex, scale: float) -> float:
    if scale == 0.0:
        return 0.0 if lhs == rhs else float("inf")
    return abs(lhs - rhs) / scale


def adjoint_residual_1(f1, f2, f3, alpha: float, pv: PvParams | None = None) -> float:
    """``|∫H_α(f1,f2)f3 - sgn(1+α)∫H_{-α/(1+α)}(f1,f3)f2|`` relative."""
    if not np.any(f3.samples):
        return 0.0
    beta, sign = dual_alpha_1(alpha)
    lhs = pairing(bht(f1, f2, alpha, pv), f3)
    rhs = sign * pairing(bht(f1, f3, beta, pv), f2)
    return _residual(lhs, rhs, _pair_scale(f1, f2, f3))


def adjoint_residual_2(f1, f2, f3, alpha: float, pv: PvParams | None = None) -> float:
    """``|∫H_α(f1,f2)f3 + ∫H_{-1-α}(f3,f2)f1|`` relative."""
    if not np.any(f1.samples):
        return 0.0
    beta, sign = dual_alpha_2(alpha)
    lhs = pairing(bht(f1, f2, alpha, pv), f3)
    rhs = sign * pairing(bht(f3, f2, beta, pv), f1)
    return _residual(lhs, rhs, _pair_scale(f1, f2, f3))


def _pair_scale(f1, f2, f3) -> float:
    # Natural size of the trilinear form: product of L^3 norms (Hölder).
    return lp_norm(f1, 3) * lp_norm(f2, 3) * lp_norm(f3, 3)
