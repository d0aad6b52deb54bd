"""Deterministic test-function corpus.

Each item is an analytic profile, so the same function can be sampled on
grids of different length and resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .function_core import SampledFunction, lp_norm

__all__ = ["KINDS", "CorpusItem", "make_item", "make_corpus", "gaussian_pair"]

KINDS = ("gaussian", "modulated", "bump", "chirp", "bandlimited")


@dataclass(frozen=True)
class CorpusItem:
    """``kind`` with its parameters; ``p`` is the normalization exponent."""

    kind: str
    center: float
    width: float
    freq: float = 0.0
    rate: float = 0.0
    modes: tuple = field(default_factory=tuple)
    p: float = 2.0

    def __call__(self, x) -> np.ndarray:
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        env = np.exp(-np.pi * u * u)
        if self.kind == "gaussian":
            return env
        if self.kind == "modulated":
            return env * np.cos(2 * np.pi * self.freq * (x - self.center))
        if self.kind == "bump":
            out = np.zeros_like(u)
            m = np.abs(u) < 1
            out[m] = np.exp(1.0 - 1.0 / (1.0 - u[m] ** 2))
            return out
        if self.kind == "chirp":
            return env * np.cos(2 * np.pi * (self.freq * u + self.rate * u * u))
        if self.kind == "bandlimited":
            acc = np.zeros_like(u)
            for amp, fr, ph in self.modes:
                acc += amp * np.cos(2 * np.pi * fr * u + ph)
            return env * acc
        raise ValueError(f"unknown kind {self.kind!r}")

    def sample(self, template: SampledFunction, normalize: bool = True) -> SampledFunction:
        f = template.like(self(template.x))
        if normalize:
            nrm = lp_norm(f, self.p)
            if nrm == 0:
                raise ValueError("cannot normalize a zero function")
            f = f.like(f.samples / nrm)
        return f

    def with_p(self, p: float) -> "CorpusItem":
        return CorpusItem(self.kind, self.center, self.width, self.freq, self.rate, self.modes, p)


def make_item(kind: str, rng, spread: float = 1.0, p: float = 2.0,
              freq_scale: float = 1.0) -> CorpusItem:
    """Random item of the given kind; ``spread`` bounds the center."""
    c = float(rng.uniform(-spread, spread))
    w = float(rng.uniform(0.6, 1.4))
    if kind == "gaussian":
        return CorpusItem(kind, c, w, p=p)
    if kind == "modulated":
        return CorpusItem(kind, c, w, freq=float(rng.uniform(0.2, 1.5)) * freq_scale, p=p)
    if kind == "bump":
        return CorpusItem(kind, c, 1.5 * w, p=p)
    if kind == "chirp":
        return CorpusItem(kind, c, w, freq=float(rng.uniform(0.0, 1.0)) * freq_scale,
                          rate=float(rng.uniform(0.2, 1.0)), p=p)
    if kind == "bandlimited":
        modes = tuple((float(rng.normal()), float(rng.uniform(0, 1.5)) * freq_scale,
                       float(rng.uniform(0, 2 * np.pi))) for _ in range(4))
        return CorpusItem(kind, c, w, modes=modes, p=p)
    raise ValueError(f"unknown kind {kind!r}")


def make_corpus(seed: int, count: int, p: float = 2.0, spread: float = 1.0,
                kinds=KINDS) -> list[CorpusItem]:
    """``count`` items cycling through ``kinds``, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    return [make_item(kinds[r % len(kinds)], rng, spread, p) for r in range(count)]


def gaussian_pair(seed: int, spread: float = 0.5) -> tuple[CorpusItem, CorpusItem]:
    rng = np.random.default_rng(seed)
    return (make_item("gaussian", rng, spread), make_item("gaussian", rng, spread))
