import math

import numpy as np
import pytest

from bhtlab.function_core import SampledFunction, lp_norm
from bhtlab.maximal import (bmo_norm, exceptional_set, expanded_exceptional_measure,
                            fefferman_stein_ratio, hl_maximal, maximal_profile,
                            normalize_dualizer, p_maximal, sharp_maximal, smoothstep_cutoff,
                            superlevel_intervals, tail_estimate_check, theta_dualizer,
                            weighted_norm)
from bhtlab.tile_geometry import Interval
from bhtlab.wave_packets import AlphaParams, assign_tiles, default_lambdas

from conftest import gaussian


def indicator(length=8.0, n=256, a=0.0, b=1.0):
    g = SampledFunction.on_grid(length, n)
    return g.like(((g.x >= a) & (g.x < b)).astype(float))


def brute_maximal(v):
    n = v.size
    out = np.zeros(n)
    for i in range(n):
        for j in range(i, n):
            m = v[i:j + 1].mean()
            out[i:j + 1] = np.maximum(out[i:j + 1], m)
    return out


def dyadic_grid(x0, length, depth):
    return [Interval(x0 + m * length / 2 ** d, x0 + (m + 1) * length / 2 ** d)
            for d in range(depth + 1) for m in range(2 ** d)]


class TestHardyLittlewood:
    def test_indicator_average(self):
        f = indicator()
        x = f.x
        i = int(np.argmin(np.abs(x - 2.0)))
        assert hl_maximal(f).samples[i] >= 1 / 3 - 1e-12

    def test_matches_brute_force(self, rng):
        v = np.abs(rng.normal(size=60))
        f = SampledFunction(v, 0.0, 0.1)
        assert np.allclose(hl_maximal(f).samples, brute_maximal(v))

    def test_dominates_and_homogeneous(self, rng):
        f = SampledFunction(rng.normal(size=128), -1.0, 0.05)
        M = hl_maximal(f).samples
        assert np.all(M >= np.abs(f.samples) - 1e-12)
        assert np.allclose(hl_maximal(f * -3.0).samples, 3 * M)

    def test_sublinear(self, rng):
        f = SampledFunction(rng.normal(size=128), 0.0, 0.1)
        g = f.like(rng.normal(size=128))
        assert np.all(hl_maximal(f + g).samples <= hl_maximal(f).samples + hl_maximal(g).samples + 1e-12)

    def test_dyadic_is_below_exact(self, rng):
        f = SampledFunction(np.abs(rng.normal(size=256)), 0.0, 0.1)
        d, e = hl_maximal(f, dyadic=True).samples, hl_maximal(f).samples
        assert np.all(d <= e + 1e-12) and np.all(d >= np.abs(f.samples) - 1e-12)


class TestPMaximal:
    def test_p_one(self, rng):
        f = SampledFunction(rng.normal(size=64), 0.0, 0.1)
        assert np.allclose(p_maximal(f, 1).samples, hl_maximal(f).samples)

    def test_monotone_in_p(self, rng):
        f = SampledFunction(rng.normal(size=128), 0.0, 0.1)
        v = [p_maximal(f, p).samples for p in (1.0, 1.5, 2.0)]
        assert np.all(v[0] <= v[1] + 1e-12) and np.all(v[1] <= v[2] + 1e-12)

    def test_constant(self):
        f = SampledFunction(np.full(64, 2.5), 0.0, 0.1)
        assert np.allclose(p_maximal(f, 1.7).samples, 2.5)

    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            p_maximal(gaussian(), 0.9)

    def test_profile_nonnegative(self, rng):
        prof = maximal_profile(SampledFunction(rng.normal(size=64), 0.0, 0.1), 2.0)
        assert prof.p == 2.0 and np.all(prof.values.samples >= 0)


class TestExceptionalSet:
    def normalized(self, p, width=1.0, center=0.0):
        f = gaussian(32, 512, center, width)
        return f * (1 / lp_norm(f, p))

    def test_extremes(self):
        f = self.normalized(2.0)
        top = maximal_profile(f, 2.0).values.samples.max()
        ivs, m = exceptional_set([f, None], [2.0, 2.0], top * 1.01)
        assert ivs == [] and m == 0.0
        ivs, m = exceptional_set([f, None], [2.0, 2.0], 1e-12)
        assert len(ivs) == 1 and m == pytest.approx(f.length)

    def test_monotone_in_lambda(self):
        f1, f2 = self.normalized(1.5), self.normalized(2.0, 0.5, 3.0)
        prev = None
        for lam in (0.05, 0.1, 0.3, 1.0):
            ivs, m = exceptional_set([f1, f2], [1.5, 2.0], lam)
            if prev is not None:
                assert all(any(P.contains(I) for P in prev) for I in ivs)
            prev = ivs

    def test_requires_normalized(self):
        with pytest.raises(ValueError):
            exceptional_set([gaussian() * 3.0], [2.0], 0.5)

    def test_weak_type_scaling(self):
        # dilates e^{-π(x/w)²} normalized in L^p: the envelope of |E| scales as λ^{-p}
        p = 1.5
        g = SampledFunction.on_grid(16, 1 << 15)
        lams = np.geomspace(0.5, 50, 7)
        env = np.zeros(lams.size)
        for w in np.geomspace(lams[-1] ** -p / 2, 2 * lams[0] ** -p, 12):
            f = g.like(np.exp(-np.pi * (g.x / w) ** 2))
            f = f * (1 / lp_norm(f, p))
            prof = maximal_profile(f, p, dyadic=True).values.samples
            env = np.maximum(env, [(prof >= lam).sum() * g.dx for lam in lams])
        slope = -np.polyfit(np.log(lams), np.log(env), 1)[0]
        assert abs(slope - p) <= 0.2 * p

    def test_superlevel_intervals(self):
        g = SampledFunction.on_grid(8, 8)
        ivs = superlevel_intervals(g, np.array([0, 1, 1, 0, 0, 1, 0, 1], bool))
        assert [(I.left, I.right) for I in ivs] == [(-3, -1), (1, 2), (3, 4)]

    def test_expanded_set(self):
        g = SampledFunction.on_grid(16, 256)
        E0 = [Interval(0, 1)]
        grid = dyadic_grid(-8, 16, 6)
        me, m0 = expanded_exceptional_measure(E0, grid, g.x, g.dx)
        # [0, 1) is itself a grid interval, so E' = [-3/2, 5/2)
        assert m0 == pytest.approx(1.0) and me == pytest.approx(4.0)


class TestSharp:
    grid = dyadic_grid(0.0, 8.0, 4)

    def test_constant_is_zero(self):
        g = SampledFunction(np.full(64, 3.0), 0.0, 0.125)
        assert np.all(sharp_maximal(g, self.grid).samples == 0) and bmo_norm(g, self.grid) == 0

    def test_half_indicator(self):
        g = indicator(8.0, 64, 0.0, 4.0)
        g = SampledFunction(g.samples, 0.0, 0.125)
        # J = [0, 8): mean oscillation of 1_{[0,4)} is 1/2
        assert sharp_maximal(g, [Interval(0, 8)]).samples.min() == pytest.approx(0.5)
        assert bmo_norm(g, self.grid) == pytest.approx(0.5)

    def test_dominated_by_twice_maximal(self, rng):
        g = SampledFunction(rng.normal(size=64), 0.0, 0.125)
        assert np.all(sharp_maximal(g, self.grid).samples <= 2 * hl_maximal(g).samples + 1e-12)

    def test_fefferman_stein_ratio_bounded(self, rng):
        ratios = []
        for _ in range(10):
            v = np.zeros(128)
            v[40:56] = rng.normal(size=16)
            ratios.append(fefferman_stein_ratio(SampledFunction(v, 0.0, 1 / 16), dyadic_grid(0.0, 8.0, 7), 2.7))
        assert all(math.isfinite(r) for r in ratios) and max(ratios) < 10


class TestDualizer:
    def test_cutoff_shape(self):
        r = np.array([0.0, 0.8, 0.9, 0.95, 1.0, 2.0])
        c = smoothstep_cutoff(r, 0.1)
        assert c[0] == c[1] == 0 and c[-2] == c[-1] == 1 and 0 < c[3] < 1

    def test_small_input_vanishes(self):
        h = gaussian() * 0.5
        assert not np.any(theta_dualizer(h, 0.2).samples)

    def test_large_real_input(self):
        h = SampledFunction(np.full(16, 2.0), 0.0, 1.0)
        assert np.allclose(theta_dualizer(h, 0.2).samples, 1.0)

    def test_pairing_lower_bound(self, rng):
        h = SampledFunction(2 * (rng.normal(size=256) + 1j * rng.normal(size=256)), 0.0, 0.1)
        d = theta_dualizer(h, 0.3)
        val = np.sum(h.samples * d.samples) * h.dx
        assert abs(val.imag) < 1e-10
        assert val.real >= np.sum(np.abs(h.samples) >= 1) * h.dx

    def test_modulus_and_phase(self, rng):
        h = SampledFunction(rng.normal(size=256) + 1j * rng.normal(size=256), 0.0, 0.1)
        d = theta_dualizer(h, 0.3).samples
        nz = d != 0
        assert np.all(np.abs(d[nz]) <= 1 + 1e-12)
        assert np.allclose(np.angle(d[nz] * h.samples[nz]), 0, atol=1e-12)

    def test_normalization(self, rng):
        h = SampledFunction(2 * rng.normal(size=128), 0.0, 0.1)
        d = normalize_dualizer(theta_dualizer(h, 0.2), 3.0)
        assert lp_norm(d, 3.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            normalize_dualizer(h * 0.0, 3.0)
        with pytest.raises(ValueError):
            theta_dualizer(h, 1.0)


class TestWeightedNorm:
    J = Interval(-1, 1)

    def test_plain(self):
        f = gaussian()
        assert weighted_norm(f, self.J, 0, 2) == pytest.approx(lp_norm(f, 2))

    def test_inverse_below_plain(self, rng):
        f = SampledFunction(rng.normal(size=256), -8.0, 1 / 16)
        assert weighted_norm(f, self.J, 3, 1.5, inverse=True) <= lp_norm(f, 1.5)

    def test_far_support(self):
        f = indicator(64, 4096, 20.0, 20.0 + 1 / 64)
        D = 20.0 - 1.0
        ratio = weighted_norm(f, self.J, 2, 1) / lp_norm(f, 1)
        assert ratio == pytest.approx((1 + D) ** 2, rel=1e-2)

    def test_rejects(self):
        with pytest.raises(ValueError):
            weighted_norm(gaussian(), self.J, -1, 2)


def shared_tiles(params):
    return [assign_tiles(params, (0, 0, l), 1, 0, 0, tid=r) for r, l in enumerate(range(-2, 3))]


class TestTail:
    params = AlphaParams(1, 4)
    tiles = shared_tiles(params)

    def inputs(self, shift=0.0):
        g = SampledFunction.on_grid(256, 256 * 64)
        lam1, lam2 = default_lambdas(self.params)
        f1 = g.like(np.exp(-np.pi * (g.x - shift) ** 2) * np.exp(2j * np.pi * 0.5 * lam1(0) * g.x))
        f2 = g.like(np.exp(-np.pi * (g.x - 0.5) ** 2) * np.exp(2j * np.pi * 0.5 * lam2(0) * g.x))
        return f1 * (1 / lp_norm(f1, 2)), f2 * (1 / lp_norm(f2, 2))

    def test_empty(self):
        f1, f2 = self.inputs()
        out = tail_estimate_check([], f1, f2, [2, 4], 2, 2)
        assert out["ratios"] == [0.0, 0.0]

    def test_decay(self):
        f1, f2 = self.inputs()
        out = tail_estimate_check(self.tiles, f1, f2, [2.0, 4.0, 8.0, 16.0], 2, 2, dyadic=True)
        assert out["exponent"] >= 2
        assert all(b <= a for a, b in zip(out["ratios"], out["ratios"][1:]))

    def test_far_input(self):
        f1, f2 = self.inputs(shift=40.0)
        near = tail_estimate_check(self.tiles, *self.inputs(), [4.0], 2, 2, dyadic=True)
        far = tail_estimate_check(self.tiles, f1, f2, [4.0], 2, 2, dyadic=True)
        assert math.isfinite(far["ratios"][0]) and far["lhs"][0] < near["lhs"][0]

    def test_shared_interval_required(self):
        other = assign_tiles(self.params, (0, 100, 0), 1, 0, 0)
        f1, f2 = self.inputs()
        with pytest.raises(ValueError):
            tail_estimate_check(self.tiles + [other], f1, f2, [2.0], 2, 2)
