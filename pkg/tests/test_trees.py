import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from bhtlab.function_core import SampledFunction
from bhtlab.maximal import hl_maximal
from bhtlab.tile_geometry import Interval, Tile, Tree
from bhtlab.trees import (Forest, SelectionParams, audit_replay, calibrate_lambda0, classify_tree,
                          counting_function, eta_param, forest_to_text, khinchine_average,
                          khinchine_lower, layer_select, residual_bounds_check, residual_sweep,
                          select_trees, separate_families, superlevel_measure, synthetic_instance,
                          tree_count_scaling, tree_cz_decompose, tree_l2_from_l1,
                          tree_square_function, trilinear_form, vacuity_holds, walsh_family)
from bhtlab.wave_packets import AlphaParams, assign_tiles


def mk(I, w, coeffs=(0, 0, 0), tid=0):
    om = tuple(Interval(w[0] + 3 * r, w[1] + 3 * r) for r in range(3))
    return Tile(0, 0, 0, Interval(*I), om, coeffs=tuple(complex(c) for c in coeffs), tid=tid)


def dyadic_forest(rng, n, depth=4):
    out = []
    for _ in range(n):
        d = int(rng.integers(0, depth + 1))
        m = int(rng.integers(0, 2 ** d))
        out.append(Interval(m * 2.0 ** -d * 16, (m + 1) * 2.0 ** -d * 16))
    return out


PRM = SelectionParams.build(1.6, 1.6, 1.6)


class TestEta:
    def test_one_point_six(self):
        assert eta_param(1.6, 1.6, 1.6) == Fraction(1, 22)

    def test_paper_prefactor(self):
        eta = eta_param(1.6, 1.6, 1.6, Fraction(1, 2 ** 100))
        bound = Fraction(3, 64) / 2 ** 100
        assert eta == Fraction(1, math.ceil(1 / bound))
        assert SelectionParams.build(1.6, 1.6, 1.6, mode="paper").eta == eta

    def test_boundary(self):
        with pytest.raises(ValueError):
            eta_param(1.5, 1.5, 1.5)

    def test_paper_mode_not_executable(self):
        with pytest.raises(ValueError):
            select_trees([], SelectionParams.build(1.6, 1.6, 1.6, mode="paper"))

    def test_vacuous_level(self):
        assert PRM.k_vacuous == 484


class TestSelection:
    def test_zero_coefficients(self):
        tiles = [mk((0, 1), (0, 1), tid=0), mk((1, 2), (0, 1), tid=1)]
        res = select_trees(tiles, PRM)
        assert res.trees() == [] and len(res.remaining) == 2

    def test_missing_coefficients(self):
        s = Tile(0, 0, 0, Interval(0, 1), (Interval(0, 1), Interval(3, 4), Interval(6, 7)))
        with pytest.raises(ValueError):
            select_trees([s], PRM)

    def test_single_tile_threshold(self):
        prm = SelectionParams.build(1.6, 1.6, 1.6, eta_prefactor=5)
        I = 4.0
        s = mk((0, I), (0, 1), (2 ** -3.5 * math.sqrt(I), 0, 0))
        res = select_trees([s], prm)
        k = res.first_k()
        assert prm.thr35(k, 1) <= 2 ** -3.5 < prm.thr35(k - 1, 1)
        (T,) = res.trees()
        assert T.meta["condition"] == "35" and T.iota == 1

    def test_unit_coefficient_at_zero(self):
        s = mk((0, 4), (0, 1), (2.0, 0, 0))
        assert select_trees([s], PRM).first_k() == 0

    @pytest.mark.parametrize("seed", range(3))
    def test_random_instance(self, seed):
        prm = SelectionParams.build(1.6, 1.6, 1.6, eta_prefactor=5)
        rng = np.random.default_rng(seed)
        tiles, prof = synthetic_instance(rng, 50, prm)
        res = select_trees(tiles, prm)
        assert residual_sweep(tiles, res) == []
        assert audit_replay(tiles, res)
        # completeness: what survives has a vanishing product
        assert all(np.prod([abs(c) for c in s.coeffs]) == 0 for s in res.remaining)
        for (k, iota, j), forest in res.forests.items():
            if iota == j:
                rects = [T.base.rect(iota) for T in forest.trees]
                assert not any(a.intersects(b) for a, b in itertools.combinations(rects, 2))

    def test_vacuity_and_calibration(self):
        prm = SelectionParams.build(1.6, 1.6, 1.6, eta_prefactor=5)
        rng = np.random.default_rng(7)
        tiles, prof = synthetic_instance(rng, 40, prm, loud=0.3)
        lam, kept = calibrate_lambda0(tiles, prof, prm)
        assert vacuity_holds(kept, prm)
        if math.isfinite(lam):
            assert not vacuity_holds([s for s, v in zip(tiles, prof) if v <= lam], prm)
        res = select_trees(kept, prm)
        assert res.first_k() is None or res.first_k() > prm.k_vacuous

    def test_forest_text(self):
        s = mk((0, 4), (0, 1), (2.0, 0, 0), tid=7)
        res = select_trees([s], PRM)
        f = res.forests[(0, 1, 1)]
        assert forest_to_text(f).splitlines()[1] == "7 7"


class TestResidual:
    def test_planted_violation(self):
        good = mk((0, 1), (0, 1), (1e-9, 1e-9, 1e-9), tid=0)
        bad = mk((1, 2), (0, 1), (1e-9, 0.5, 1e-9), tid=1)
        v = residual_bounds_check([good, bad], 20, PRM)
        assert [x for x in v if x[0] == "40"] == [("40", 1, 2)]

    def test_empty(self):
        assert residual_bounds_check([], 5, PRM) == []


class TestTrilinear:
    def test_single_tile(self):
        assert trilinear_form([mk((0, 4), (0, 1), (1, 1, 1))]) == 0.5

    def test_exceptional_domain(self):
        assert trilinear_form([mk((0, 4), (0, 1), (1, 1, 1))], [Interval(-1, 2), Interval(2, 5)]) == 0.0


class TestCounting:
    def test_nested_values(self):
        g = SampledFunction(np.zeros(4), 0.0, 0.25)
        N = counting_function([Interval(0, 1), Interval(0, 0.5)], g).values
        assert N.samples[1] == 2 and N.samples[3] == 1

    def test_integral(self, rng):
        ivs = dyadic_forest(rng, 20)
        g = SampledFunction.on_grid(32, 4096)
        N = counting_function(ivs, g).values
        assert np.sum(N.samples) * g.dx == pytest.approx(sum(iv.length for iv in ivs))
        assert superlevel_measure(ivs, 1) >= superlevel_measure(ivs, 2) >= superlevel_measure(ivs, 3)

    def test_layer_nested(self):
        ivs = [Interval(0, 4), Interval(0, 2), Interval(1, 2), Interval(8, 9)]
        assert layer_select(ivs, 1) == [0, 3]

    def test_layer_already_thin(self):
        ivs = [Interval(0, 1), Interval(2, 3)]
        assert layer_select(ivs, 2) == [0, 1]

    @pytest.mark.parametrize("seed", range(20))
    def test_layer_postconditions(self, seed):
        rng = np.random.default_rng(seed)
        ivs = dyadic_forest(rng, 30)
        lam = int(rng.integers(1, 4))
        keep = layer_select(ivs, lam)
        g = SampledFunction.on_grid(64, 1 << 12)
        full = counting_function(ivs, g).values.samples
        part = counting_function([ivs[r] for r in keep], g).values.samples
        assert np.array_equal(full >= lam, part >= lam) and part.max() <= lam


class TestSeparate:
    def tree(self, I, w, tid):
        s = mk(I, w, tid=tid)
        return Tree((s,), 1, s)

    def test_identical_bases_split(self):
        a, b = self.tree((0, 1), (0, 1), 0), self.tree((0, 1), (0, 1), 1)
        classes, left, _ = separate_families([a, b], 2)
        assert len(classes) == 2 and not left

    def test_separated_single_class(self):
        ts = [self.tree((10 * r, 10 * r + 1), (r, r + 0.5), r) for r in range(4)]
        classes, left, ratio = separate_families(ts, 2)
        assert len(classes) == 1 and left == [] and ratio == 0

    def test_cap_fills_leftover(self):
        ts = [self.tree((0, 1), (0, 1), r) for r in range(3)]
        classes, left, ratio = separate_families(ts, 2, max_classes=2)
        assert len(left) == 1 and ratio == 1.0

    def test_rejects_small_A(self):
        with pytest.raises(ValueError):
            separate_families([], 1.0)


class TestSquareFunctions:
    params = AlphaParams(1, 4)

    def test_single_tile(self):
        g = SampledFunction.on_grid(8, 64)
        s = mk((0, 4), (0, 1), (0, 3.0, 0))
        sf = tree_square_function([s], None, 2, template=g).samples
        inside = s.I.contains_point(g.x)
        assert np.allclose(sf[inside], 1.5) and not np.any(sf[~inside])

    def test_orthogonal_input(self):
        s = assign_tiles(self.params, (0, 0, 0), 1, 0, 0)
        g = SampledFunction.on_grid(64, 4096)
        f = g.like(np.exp(-np.pi * g.x ** 2) * np.exp(2j * np.pi * 5 * g.x))
        assert np.abs(tree_square_function([s], f, 3).samples).max() < 1e-12

    def test_localized_bound(self):
        g = SampledFunction.on_grid(256, 1 << 14)
        f = g.like(np.where(np.abs(g.x - 60) < 2, 1.0, 0.0))
        tiles = [assign_tiles(self.params, (0, 0, l), 1, 0, 0) for l in range(-3, 4)]
        J = tiles[0].I
        sf = tree_square_function(tiles, f, 3).samples
        Mf = hl_maximal(f, dyadic=True).samples
        inJ = J.contains_point(g.x)
        assert not np.any(sf[~inJ])
        assert np.all(sf[inJ] <= 10 * Mf[inJ])

    def test_l2_from_l1_single_tile(self):
        s = mk((0, 4), (0, 1), (0, 2.0, 0))
        out = tree_l2_from_l1(Tree((s,), 1, s), 2)
        assert out["ratio"] == pytest.approx(1.0)

    def test_l2_from_l1_zero(self):
        s = mk((0, 4), (0, 1))
        out = tree_l2_from_l1(Tree((s,), 1, s), 2)
        assert (out["lhs"], out["rhs"], out["ratio"]) == (0.0, 0.0, 0.0)


class TestCZ:
    grid = [Interval(m * 2.0 ** -d * 8, (m + 1) * 2.0 ** -d * 8) for d in range(5) for m in range(2 ** d)]

    def test_below_threshold(self):
        f = SampledFunction(np.full(64, 0.1), 0.0, 0.125)
        g, parts = tree_cz_decompose(f, 1.0, self.grid, lambda x: np.ones_like(x))
        assert parts == [] and np.array_equal(g.samples, f.samples)

    def test_multiple_of_theta(self):
        th = lambda x: np.exp(2j * np.pi * 0.7 * x)
        x = np.arange(64) * 0.125
        v = np.where(x < 1, 5 * th(x), 0)
        f = SampledFunction(v, 0.0, 0.125)
        g, parts = tree_cz_decompose(f, 3.0, self.grid, th)
        assert parts and all(np.abs(b.samples).max() < 1e-12 for _, b, _ in parts)

    def test_orthogonality(self, rng):
        th = lambda x: np.exp(2j * np.pi * 1.3 * x)
        for _ in range(10):
            f = SampledFunction(rng.standard_cauchy(64) + 1j * rng.normal(size=64), 0.0, 0.125)
            g, parts = tree_cz_decompose(f, 2.0, self.grid, th)
            for J, b, _ in parts:
                m = J.contains_point(f.x)
                assert abs(np.sum(b.samples[m] * np.conj(th(f.x[m])))) * f.dx < 1e-12
            assert np.allclose(g.samples + sum(b.samples for _, b, _ in parts), f.samples)

    def test_rejects(self):
        with pytest.raises(ValueError):
            tree_cz_decompose(SampledFunction(np.ones(4), 0, 1), 0.0, [], lambda x: x)


class TestKhinchine:
    template = SampledFunction.on_grid(32, 4096)

    def tiles(self, cs, lens=(4, 4)):
        return [mk((0, L), (0, 1), (0, c, 0), tid=r) for r, (c, L) in enumerate(zip(cs, lens))]

    def test_walsh_orthonormal(self):
        ts = [mk((0, 4), (0, 1), tid=0), mk((0, 2), (0, 1), tid=1), mk((2, 4), (0, 1), tid=2)]
        H = np.array([h.samples for h in walsh_family(ts, self.template)])
        G = H @ H.T * self.template.dx
        assert np.allclose(G, np.eye(3))
        for h, s in zip(H, ts):
            m = h != 0
            assert np.allclose(np.abs(h[m]), s.I.length ** -0.5)

    def test_single_tile_exact(self):
        ts = self.tiles([3.0], [4])
        out = khinchine_average(ts, None, 2, 1.5, 10, None, template=self.template)
        assert out["stderr"] == 0 and out["average"] == pytest.approx(3.0 ** 1.5 * 4 ** (1 - 0.75))

    def test_two_tiles_bracket(self):
        out = khinchine_average(self.tiles([1.0, 1.0]), None, 2, 1.2, 10, None, template=self.template)
        assert out["exact"] and out["lower"] <= out["average"] <= out["upper"] and out["ok"]

    def test_parseval(self, rng):
        cs = rng.normal(size=6)
        ts = [mk((0, 4), (0, 1), (0, c, 0), tid=r) for r, c in enumerate(cs)]
        out = khinchine_average(ts, None, 2, 2.0, 10, rng, template=self.template)
        assert abs(out["average"] - np.sum(cs ** 2)) < 1e-10

    def test_lower_constant(self):
        assert khinchine_lower(2.0, False) == pytest.approx(1.0)
        assert khinchine_lower(1.0, False) == pytest.approx(2 ** -0.5)


class TestClassify:
    def test_singleton(self):
        s = mk((0, 4), (0, 1))
        out = classify_tree(Tree((s,), 1, s), 0, Fraction(1, 22))
        assert out["min"] == [s] and out["fat"] == [s] and out["nice"] == []

    def test_boundary(self):
        base = mk((0, 64), (0, 1), tid=0)
        centre = Tile(0, 0, 0, Interval(31.5, 32.5), tuple(Interval(0.25 + 3 * r, 0.5 + 3 * r) for r in range(3)),
                      coeffs=(0, 0, 0), tid=1)
        edge = Tile(0, 0, 0, Interval(0, 1), tuple(Interval(0.25 + 3 * r, 0.5 + 3 * r) for r in range(3)),
                    coeffs=(0, 0, 0), tid=2)
        T = Tree((base, centre, edge), 1, base)
        out = classify_tree(T, 400, Fraction(1, 22))
        assert centre not in out["boundary"] and edge in out["boundary"]
        assert base in out["fat"]


class TestCountScaling:
    def test_empty_rows(self):
        res = select_trees([mk((0, 1), (0, 1))], PRM)
        out = tree_count_scaling([res], [1, 2])
        assert all(r[3] == 0 for r in out["rows"])

    def test_planted_one_per_k(self):
        s = mk((0, 1), (0, 1), (1, 0, 0))
        T = Tree((s,), 1, s)
        fake = type("R", (), {})()
        fake.params = PRM
        fake.forests = {(k, 1, 1): Forest([T], k, 1, 1, 0.0) for k in range(1, 5)}
        out = tree_count_scaling([fake], range(1, 5))
        rows = [r for r in out["rows"] if r[1:3] == (1, 1)]
        assert all(r[3] == 1 and r[3] <= 2 ** r[4] for r in rows)
        assert out["fits"][(1, 1)]["ok"]
