import itertools

import numpy as np
import pytest

from bhtlab.tile_geometry import (Interval, Grid, Rect, Tile, Tree, freq_not_prec, grid_check,
                                  is_tree, maximal_rects, rect_leq, tiles_from_text, tiles_to_text,
                                  tree_base, trees_from_maximal)


def R(a, b, c, d):
    return Rect(Interval(a, b), Interval(c, d))


def tile(I, w, tid=0):
    om = (Interval(*w), Interval(w[0] + 10, w[1] + 10), Interval(w[0] + 20, w[1] + 20))
    return Tile(0, 0, 0, Interval(*I), om, tid=tid)


class TestInterval:
    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Interval(1.0, 1.0)

    def test_length_center(self):
        iv = Interval(-1.0, 3.0)
        assert iv.length == 4.0 and iv.center == 1.0

    def test_half_open_intersection(self):
        assert not Interval(0, 1).intersects(Interval(1, 2))
        assert Interval(0, 1).intersects(Interval(0.5, 2))

    def test_dilate_is_concentric(self):
        iv = Interval(2, 4).dilate(4)
        assert (iv.left, iv.right) == (-1.0, 7.0)

    def test_scale_negative_reverses(self):
        iv = Interval(1, 2).scale(-2)
        assert (iv.left, iv.right) == (-4.0, -2.0)

    def test_distance(self):
        d = Interval(0, 1).distance(np.array([-2.0, 0.5, 3.0]))
        assert d.tolist() == [2.0, 0.0, 2.0]


class TestOrder:
    def test_strict_time_inclusion(self):
        assert rect_leq(R(0, 1, 0, 2), R(0, 2, 0, 2))

    def test_reflexive(self):
        assert rect_leq(R(0, 1, 0, 2), R(0, 1, 0, 2))

    def test_time_not_included(self):
        assert not rect_leq(R(0, 2, 0, 1), R(0, 1, 0, 4))

    def test_antisymmetric_on_random_dyadic_rects(self, rng):
        for _ in range(200):
            rs = []
            for _ in range(2):
                d1, d2 = rng.integers(0, 3, size=2)
                m1, m2 = rng.integers(0, 2 ** d1), rng.integers(0, 2 ** d2)
                rs.append(R(m1 / 2 ** d1, (m1 + 1) / 2 ** d1, m2 / 2 ** d2, (m2 + 1) / 2 ** d2))
            if rect_leq(rs[0], rs[1]) and rect_leq(rs[1], rs[0]):
                assert rs[0].time.same(rs[1].time) and rs[0].freq.same(rs[1].freq)


class TestFreqNotPrec:
    def test_separated(self):
        assert not freq_not_prec(Interval(0, 1), Interval(2, 3))

    def test_overlap(self):
        assert freq_not_prec(Interval(0, 1), Interval(0.5, 2))

    def test_touching_boundary(self):
        assert not freq_not_prec(Interval(0, 1), Interval(1, 2))


class TestGridCheck:
    def test_nested_and_disjoint(self):
        assert grid_check([Interval(0, 1), Interval(0, 2), Interval(4, 8)])

    def test_proper_overlap(self):
        assert not grid_check([Interval(0, 2), Interval(1, 3)])

    def test_dyadic_three_scales(self):
        ivs = [Interval(m * 2 ** d, (m + 1) * 2 ** d) for d in range(3) for m in range(8 // 2 ** d)]
        assert grid_check(ivs)

    def test_matches_pairwise_oracle(self, rng):
        for _ in range(100):
            ivs = []
            for _ in range(6):
                a = float(rng.integers(0, 8))
                ivs.append(Interval(a, a + float(rng.integers(1, 4))))
            pairwise = all(not a.intersects(b) or a.contains(b) or b.contains(a)
                           for a, b in itertools.combinations(ivs, 2))
            assert grid_check(ivs) == pairwise

    def test_grid_unique(self):
        g = Grid([Interval(0, 1), Interval(0, 1), Interval(1, 2)]).unique()
        assert len(g) == 2


class TestTrees:
    def test_singleton(self):
        s = tile((0, 1), (0, 1))
        assert is_tree([s], 1) and tree_base([s], 1) is s

    def test_disjoint_pair_is_not_a_tree(self):
        a, b = tile((0, 1), (0, 1), 0), tile((2, 3), (2, 3), 1)
        assert not is_tree([a, b], 1)
        with pytest.raises(ValueError):
            tree_base([a, b], 1)

    def test_chain(self):
        small, big = tile((0, 1), (0, 1), 0), tile((0, 2), (0, 2), 1)
        assert is_tree([small, big], 1) and tree_base([small, big], 1) is big

    def test_tree_J_is_base_interval(self):
        small, big = tile((0, 1), (0, 1), 0), tile((0, 2), (0, 2), 1)
        T = Tree((small, big), 1, big)
        assert T.J.same(big.I)

    def test_tree_rejects_non_dominating_base(self):
        small, big = tile((0, 1), (0, 1), 0), tile((0, 2), (0, 2), 1)
        with pytest.raises(ValueError):
            Tree((small, big), 1, small)

    def test_maximal_cover(self):
        ts = [tile((0, 1), (0, 1), 0), tile((0, 2), (0, 2), 1), tile((4, 5), (4, 5), 2)]
        trees = trees_from_maximal(ts, 1)
        assert sorted(len(T) for T in trees) == [1, 2]
        assert len(maximal_rects(ts, 1)) == 2


def test_tile_text_round_trip():
    ts = [tile((0, 1), (0, 1), 0), tile((0.25, 0.5), (3, 3.5), 1)]
    back = tiles_from_text(tiles_to_text(ts))
    assert tiles_to_text(back) == tiles_to_text(ts)
    assert all(a.I.same(b.I) for a, b in zip(ts, back))


def test_omegas_and_nesting():
    s = tile((0, 1), (0, 1))
    assert s.omegas_disjoint()
    assert s.nested_in([Interval(-1, 40)])
    assert not s.nested_in([Interval(-1, 5)])
