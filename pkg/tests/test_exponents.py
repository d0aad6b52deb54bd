from fractions import Fraction as F

import pytest

from bhtlab.exponents import (INF, ExponentPair, closure_search, dual_pairs, in_theorem_region,
                              interpolate, seed_lattice)


def P(p1, p2):
    return ExponentPair.of(p1, p2)


def keys(pairs):
    return {q.key for q in pairs}


class TestPair:
    def test_p_identity(self):
        q = P(3, F(3, 2))
        assert q.p == 1 and 1 / q.p == 1 / q.p1 + 1 / q.p2

    def test_infinity(self):
        q = P(2, INF)
        assert q.p2 is INF and q.p == 2

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            P(0, 2)


class TestRegion:
    def test_two_infinity(self):
        assert in_theorem_region(P(2, INF))

    def test_excluded_endpoints(self):
        assert not in_theorem_region(P(1, INF))
        assert not in_theorem_region(P(INF, 1))
        assert not in_theorem_region(P(INF, INF))

    def test_two_two(self):
        assert in_theorem_region(P(2, 2)) and P(2, 2).p == 1

    def test_p_lower_bound(self):
        assert not in_theorem_region(P(F(4, 3), F(4, 3)))
        assert in_theorem_region(P(F(7, 5), F(7, 5)))


class TestDual:
    def test_fixed_point(self):
        assert keys(dual_pairs(P(3, 3))) == {P(3, 3).key}

    def test_two_two(self):
        assert keys(dual_pairs(P(2, 2))) == {P(2, INF).key, P(INF, 2).key}

    def test_four_two(self):
        assert keys(dual_pairs(P(4, 2))) == {P(4, 4).key, P(4, 2).key}

    def test_needs_p_at_least_one(self):
        with pytest.raises(ValueError):
            dual_pairs(P(F(3, 2), F(3, 2)))

    def test_first_projection_involution(self):
        for q in (P(3, 4), P(5, F(5, 2)), P(6, 7)):
            once = next(d for d in dual_pairs(q) if d.r1 == q.r1)
            back = next(d for d in dual_pairs(once) if d.r1 == q.r1)
            assert back.key == q.key


class TestInterpolate:
    def test_two_two(self):
        assert interpolate(P(3, 3), P(F(3, 2), F(3, 2)), F(1, 2)).key == P(2, 2).key

    def test_near_endpoints(self):
        a, b = P(3, 3), P(F(3, 2), F(3, 2))
        for t in (F(1, 100), F(99, 100)):
            q = interpolate(a, b, t)
            assert abs(q.r1 - (t * a.r1 + (1 - t) * b.r1)) == 0
        assert abs(interpolate(a, b, F(99, 100)).r1 - a.r1) == F(1, 100) * abs(a.r1 - b.r1)

    def test_self(self):
        a = P(5, F(7, 3))
        for t in (F(1, 7), F(1, 2), F(5, 6)):
            assert interpolate(a, a, t).key == a.key

    def test_segment(self):
        a, b = P(3, 5), P(F(5, 4), INF)
        q = interpolate(a, b, F(2, 7))
        lo1, hi1 = sorted((a.r1, b.r1))
        lo2, hi2 = sorted((a.r2, b.r2))
        assert lo1 <= q.r1 <= hi1 and lo2 <= q.r2 <= hi2

    def test_bad_theta(self):
        with pytest.raises(ValueError):
            interpolate(P(3, 3), P(2, 2), 1)


class TestClosure:
    def test_two_seeds_reach_two_infinity(self):
        rep = closure_search(6, seeds=[P(3, 3), P(F(3, 2), F(3, 2))])
        assert rep.reached(2, INF)
        assert rep.good[P(2, INF).key].step <= 2
        assert rep.good[P(2, 2).key].tag == "derived_interp"

    def test_five_five_reached(self):
        assert closure_search(10).reached(5, 5)

    def test_seeds_tagged(self):
        tags = {q.tag for q in seed_lattice(8)}
        assert tags == {"seed_prop1", "seed_prop2"}

    @pytest.mark.parametrize("rule", ["grid", "hull"])
    def test_nothing_below_two_thirds(self, rule):
        rep = closure_search(8, rule=rule)
        assert all(r1 + r2 < F(3, 2) for r1, r2 in rep.good)

    def test_monotone_in_resolution(self):
        c = [closure_search(N).coverage() for N in (4, 8)]
        assert c[0] <= c[1]

    def test_rows_format(self):
        rep = closure_search(6, seeds=[P(3, 3), P(F(3, 2), F(3, 2))])
        row = next(r for r in rep.rows() if r[:4] == (2, 1, 1, 0))
        assert row[4] == "derived_dual"

    def test_bad_rule(self):
        with pytest.raises(ValueError):
            closure_search(4, rule="fill")
