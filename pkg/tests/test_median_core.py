from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from medloc.median_core import (
    EmptyMultisetError,
    WeightedMultiset,
    WeightedPoint,
    closest_median,
    is_weighted_median,
    m_p,
    median_of_points,
)
from medloc.tree_metric import TreeMetric, Vertex, path_graph
from oracles import brute_closest_median, brute_median_set
from strategies import points, weighted_multisets

F = Fraction


@pytest.fixture
def unit():
    return TreeMetric(["0", "1"], [("0", "1", 1)])


@pytest.fixture
def line2():
    return TreeMetric(["0", "1", "2"], [("0", "1", 1), ("1", "2", 1)])


def V(x):
    return Vertex(x)


class TestMultiset:
    def test_total_weight_counts_multiplicity(self):
        S = WeightedMultiset([(V("a"), 2), (V("a"), 2), (V("b"), F(1, 2))])
        assert S.total_weight() == F(9, 2)
        assert S.multiplicity(WeightedPoint(V("a"), 2)) == 2
        assert len(S) == 3

    def test_union_and_difference_semantics(self):
        S = WeightedMultiset([(V("a"), 1), (V("a"), 1)])
        T = WeightedMultiset([(V("a"), 1), (V("a"), 1), (V("a"), 1), (V("b"), 1)])
        assert (S | T).multiplicity(WeightedPoint(V("a"), 1)) == 5
        diff = S - T
        assert not diff and diff.total_weight() == 0
        assert (T - S).total_weight() == 2

    def test_weight_must_be_positive(self):
        with pytest.raises(ValueError):
            WeightedPoint(V("a"), 0)

    def test_at_selects_location(self):
        S = WeightedMultiset([(V("a"), 1), (V("b"), 3)])
        assert S.at(V("b")).total_weight() == 3


class TestMp:
    def test_single_point(self, unit):
        assert m_p(unit, [(V("0"), 1)], V("0")) == 0

    def test_midpoint(self, unit):
        S = [(V("0"), 1), (V("1"), 1)]
        assert m_p(unit, S, unit.point("0", "1", F(1, 2))) == 1

    def test_far_end(self, line2):
        assert m_p(line2, [(V("0"), 3), (V("2"), 2)], V("2")) == 3

    def test_empty(self, unit):
        with pytest.raises(EmptyMultisetError):
            m_p(unit, [], V("0"))


class TestIsWeightedMedian:
    def test_midpoint(self, unit):
        assert is_weighted_median(unit, [(V("0"), 1), (V("1"), 1)], unit.point("0", "1", F(1, 2)))

    def test_line(self, line2):
        S = [(V("0"), 3), (V("2"), 2)]
        assert is_weighted_median(line2, S, V("0"))
        assert not is_weighted_median(line2, S, V("2"))

    def test_star(self):
        star = TreeMetric(["c", "x", "y", "w"], [("c", "x", 1), ("c", "y", 1), ("c", "w", 1)])
        S = [(V("x"), 1), (V("y"), 1), (V("w"), 1)]
        assert is_weighted_median(star, S, V("c"))
        assert not any(is_weighted_median(star, S, V(leaf)) for leaf in "xyw")


class TestClosestMedian:
    def test_endpoint_nearest_z(self, unit):
        assert closest_median(unit, [(V("0"), 1), (V("1"), 1)], V("0")).chosen == V("0")

    def test_z_inside_median_set(self, unit):
        z = unit.point("0", "1", F(7, 10))
        assert closest_median(unit, [(V("0"), 1), (V("1"), 1)], z).chosen == z

    def test_unique_median_regardless_of_z(self, line2):
        res = closest_median(line2, [(V("0"), 3), (V("2"), 2)], V("2"))
        assert res.chosen == V("0")
        assert res.m_value == 2
        assert (V("0"), True) in res.candidates

    def test_empty(self, unit):
        with pytest.raises(EmptyMultisetError):
            closest_median(unit, [], V("0"))


class TestMedianOfPoints:
    def test_majority(self, line2):
        for z in ("0", "1", "2"):
            assert median_of_points(line2, [V("0"), V("0"), V("1")], V(z)) == V("0")

    def test_five_points(self, line2):
        pts = [V("0"), V("0"), V("1"), V("2"), V("2")]
        for z in ("0", "2"):
            assert median_of_points(line2, pts, V(z)) == V("1")

    def test_single(self, line2):
        p = line2.point("1", "2", F(1, 3))
        assert median_of_points(line2, [p], V("0")) == p


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(weighted_multisets(), st.data())
    def test_closest_median_matches_cost_brute_force(self, ms, data):
        m, pairs = ms
        z = data.draw(points(m))
        assert closest_median(m, pairs, z).chosen == brute_closest_median(m, pairs, z)

    @settings(max_examples=200, deadline=None)
    @given(weighted_multisets())
    def test_predicate_equals_optimality(self, ms):
        m, pairs = ms
        meds, _ = brute_median_set(m, pairs)
        cands = {V(v) for v in m.vertices} | {p for p, _ in pairs}
        for x in cands:
            assert is_weighted_median(m, pairs, x) == (x in meds)

    @settings(max_examples=200, deadline=None)
    @given(weighted_multisets(max_size=5), st.data())
    def test_median_movement(self, ms, data):
        # replace one equal-weight entry by another location
        m, pairs = ms
        z = data.draw(points(m))
        i = data.draw(st.integers(0, len(pairs) - 1))
        old, w = pairs[i]
        new = data.draw(points(m))
        moved = pairs[:i] + [(new, w)] + pairs[i + 1:]
        q = closest_median(m, pairs, z).chosen
        q2 = closest_median(m, moved, z).chosen
        assume(q != q2)
        assert m.on_path(q, old, new) and m.on_path(q2, old, new)
        assert m.distance(old, q) < m.distance(old, q2)

    def test_multiset_and_pairs_agree(self):
        m = path_graph([1, 2, 3])
        S = WeightedMultiset([(V("v0"), 1), (V("v3"), 2), (V("v1"), 1)])
        assert closest_median(m, S, V("v0")) == closest_median(m, list(S), V("v0"))
