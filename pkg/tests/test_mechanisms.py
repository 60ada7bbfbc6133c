from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from medloc.instance_io import family_ex51, family_ex61, fig1_tree, sec6_example
from medloc.mechanisms import (
    HierarchyInstance,
    HierarchyNode,
    Instance,
    InstanceError,
    MetricShapeError,
    PointDistribution,
    get_mechanism,
    global_median,
    hierarchy_direct_median,
    instance_to_hierarchy,
    iwmm,
    line_position,
    mediator_medians,
    tprm,
    tprm_weights,
    trm,
    trm_from_medians,
    wmm,
)
from medloc.oracle import social_cost
from medloc.tree_metric import TreeMetric, Vertex
from oracles import brute_closest_median, brute_iwmm, overlap_tprm_weights
from strategies import hierarchies, instances, points

F = Fraction
V = Vertex


def unit_line():
    return TreeMetric(["0", "1"], [("0", "1", 1)])


def two_groups(a, b, z="0"):
    m = unit_line()
    return Instance(m, ((V("0"),) * a, (V("1"),) * b), V(z), (V(z), V(z)))


class TestInstance:
    def test_empty_mediator_rejected(self):
        with pytest.raises(InstanceError):
            Instance(unit_line(), ((),), V("0"), (V("0"),))

    def test_z_list_length(self):
        with pytest.raises(InstanceError):
            Instance(unit_line(), ((V("0"),),), V("0"), ())

    def test_distribution_must_sum_to_one(self):
        with pytest.raises(ValueError):
            PointDistribution(((V("0"), F(1, 2)),))
        with pytest.raises(ValueError):
            PointDistribution(((V("0"), F(1, 2)), (V("0"), F(1, 2))))

    def test_from_pairs_aggregates(self):
        d = PointDistribution.from_pairs([(V("1"), F(1, 4)), (V("0"), F(1, 2)), (V("1"), F(1, 4)), (V("2"), 0)])
        assert d.support == ((V("0"), F(1, 2)), (V("1"), F(1, 2)))


class TestWmm:
    def test_lower_bound_instance(self):
        inst = family_ex51(0, 1, 2, 1)
        out = wmm(inst)
        assert out.location == V("0")
        assert social_cost(inst.metric, inst.agents(), out.location) == 7

    def test_z_at_other_end(self):
        inst = family_ex51(0, 1, 2, 1, z=1)
        out = wmm(inst)
        assert out.location == V("1")
        assert social_cost(inst.metric, inst.agents(), out.location) == 3

    def test_single_mediator(self):
        m = unit_line()
        p = m.point("0", "1", F(1, 3))
        inst = Instance(m, ((p, p, V("1")),), V("1"), (V("0"),))
        assert wmm(inst).location == p

    @settings(max_examples=150, deadline=None)
    @given(instances())
    def test_matches_brute_force(self, inst):
        meds = [
            brute_closest_median(inst.metric, [(p, 1) for p in reports], zi)
            for reports, zi in zip(inst.mediators, inst.z_list)
        ]
        expected = brute_closest_median(inst.metric, list(zip(meds, inst.sizes)), inst.z)
        assert wmm(inst).location == expected


class TestTprm:
    def test_even_split(self):
        assert tprm(two_groups(4, 4)).distribution.as_dict() == {V("0"): F(1, 2), V("1"): F(1, 2)}

    def test_odd_n(self):
        assert tprm(two_groups(2, 3)).distribution.as_dict() == {V("0"): F(3, 10), V("1"): F(7, 10)}

    def test_single_agent(self):
        m = unit_line()
        p = m.point("0", "1", F(1, 2))
        d = tprm(Instance(m, ((p,),), V("0"), (V("0"),))).distribution
        assert d.support == ((p, F(1)),)

    def test_rejects_star(self):
        star = TreeMetric(["c", "x", "y", "w"], [("c", "x", 1), ("c", "y", 1), ("c", "w", 1)])
        inst = Instance(star, ((V("x"),),), V("c"), (V("c"),))
        with pytest.raises(MetricShapeError):
            tprm(inst)

    @pytest.mark.parametrize("n", range(1, 61))
    def test_weights_match_interval_overlap(self, n):
        w = tprm_weights(n)
        assert w == overlap_tprm_weights(n)
        assert sum(w) == 1 and all(0 <= x <= 1 for x in w)

    @settings(max_examples=150, deadline=None)
    @given(instances(path_only=True, max_mediators=5, max_agents=5))
    def test_gap_bounds(self, inst):
        # u-values left of the gap [t_i, t_{i+1}] number at most 2i, right of it at most 2(n - i)
        m = inst.metric
        pos = sorted(line_position(m, t) for t in inst.agents())
        u = [line_position(m, p) for p in tprm(inst).diagnostics["u"]]
        n = len(pos)
        for i in range(1, n):
            lo, hi = pos[i - 1], pos[i]
            assert sum(1 for x in u if x < hi) <= 2 * i
            assert sum(1 for x in u if x > lo) <= 2 * (n - i)


class TestTrm:
    def test_reference_tree_anchor_values(self):
        d = trm(fig1_tree()).distribution
        assert d.probability(V("B")) == F(1, 50)
        assert d.probability(V("E")) == F(1, 5)
        assert d.probability(V("R")) == F(12, 25)

    def test_reference_tree_derived_values(self):
        out = trm(fig1_tree())
        diag = out.diagnostics
        assert diag.root == V("R")
        assert diag.record(V("E")).treesize == 36
        assert diag.record(V("F")).treesize == 40
        assert diag.record(V("B")).treesize == 26
        assert diag.record(V("E")).size == 0 and diag.record(V("A")).size == 10
        assert out.distribution.as_dict() == {
            V("B"): F(1, 50), V("E"): F(1, 5), V("R"): F(12, 25), V("F"): F(1, 5), V("D"): F(1, 10),
        }

    def test_line_example(self):
        assert trm(two_groups(4, 4)).distribution.as_dict() == {V("0"): F(1, 2), V("1"): F(1, 2)}

    def test_single_mediator(self):
        m = unit_line()
        p = m.point("0", "1", F(2, 3))
        assert trm(Instance(m, ((p, V("0"), p),), V("0"), (V("1"),))).distribution.support == ((p, F(1)),)

    @settings(max_examples=200, deadline=None)
    @given(instances(max_mediators=6))
    def test_normalisation_and_records(self, inst):
        out = trm(inst)
        diag = out.diagnostics
        n = inst.n
        root = diag.record(diag.root)
        assert root.treesize == n and root.c == F(n, 2)
        total = F(0)
        for rec in diag.records:
            assert rec.in_x == (rec.treesize >= F(n, 4))
            if rec.in_x and rec.point != diag.root:
                assert rec.c == F(n, 4)
            assert 0 <= rec.p <= 1
            if not rec.in_x:
                assert rec.p == 0
            total += rec.p
        assert total == 1

    @settings(max_examples=150, deadline=None)
    @given(instances(max_mediators=4), st.data())
    def test_mass_moves_only_along_the_deviation_path(self, inst, data):
        m = inst.metric
        meds = mediator_medians(inst)
        i = data.draw(st.integers(0, inst.k - 1))
        u, u_hat = meds[i], data.draw(points(m))
        assume(u != u_hat)
        before, _ = trm_from_medians(m, meds, inst.sizes, inst.z)
        after, _ = trm_from_medians(m, meds[:i] + (u_hat,) + meds[i + 1:], inst.sizes, inst.z)
        p, q = before.as_dict(), after.as_dict()
        on = [x for x in set(p) | set(q) | {u, u_hat} if m.on_path(x, u, u_hat)]
        for x in set(p) | set(q):
            if x not in on:
                assert p.get(x, 0) == q.get(x, 0)
        on.sort(key=lambda x: m.distance(u, x))
        for k in range(len(on)):
            tail = on[k:]
            assert sum(p.get(x, 0) for x in tail) <= sum(q.get(x, 0) for x in tail)


class TestMediatorBased:
    @settings(max_examples=120, deadline=None)
    @given(instances())
    def test_outcome_depends_only_on_medians(self, inst):
        meds = mediator_medians(inst)
        collapsed = Instance(inst.metric, tuple((l,) * n for l, n in zip(meds, inst.sizes)), inst.z, inst.z_list)
        for name in ("wmm", "trm"):
            run = get_mechanism(name).run
            assert run(inst).distribution == run(collapsed).distribution

    @settings(max_examples=80, deadline=None)
    @given(instances(path_only=True))
    def test_tprm_depends_only_on_medians(self, inst):
        meds = mediator_medians(inst)
        collapsed = Instance(inst.metric, tuple((l,) * n for l, n in zip(meds, inst.sizes)), inst.z, inst.z_list)
        assert tprm(inst).distribution == tprm(collapsed).distribution


class TestGlobalMedian:
    def test_five_points(self):
        m = TreeMetric(["0", "1", "2"], [("0", "1", 1), ("1", "2", 1)])
        inst = Instance(m, ((V("0"), V("0"), V("1")), (V("2"), V("2"))), V("0"), (V("0"), V("0")))
        assert global_median(inst).location == V("1")

    def test_colocated(self):
        inst = Instance(unit_line(), ((V("1"),) * 3, (V("1"),)), V("0"), (V("0"), V("0")))
        assert global_median(inst).location == V("1")

    @pytest.mark.parametrize("r", [1, 2, 7])
    def test_lower_bound_instance(self, r):
        for l, h in [(0, 1), (F(1, 4), F(3, 4))]:
            inst = family_ex51(l, h, r, 1)
            loc = global_median(inst).location
            assert loc == inst.metric.point("0", "1", h)
            assert social_cost(inst.metric, inst.agents(), loc) == (h - l) * (r + 1)


class TestHierarchies:
    def test_worked_example(self):
        h = sec6_example()
        assert h.n == 5 and h.depth == 3
        assert iwmm(h).location == V("0")

    def test_direct_median(self):
        h = sec6_example()
        assert hierarchy_direct_median(h) == V("1")
        assert hierarchy_direct_median(h, {"A": [V("0")] * 3}) == V("0")

    def test_direct_median_single_agent(self):
        m = unit_line()
        p = m.point("0", "1", F(1, 9))
        h = HierarchyInstance(m, "c", {"c": HierarchyNode("c", ("a",), None, V("1")), "a": HierarchyNode("a", (), p)})
        assert hierarchy_direct_median(h) == p

    def test_deep_family(self):
        assert iwmm(family_ex61(2, 3, 2)).location == V("0")

    @settings(max_examples=100, deadline=None)
    @given(instances())
    def test_depth_two_equals_wmm(self, inst):
        h = instance_to_hierarchy(inst)
        assert h.depth == 2
        assert iwmm(h).location == wmm(inst).location

    @settings(max_examples=100, deadline=None)
    @given(hierarchies())
    def test_matches_brute_force(self, h):
        assert iwmm(h).location == brute_iwmm(h)

    def test_hierarchy_validation(self):
        m = unit_line()
        with pytest.raises(InstanceError):
            HierarchyInstance(m, "c", {"c": HierarchyNode("c", ("a",), None, None), "a": HierarchyNode("a", (), V("0"))})
        with pytest.raises(InstanceError):
            HierarchyInstance(m, "c", {"c": HierarchyNode("c", ("a", "a"), None, V("0")), "a": HierarchyNode("a", (), V("0"))})
        with pytest.raises(InstanceError):
            HierarchyInstance(m, "c", {
                "c": HierarchyNode("c", ("a",), None, V("0")),
                "a": HierarchyNode("a", (), V("0")),
                "stray": HierarchyNode("stray", (), V("1")),
            })


def test_registry():
    assert get_mechanism("opt").name == "global_median"
    assert get_mechanism("global-median").name == "global_median"
    assert get_mechanism("tprm").line_only
    with pytest.raises(ValueError):
        get_mechanism("nope")
