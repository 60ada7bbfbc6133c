"""Hypothesis strategies built on the seeded generators."""

from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from medloc.instance_io import GeneratorParams, gen_random, gen_random_hierarchy
from medloc.tree_metric import TreeMetric, Vertex

seeds = st.integers(min_value=0, max_value=2**63 - 1)


@st.composite
def instances(draw, path_only=False, max_vertices=7, max_mediators=4, max_agents=4):
    params = GeneratorParams(
        seed=draw(seeds),
        vertices=(1, max_vertices),
        mediators=(1, max_mediators),
        agents=(1, max_agents),
        path_only=path_only,
    )
    return gen_random(params)


@st.composite
def metrics(draw, max_vertices=8):
    return draw(instances(max_vertices=max_vertices)).metric


@st.composite
def points(draw, metric: TreeMetric):
    """A vertex or an edge point with a small-denominator offset."""
    edges = metric.edges
    if not edges or draw(st.booleans()):
        return Vertex(draw(st.sampled_from(metric.vertices)))
    a, b, ln = draw(st.sampled_from(edges))
    k = draw(st.integers(1, 11))
    return metric.point(a, b, ln * Fraction(k, 12))


@st.composite
def metric_with_points(draw, count=3, max_vertices=8):
    m = draw(metrics(max_vertices=max_vertices))
    return m, [draw(points(m)) for _ in range(count)]


@st.composite
def weighted_multisets(draw, max_vertices=7, max_size=6):
    m = draw(metrics(max_vertices=max_vertices))
    size = draw(st.integers(1, max_size))
    pairs = [
        (draw(points(m)), Fraction(draw(st.integers(1, 9)), draw(st.integers(1, 4))))
        for _ in range(size)
    ]
    return m, pairs


@st.composite
def hierarchies(draw, max_depth=4):
    params = GeneratorParams(
        seed=draw(seeds),
        vertices=(1, 6),
        agents=(1, 3),
        branching=(1, 2),
        depth=(1, max_depth),
    )
    return gen_random_hierarchy(params)
