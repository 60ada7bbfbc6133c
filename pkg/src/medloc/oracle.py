"""Ground truth: exact social cost, brute-force optimum, derandomization."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .mechanisms import MechanismOutcome, PointDistribution
from .tree_metric import PointRef, TreeMetric, Vertex, point_key


def social_cost(metric: TreeMetric, agents: Sequence[PointRef], p: PointRef) -> Fraction:
    return sum((metric.distance(p, t) for t in agents), Fraction(0))


def optimal_location(metric: TreeMetric, agents: Sequence[PointRef]) -> tuple[PointRef, Fraction]:
    """Exhaustive minimum over vertices and agent locations.

    Ties go to the smallest point in :func:`point_key` order.
    """
    if not agents:
        raise ValueError("optimal_location of an empty agent set")
    candidates = {Vertex(v) for v in metric.vertices} | set(agents)
    best = None
    for p in sorted(candidates, key=point_key):
        cost = social_cost(metric, agents, p)
        if best is None or cost < best[1]:
            best = (p, cost)
    return best


def expected_cost(metric: TreeMetric, agents: Sequence[PointRef], dist: PointDistribution) -> Fraction:
    total = sum((pr for _, pr in dist.support), Fraction(0))
    if total != 1:
        raise ValueError(f"distribution sums to {total}")
    return sum((pr * social_cost(metric, agents, p) for p, pr in dist.support), Fraction(0))


def expected_distance(metric: TreeMetric, t: PointRef, dist: PointDistribution) -> Fraction:
    return sum((pr * metric.distance(p, t) for p, pr in dist.support), Fraction(0))


def derandomize(metric: TreeMetric, dist: PointDistribution) -> PointRef:
    """A single point no costlier than ``dist`` for every agent multiset.

    Repeatedly take the two support points furthest apart, and collapse all
    the mass lying on the path between them onto its expected position along
    that path.  Each round removes at least one support point.  On a path
    metric the first round already covers everything, so the result is the
    mean position.
    """
    if not dist.support:
        raise ValueError("empty support")
    mass: dict[PointRef, Fraction] = {p: pr for p, pr in dist.support if pr}
    while len(mass) > 1:
        pts = sorted(mass, key=point_key)
        best = None
        for i, p in enumerate(pts):
            for q in pts[i + 1:]:
                d = metric.distance(p, q)
                if best is None or d > best[0]:
                    best = (d, p, q)
        span, u, v = best
        on_path = [x for x in pts if metric.distance(u, x) + metric.distance(x, v) == span]
        weight = sum((mass[x] for x in on_path), Fraction(0))
        offset = sum((mass[x] * metric.distance(u, x) for x in on_path), Fraction(0)) / weight
        target = metric.point_along(u, v, offset)
        for x in on_path:
            del mass[x]
        mass[target] = mass.get(target, Fraction(0)) + weight
    return next(iter(mass))


@dataclass(frozen=True)
class CostReport:
    outcome: MechanismOutcome
    cost: Fraction
    optimal_location: PointRef
    optimal_cost: Fraction
    ratio: Fraction | None  # None when OPT = 0 and the mechanism pays > 0
    infinite: bool = False


def competitive_report(inst, outcome: MechanismOutcome) -> CostReport:
    """Mechanism cost against the brute-force optimum.

    ``inst`` is anything with ``metric`` and ``agents()`` (single-level or
    hierarchical instances alike).
    """
    agents = inst.agents()
    metric = inst.metric
    cost = expected_cost(metric, agents, outcome.distribution)
    opt_p, opt = optimal_location(metric, agents)
    if opt == 0:
        if cost == 0:
            return CostReport(outcome, cost, opt_p, opt, Fraction(1))
        return CostReport(outcome, cost, opt_p, opt, None, infinite=True)
    return CostReport(outcome, cost, opt_p, opt, cost / opt)
