"""Facility location on tree metrics with strategic mediators."""

from .tree_metric import EdgeInterior, MetricError, PointRef, TreeMetric, Vertex, as_rational, path_graph
from .median_core import WeightedMultiset, WeightedPoint, closest_median, is_weighted_median, m_p, median_of_points
from .mechanisms import (
    HierarchyInstance,
    Instance,
    InstanceError,
    MechanismOutcome,
    MetricShapeError,
    PointDistribution,
    global_median,
    hierarchy_direct_median,
    iwmm,
    tprm,
    trm,
    wmm,
)
from .oracle import competitive_report, derandomize, expected_cost, optimal_location, social_cost
from .ic_audit import audit_agent_side, audit_mediator_side, audit_naive
from .instance_io import fig1_tree, family_ex51, family_ex61, gen_random, parse, sec6_example, serialize

__all__ = [name for name in dir() if not name.startswith("_")]
