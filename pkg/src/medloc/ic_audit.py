"""Search for profitable unilateral deviations.

Every audit enumerates a finite candidate set of fake reports and compares
exact (expected) costs.  A deviation counts only when it is strictly cheaper
for the deviator.  The audits are falsification tools: a clean report means no
counterexample was found among the candidates, nothing more.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .mechanisms import (
    HierarchyInstance,
    Instance,
    MechanismSpec,
    PointDistribution,
    direct_median_lists,
    get_mechanism,
    hierarchy_direct_median,
    iwmm_reports,
    mediator_medians,
    median_of_points,
)
from .oracle import expected_distance
from .tree_metric import PointRef, TreeMetric, Vertex, format_rational, point_key


@dataclass(frozen=True)
class DeviationCandidateSet:
    points: tuple[PointRef, ...]
    seed: int | None = None
    samples_per_edge: int = 0

    def __len__(self) -> int:
        return len(self.points)


def build_candidates(
    metric: TreeMetric,
    extra: Sequence[PointRef] = (),
    samples_per_edge: int = 8,
    seed: int = 0,
    grid: int = 1000,
) -> DeviationCandidateSet:
    """All vertices, ``extra`` points, and seeded interior samples per edge."""
    pts = {Vertex(v) for v in metric.vertices}
    pts.update(metric.validate(p) for p in extra)
    rng = random.Random(seed)
    for a, b, _ in metric.edges:
        for _ in range(samples_per_edge):
            pts.add(metric.point(a, b, metric.length(a, b) * Fraction(rng.randint(1, grid - 1), grid)))
    return DeviationCandidateSet(tuple(sorted(pts, key=point_key)), seed, samples_per_edge)


def default_candidates(inst: Instance, samples_per_edge: int = 8, seed: int = 0) -> DeviationCandidateSet:
    extra = list(inst.agents()) + list(mediator_medians(inst)) + [inst.z, *inst.z_list]
    return build_candidates(inst.metric, extra, samples_per_edge, seed)


def default_hierarchy_candidates(h: HierarchyInstance, samples_per_edge: int = 8, seed: int = 0) -> DeviationCandidateSet:
    reports = iwmm_reports(h)
    extra = list(h.agents()) + list(reports.values())
    extra += [node.z for node in h.nodes.values() if node.z is not None]
    return build_candidates(h.metric, extra, samples_per_edge, seed)


@dataclass(frozen=True)
class Counterexample:
    deviator: str
    truthful_cost: Fraction
    deviating_cost: Fraction
    description: str
    # (kind, indices..., fake point); enough for :func:`replay` to rebuild it
    deviation: tuple = ()

    @property
    def gain(self) -> Fraction:
        return self.truthful_cost - self.deviating_cost


@dataclass(frozen=True)
class AuditReport:
    mechanism: str
    side: str
    deviations_tested: int
    counterexample: Counterexample | None = None

    @property
    def verdict(self) -> str:
        return "counterexample" if self.counterexample else "no-beneficial-deviation-found"

    @property
    def clean(self) -> bool:
        return self.counterexample is None


class _Best:
    """Keeps the best counterexample: largest gain, then deviator, then candidate."""

    def __init__(self):
        self.best = None
        self.tested = 0

    def offer(self, deviator_rank, cand_rank, cex: Counterexample) -> None:
        self.tested += 1
        if cex.deviating_cost >= cex.truthful_cost:
            return
        key = (-cex.gain, deviator_rank, cand_rank)
        if self.best is None or key < self.best[0]:
            self.best = (key, cex)

    @property
    def counterexample(self):
        return None if self.best is None else self.best[1]


def _label(p: PointRef) -> str:
    from .instance_io import point_label

    return point_label(p)


def _outcome_fn(inst: Instance, mech: MechanismSpec) -> Callable:
    """Map a tuple of mediator medians to a distribution, memoized."""
    cache: dict = {}
    sizes = inst.sizes

    def run(medians: tuple) -> PointDistribution:
        dist = cache.get(medians)
        if dist is None:
            dist = mech.from_medians(inst.metric, medians, sizes, inst.z)
            cache[medians] = dist
        return dist

    return run


def _resolve(mechanism) -> MechanismSpec:
    return mechanism if isinstance(mechanism, MechanismSpec) else get_mechanism(mechanism)


def audit_agent_side(inst: Instance, mechanism, candidates: DeviationCandidateSet | None = None) -> AuditReport:
    mech = _resolve(mechanism)
    cands = candidates or default_candidates(inst)
    metric = inst.metric
    best = _Best()
    if mech.mediator_based:
        run = _outcome_fn(inst, mech)
        medians = mediator_medians(inst)
        truthful = run(medians)
    else:
        truthful = mech.run(inst).distribution
    for i, reports in enumerate(inst.mediators):
        for j, t in enumerate(reports):
            base = expected_distance(metric, t, truthful)
            for c_rank, fake in enumerate(cands.points):
                if fake == t:
                    continue
                dev_reports = reports[:j] + (fake,) + reports[j + 1:]
                if mech.mediator_based:
                    li = median_of_points(metric, dev_reports, inst.z_list[i])
                    dist = truthful if li == medians[i] else run(medians[:i] + (li,) + medians[i + 1:])
                else:
                    dist = mech.run(inst.with_reports(i, dev_reports)).distribution
                cost = expected_distance(metric, t, dist)
                desc = f"agent {i}.{j} at {_label(t)} reports {_label(fake)}"
                best.offer((i, j), c_rank, Counterexample(f"agent {i}.{j}", base, cost, desc, ("agent", i, j, fake)))
    return AuditReport(mech.name, "agent", best.tested, best.counterexample)


def audit_mediator_side(
    inst: Instance,
    mechanism,
    candidates: DeviationCandidateSet | None = None,
    mode: str = "median",
) -> AuditReport:
    """Mediator deviations.

    ``mode="median"`` forces the mediator's median to each candidate (exact
    for mediator-based mechanisms).  ``mode="lists"`` instead perturbs the
    full report list: every single-entry substitution plus every
    all-agents-at-one-point report, recomputing from raw reports.
    """
    mech = _resolve(mechanism)
    cands = candidates or default_candidates(inst)
    metric = inst.metric
    best = _Best()
    truthful = mech.run(inst).distribution
    use_medians = mode == "median" and mech.mediator_based
    if use_medians:
        run = _outcome_fn(inst, mech)
        medians = mediator_medians(inst)
    for i, reports in enumerate(inst.mediators):
        base = sum((expected_distance(metric, t, truthful) for t in reports), Fraction(0))
        for c_rank, fake in enumerate(cands.points):
            if use_medians:
                if fake == medians[i]:
                    continue
                dists = [(
                    run(medians[:i] + (fake,) + medians[i + 1:]),
                    f"mediator {i} reports median {_label(fake)}",
                    ("mediator", i, fake),
                )]
            else:
                lists = [(
                    tuple([fake] * len(reports)),
                    f"mediator {i} reports all agents at {_label(fake)}",
                    ("mediator", i, fake),
                )]
                if mode == "lists":
                    for j in range(len(reports)):
                        if reports[j] != fake:
                            lists.append((
                                reports[:j] + (fake,) + reports[j + 1:],
                                f"mediator {i} misreports agent {j} as {_label(fake)}",
                                ("mediator-entry", i, j, fake),
                            ))
                dists = [(mech.run(inst.with_reports(i, dev)).distribution, desc, tag) for dev, desc, tag in lists]
            for dist, desc, tag in dists:
                cost = sum((expected_distance(metric, t, dist) for t in reports), Fraction(0))
                best.offer((i,), c_rank, Counterexample(f"mediator {i}", base, cost, desc, tag))
    return AuditReport(mech.name, "mediator", best.tested, best.counterexample)


def audit_naive(h: HierarchyInstance, mechanism: str = "iwmm", candidates: DeviationCandidateSet | None = None) -> AuditReport:
    """Naive IC: each player trusts its children's reports; ascendants are straightforward."""
    name = mechanism.replace("_", "-")
    if name not in ("iwmm", "direct-median"):
        raise ValueError(f"naive audit supports iwmm and direct-median, not {mechanism!r}")
    cands = candidates or default_hierarchy_candidates(h)
    metric = h.metric
    best = _Best()
    players = h.players()

    if name == "iwmm":
        reports = iwmm_reports(h)
        facility = reports[h.root]
        for rank, u in enumerate(players):
            perceived = _perceived_iwmm(h, u, reports)
            base = perceived(facility)
            for c_rank, fake in enumerate(cands.points):
                if fake == reports[u]:
                    continue
                dev = iwmm_reports(h, {u: fake})[h.root]
                best.offer(rank, c_rank, Counterexample(
                    u, base, perceived(dev), f"{u} reports {_label(fake)}", ("node", u, fake)
                ))
        return AuditReport("iwmm", "naive", best.tested, best.counterexample)

    lists = direct_median_lists(h)
    facility = hierarchy_direct_median(h)
    for rank, u in enumerate(players):
        node = h.nodes[u]
        presumed = [node.location] if node.is_agent else [p for c in node.children for p in lists[c]]
        base = sum((metric.distance(facility, t) for t in presumed), Fraction(0))
        for c_rank, fake in enumerate(cands.points):
            declared = [fake] * len(lists[u])
            if declared == lists[u]:
                continue
            dev = hierarchy_direct_median(h, {u: declared})
            cost = sum((metric.distance(dev, t) for t in presumed), Fraction(0))
            best.offer(rank, c_rank, Counterexample(
                u, base, cost, f"{u} reports all agents at {_label(fake)}", ("node", u, fake)
            ))
    return AuditReport("direct-median", "naive", best.tested, best.counterexample)


def _perceived_iwmm(h: HierarchyInstance, u: str, reports: dict):
    node = h.nodes[u]
    metric = h.metric
    if node.is_agent:
        return lambda f: metric.distance(f, node.location)
    weighted = [(reports[c], h.agent_count(c)) for c in node.children]
    return lambda f: sum((w * metric.distance(f, p) for p, w in weighted), Fraction(0))


def replay(subject, mechanism, cex: Counterexample) -> tuple[Fraction, Fraction]:
    """Recompute a counterexample's (truthful, deviating) costs from scratch.

    Single-level deviations are rebuilt as raw report lists and run through
    the full mechanism; a forced median ``m`` becomes "all agents at ``m``".
    """
    kind = cex.deviation[0]
    if kind == "node":
        _, u, fake = cex.deviation
        h = subject
        name = mechanism.replace("_", "-")
        node = h.nodes[u]
        if name == "iwmm":
            reports = iwmm_reports(h)
            before, after = reports[h.root], iwmm_reports(h, {u: fake})[h.root]
            presumed = [(node.location, 1)] if node.is_agent else [
                (reports[c], h.agent_count(c)) for c in node.children
            ]
        else:
            lists = direct_median_lists(h)
            before = hierarchy_direct_median(h)
            after = hierarchy_direct_median(h, {u: [fake] * len(lists[u])})
            presumed = [(node.location, 1)] if node.is_agent else [
                (p, 1) for c in node.children for p in lists[c]
            ]
        cost = lambda f: sum((w * h.metric.distance(f, p) for p, w in presumed), Fraction(0))
        return cost(before), cost(after)

    inst = subject
    mech = _resolve(mechanism)
    truthful = mech.run(inst).distribution
    if kind == "agent":
        _, i, j, fake = cex.deviation
        reports = inst.mediators[i]
        dev = mech.run(inst.with_reports(i, reports[:j] + (fake,) + reports[j + 1:])).distribution
        t = reports[j]
        return expected_distance(inst.metric, t, truthful), expected_distance(inst.metric, t, dev)
    if kind == "mediator":
        _, i, fake = cex.deviation
        dev_reports = (fake,) * inst.sizes[i]
    elif kind == "mediator-entry":
        _, i, j, fake = cex.deviation
        dev_reports = inst.mediators[i][:j] + (fake,) + inst.mediators[i][j + 1:]
    else:
        raise ValueError(f"unknown deviation kind {kind!r}")
    dev = mech.run(inst.with_reports(i, dev_reports)).distribution
    own = inst.mediators[i]
    total = lambda d: sum((expected_distance(inst.metric, t, d) for t in own), Fraction(0))
    return total(truthful), total(dev)
