"""Facility-location mechanisms with strategic mediators.

Single level of mediation (:class:`Instance`):

* :func:`wmm`  -- weighted median of the mediators' medians.
* :func:`tprm` -- randomized, path metrics only; uniform over the middle half
  of the sorted median list.
* :func:`trm`  -- randomized, any tree; mass on the heavy central vertices.
* :func:`global_median` -- median of all reports pooled (agent-side baseline).

Mediation hierarchies (:class:`HierarchyInstance`):

* :func:`iwmm` -- every mediator reports the weighted median of its children.
* :func:`hierarchy_direct_median` -- forwards raw lists; the centre takes the
  median.  Kept only as the subject of the naive-IC negative test.

WMM, TPRM and TRM are mediator based: each has a ``*_from_medians`` core that
sees nothing but ``(ℓᵢ, nᵢ)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .median_core import median_of_points, weighted_closest_median
from .tree_metric import PointRef, TreeMetric, Vertex, point_key


class MetricShapeError(ValueError):
    """The mechanism does not apply to this metric (e.g. TPRM on a star)."""


class InstanceError(ValueError):
    pass


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    metric: TreeMetric
    mediators: tuple[tuple[PointRef, ...], ...]
    z: PointRef
    z_list: tuple[PointRef, ...]

    def __post_init__(self):
        meds = tuple(tuple(reports) for reports in self.mediators)
        object.__setattr__(self, "mediators", meds)
        object.__setattr__(self, "z_list", tuple(self.z_list))
        if not meds:
            raise InstanceError("an instance needs at least one mediator")
        if len(self.z_list) != len(meds):
            raise InstanceError(f"{len(meds)} mediators but {len(self.z_list)} tie-break points")
        for i, reports in enumerate(meds):
            if not reports:
                raise InstanceError(f"mediator {i} represents no agents")
            for p in reports:
                self.metric.validate(p)
        self.metric.validate(self.z)
        for zi in self.z_list:
            self.metric.validate(zi)

    @property
    def k(self) -> int:
        return len(self.mediators)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.mediators)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def agents(self) -> list[PointRef]:
        return [p for reports in self.mediators for p in reports]

    def with_reports(self, i: int, reports: Sequence[PointRef]) -> "Instance":
        meds = list(self.mediators)
        meds[i] = tuple(reports)
        return Instance(self.metric, tuple(meds), self.z, self.z_list)

    def with_z(self, z: PointRef) -> "Instance":
        return Instance(self.metric, self.mediators, z, self.z_list)


@dataclass(frozen=True)
class PointDistribution:
    """Finite distribution over points; exact probabilities summing to one."""

    support: tuple[tuple[PointRef, Fraction], ...]

    def __post_init__(self):
        seen = set()
        total = Fraction(0)
        for p, pr in self.support:
            if p in seen:
                raise ValueError(f"point {p!r} listed twice")
            seen.add(p)
            if not 0 <= pr <= 1:
                raise ValueError(f"probability {pr} of {p!r} outside [0, 1]")
            total += pr
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[PointRef, Fraction]]) -> "PointDistribution":
        """Aggregate repeated points and drop zero-probability entries."""
        acc: dict[PointRef, Fraction] = {}
        for p, pr in pairs:
            acc[p] = acc.get(p, Fraction(0)) + Fraction(pr)
        items = sorted(((p, pr) for p, pr in acc.items() if pr != 0), key=lambda t: point_key(t[0]))
        return cls(tuple(items))

    @classmethod
    def point_mass(cls, p: PointRef) -> "PointDistribution":
        return cls(((p, Fraction(1)),))

    def as_dict(self) -> dict[PointRef, Fraction]:
        return dict(self.support)

    def probability(self, p: PointRef) -> Fraction:
        return self.as_dict().get(p, Fraction(0))

    def points(self) -> list[PointRef]:
        return [p for p, _ in self.support]

    def __len__(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class VertexRecord:
    vertex: str
    point: PointRef
    size: int
    treesize: int
    in_x: bool
    c: Fraction | None
    p: Fraction


@dataclass(frozen=True)
class TrmDiagnostics:
    medians: tuple[PointRef, ...]
    root: PointRef
    records: tuple[VertexRecord, ...]
    working_metric: TreeMetric

    def record(self, point: PointRef) -> VertexRecord:
        for rec in self.records:
            if rec.point == point:
                return rec
        raise KeyError(point)


@dataclass(frozen=True)
class MechanismOutcome:
    kind: str  # "deterministic" | "randomized"
    location: PointRef | None = None
    distribution: PointDistribution | None = None
    diagnostics: object = field(default=None, compare=False)

    @classmethod
    def deterministic(cls, p: PointRef, diagnostics=None) -> "MechanismOutcome":
        return cls("deterministic", p, PointDistribution.point_mass(p), diagnostics)

    @classmethod
    def randomized(cls, dist: PointDistribution, diagnostics=None) -> "MechanismOutcome":
        return cls("randomized", None, dist, diagnostics)


# ---------------------------------------------------------------------------
# single level
# ---------------------------------------------------------------------------


def mediator_medians(inst: Instance) -> tuple[PointRef, ...]:
    return tuple(
        median_of_points(inst.metric, reports, zi) for reports, zi in zip(inst.mediators, inst.z_list)
    )


def wmm_from_medians(metric: TreeMetric, medians: Sequence[PointRef], sizes: Sequence[int], z: PointRef) -> PointRef:
    return weighted_closest_median(metric, zip(medians, (Fraction(s) for s in sizes)), z)


def wmm(inst: Instance) -> MechanismOutcome:
    medians = mediator_medians(inst)
    facility = wmm_from_medians(inst.metric, medians, inst.sizes, inst.z)
    return MechanismOutcome.deterministic(facility, {"medians": medians})


def global_median(inst: Instance) -> MechanismOutcome:
    return MechanismOutcome.deterministic(median_of_points(inst.metric, inst.agents(), inst.z))


def line_origin(metric: TreeMetric) -> Vertex:
    """The path endpoint with the smallest id; arclength is measured from it."""
    if not metric.is_path():
        raise MetricShapeError("metric is not a path graph")
    ends = [v for v in metric.vertices if metric.degree(v) <= 1]
    return Vertex(ends[0])


def line_position(metric: TreeMetric, p: PointRef, origin: Vertex | None = None) -> Fraction:
    return metric.distance(origin or line_origin(metric), p)


def tprm_weights(n: int) -> list[Fraction]:
    """Selection probability of each position ``u_1..u_n`` of the sorted list."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return [Fraction(1)]
    lo = n // 4 + 1
    hi = -(-3 * n // 4)
    inner = Fraction(2, n)
    edge = (1 - Fraction(n % 4, 4)) * inner
    out = [Fraction(0)] * n
    for i in range(lo, hi + 1):
        out[i - 1] = inner
    out[lo - 1] = edge
    out[hi - 1] = edge
    return out


def tprm_from_medians(metric: TreeMetric, medians: Sequence[PointRef], sizes: Sequence[int]):
    origin = line_origin(metric)
    u = []
    for med, size in zip(medians, sizes):
        u.extend([med] * size)
    u.sort(key=lambda p: metric.distance(origin, p))
    dist = PointDistribution.from_pairs(zip(u, tprm_weights(len(u))))
    return dist, tuple(u)


def tprm(inst: Instance) -> MechanismOutcome:
    medians = mediator_medians(inst)
    dist, u = tprm_from_medians(inst.metric, medians, inst.sizes)
    return MechanismOutcome.randomized(dist, {"medians": medians, "u": u})


def trm_from_medians(metric: TreeMetric, medians: Sequence[PointRef], sizes: Sequence[int], z: PointRef):
    n = sum(sizes)
    size_of: dict[PointRef, int] = {}
    for med, s in zip(medians, sizes):
        size_of[med] = size_of.get(med, 0) + s
    root = weighted_closest_median(metric, ((p, Fraction(s)) for p, s in size_of.items()), z)

    # make the root and every median a vertex
    working = metric
    origin_of: dict[str, PointRef] = {v: Vertex(v) for v in metric.vertices}
    vertex_of: dict[PointRef, str] = {}
    for p in sorted(set(size_of) | {root}, key=point_key):
        working, vid = working.split_at(working.lift(p, metric))
        origin_of[vid] = p
        vertex_of[p] = vid

    root_v = vertex_of[root]
    parent = {root_v: None}
    order = [root_v]
    for u in order:
        for w in working.neighbors(u):
            if w not in parent:
                parent[w] = u
                order.append(w)
    children: dict[str, list[str]] = {u: [] for u in order}
    for u in order[1:]:
        children[parent[u]].append(u)

    own = {u: 0 for u in order}
    for p, s in size_of.items():
        own[vertex_of[p]] += s
    treesize = dict(own)
    for u in reversed(order[1:]):
        treesize[parent[u]] += treesize[u]

    quarter, half = Fraction(n, 4), Fraction(n, 2)
    in_x = {u: treesize[u] >= quarter for u in order}
    c = {u: (half if u == root_v else quarter) for u in order if in_x[u]}
    prob: dict[str, Fraction] = {}
    for u in order:
        if not in_x[u]:
            prob[u] = Fraction(0)
            continue
        excess = treesize[u] - c[u] - sum((treesize[w] - c[w] for w in children[u] if in_x[w]), Fraction(0))
        prob[u] = excess / half
    if sum(prob.values()) != 1:  # pragma: no cover - probabilities always sum to one
        raise AssertionError(f"TRM probabilities sum to {sum(prob.values())}")

    records = tuple(
        VertexRecord(u, origin_of[u], own[u], treesize[u], in_x[u], c.get(u), prob[u])
        for u in sorted(order)
    )
    dist = PointDistribution.from_pairs((origin_of[u], prob[u]) for u in order)
    diag = TrmDiagnostics(tuple(medians), root, records, working)
    return dist, diag


def trm(inst: Instance) -> MechanismOutcome:
    medians = mediator_medians(inst)
    dist, diag = trm_from_medians(inst.metric, medians, inst.sizes, inst.z)
    return MechanismOutcome.randomized(dist, diag)


# ---------------------------------------------------------------------------
# hierarchies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HierarchyNode:
    id: str
    children: tuple[str, ...] = ()
    location: PointRef | None = None
    z: PointRef | None = None

    @property
    def is_agent(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class HierarchyInstance:
    """A mediation tree: root is the centre, leaves are agents."""

    metric: TreeMetric
    root: str
    nodes: Mapping[str, HierarchyNode]

    def __post_init__(self):
        nodes = dict(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if self.root not in nodes:
            raise InstanceError(f"root {self.root!r} is not a node")
        seen = set()
        stack = [self.root]
        while stack:
            u = stack.pop()
            if u in seen:
                raise InstanceError(f"node {u!r} is reachable twice; the hierarchy is not a tree")
            seen.add(u)
            node = nodes.get(u)
            if node is None:
                raise InstanceError(f"unknown node {u!r}")
            if node.is_agent:
                if u == self.root:
                    raise InstanceError("the centre must have at least one child")
                if node.location is None:
                    raise InstanceError(f"agent {u!r} has no location")
                self.metric.validate(node.location)
            else:
                if node.z is None:
                    raise InstanceError(f"mediator {u!r} has no tie-break point")
                self.metric.validate(node.z)
                stack.extend(node.children)
        if seen != set(nodes):
            raise InstanceError(f"nodes not attached to the root: {sorted(set(nodes) - seen)}")

    def children(self, u: str) -> tuple[str, ...]:
        return self.nodes[u].children

    def agent_count(self, u: str) -> int:
        node = self.nodes[u]
        if node.is_agent:
            return 1
        return sum(self.agent_count(c) for c in node.children)

    def agent_locations(self, u: str | None = None) -> list[PointRef]:
        node = self.nodes[self.root if u is None else u]
        if node.is_agent:
            return [node.location]
        return [p for c in node.children for p in self.agent_locations(c)]

    def agents(self) -> list[PointRef]:
        return self.agent_locations()

    @property
    def n(self) -> int:
        return self.agent_count(self.root)

    @property
    def depth(self) -> int:
        def height(u):
            node = self.nodes[u]
            return 0 if node.is_agent else 1 + max(height(c) for c in node.children)
        return height(self.root)

    def players(self) -> list[str]:
        """Every node except the centre, in pre-order."""
        out = []
        stack = list(reversed(self.children(self.root)))
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(reversed(self.children(u)))
        return out

    def parent_map(self) -> dict[str, str | None]:
        out = {self.root: None}
        for u, node in self.nodes.items():
            for c in node.children:
                out[c] = u
        return out


def instance_to_hierarchy(inst: Instance) -> HierarchyInstance:
    """The depth-2 hierarchy equivalent to a single-level instance."""
    nodes = {}
    med_ids = []
    for i, (reports, zi) in enumerate(zip(inst.mediators, inst.z_list), start=1):
        mid = f"d{i}"
        kids = []
        for j, p in enumerate(reports, start=1):
            aid = f"{mid}.a{j}"
            nodes[aid] = HierarchyNode(aid, location=p)
            kids.append(aid)
        nodes[mid] = HierarchyNode(mid, tuple(kids), z=zi)
        med_ids.append(mid)
    nodes["center"] = HierarchyNode("center", tuple(med_ids), z=inst.z)
    return HierarchyInstance(inst.metric, "center", nodes)


def iwmm_reports(h: HierarchyInstance, forced: Mapping[str, PointRef] | None = None) -> dict[str, PointRef]:
    """Every node's report; ``forced`` replaces the report of selected nodes."""
    forced = forced or {}
    reports: dict[str, PointRef] = {}
    counts: dict[str, int] = {}

    def visit(u: str) -> None:
        node = h.nodes[u]
        if node.is_agent:
            counts[u] = 1
            reports[u] = forced.get(u, node.location)
            return
        for c in node.children:
            visit(c)
        counts[u] = sum(counts[c] for c in node.children)
        if u in forced:
            reports[u] = forced[u]
        else:
            pairs = ((reports[c], Fraction(counts[c])) for c in node.children)
            reports[u] = weighted_closest_median(h.metric, pairs, node.z)

    visit(h.root)
    return reports


def iwmm(h: HierarchyInstance) -> MechanismOutcome:
    reports = iwmm_reports(h)
    return MechanismOutcome.deterministic(reports[h.root], {"reports": reports})


def direct_median_lists(h: HierarchyInstance, overrides: Mapping[str, Sequence[PointRef]] | None = None) -> dict[str, list[PointRef]]:
    overrides = overrides or {}
    lists: dict[str, list[PointRef]] = {}

    def visit(u: str) -> None:
        node = h.nodes[u]
        for c in node.children:
            visit(c)
        if u in overrides and u != h.root:
            lists[u] = list(overrides[u])
        elif node.is_agent:
            lists[u] = [node.location]
        else:
            lists[u] = [p for c in node.children for p in lists[c]]

    visit(h.root)
    return lists


def hierarchy_direct_median(h: HierarchyInstance, overrides: Mapping[str, Sequence[PointRef]] | None = None) -> PointRef:
    lists = direct_median_lists(h, overrides)
    return median_of_points(h.metric, lists[h.root], h.nodes[h.root].z)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MechanismSpec:
    name: str
    run: object
    from_medians: object = None  # (metric, medians, sizes, z) -> PointDistribution
    line_only: bool = False

    @property
    def mediator_based(self) -> bool:
        return self.from_medians is not None


def _wmm_dist(metric, medians, sizes, z):
    return PointDistribution.point_mass(wmm_from_medians(metric, medians, sizes, z))


def _tprm_dist(metric, medians, sizes, z):
    return tprm_from_medians(metric, medians, sizes)[0]


def _trm_dist(metric, medians, sizes, z):
    return trm_from_medians(metric, medians, sizes, z)[0]


MECHANISMS: dict[str, MechanismSpec] = {
    "wmm": MechanismSpec("wmm", wmm, _wmm_dist),
    "tprm": MechanismSpec("tprm", tprm, _tprm_dist, line_only=True),
    "trm": MechanismSpec("trm", trm, _trm_dist),
    "global_median": MechanismSpec("global_median", global_median),
}


def get_mechanism(name: str) -> MechanismSpec:
    key = name.replace("-", "_")
    if key == "opt":
        key = "global_median"
    try:
        return MECHANISMS[key]
    except KeyError:
        raise ValueError(f"unknown mechanism {name!r}; choose from {sorted(MECHANISMS)}") from None
