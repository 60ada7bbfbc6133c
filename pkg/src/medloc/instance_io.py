"""Instance documents, seeded generators and the named instance families.

Documents are UTF-8 JSON.  Every rational is a ``"num/den"`` string (plain
integer strings are also accepted on input); JSON decimal literals are
rejected outright.  A point is either a vertex id string or an object
``{"edge": [a, b], "offset": "num/den"}`` with the offset measured from ``a``.

Single-level document::

    {"schema": "medloc/1", "kind": "single",
     "metric": {"vertices": [...], "edges": [{"a": .., "b": .., "length": ..}]},
     "z": POINT,
     "mediators": [{"z": POINT, "agents": [POINT, ...]}, ...]}

Hierarchy document::

    {"schema": "medloc/1", "kind": "hierarchy", "metric": {...},
     "hierarchy": {"root": ID, "nodes": [
         {"id": ID, "children": [ID, ...], "z": POINT},   # centre / mediator
         {"id": ID, "location": POINT}]}}                 # agent

:func:`serialize` emits the canonical form: sorted keys, vertices sorted,
edges oriented ``a < b`` and sorted, hierarchy nodes sorted by id, everything
else in document order.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Union

import networkx as nx

from .mechanisms import HierarchyInstance, HierarchyNode, Instance, InstanceError
from .tree_metric import (
    MetricError,
    PointRef,
    TreeMetric,
    Vertex,
    as_rational,
    format_rational,
)

SCHEMA = "medloc/1"

AnyInstance = Union[Instance, HierarchyInstance]


# ---------------------------------------------------------------------------
# point labels (compact text form used by the CLI and in reports)
# ---------------------------------------------------------------------------


def point_label(p: PointRef) -> str:
    """``"v"`` for a vertex, ``"a|b@num/den"`` for an edge point."""
    if isinstance(p, Vertex):
        return p.id
    return f"{p.a}|{p.b}@{format_rational(p.offset)}"


def parse_point_label(metric: TreeMetric, text: str) -> PointRef:
    if text in metric.vertices:
        return Vertex(text)
    edge, at, offset = text.rpartition("@")
    a, bar, b = edge.partition("|")
    if not at or not bar:
        raise MetricError(f"{text!r} is neither a vertex id nor 'a|b@offset'")
    return metric.point(a, b, as_rational(offset))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


class _Fields:
    """Tracks the JSON path for error messages."""

    def __init__(self, path: str = "$"):
        self.path = path

    def __truediv__(self, key) -> "_Fields":
        return _Fields(f"{self.path}[{key}]" if isinstance(key, int) else f"{self.path}.{key}")

    def fail(self, msg: str):
        raise InstanceError(f"{self.path}: {msg}")


def _reject_decimal(text: str):
    raise InstanceError(f"decimal literal {text} is not allowed; write rationals as \"num/den\" strings")


def _get(obj, key: str, where: _Fields, kind=None):
    if not isinstance(obj, dict):
        where.fail("expected an object")
    if key not in obj:
        where.fail(f"missing field {key!r}")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        (where / key).fail(f"expected {kind.__name__}, got {type(val).__name__}")
    return val


def _rational(val, where: _Fields) -> Fraction:
    if isinstance(val, bool) or not isinstance(val, (str, int)):
        where.fail(f"expected a \"num/den\" string, got {val!r}")
    try:
        return as_rational(val)
    except (ValueError, TypeError) as exc:
        where.fail(str(exc))


def _metric(doc, where: _Fields) -> TreeMetric:
    vertices = _get(doc, "vertices", where, list)
    edges = []
    for i, e in enumerate(_get(doc, "edges", where, list)):
        w = where / "edges" / i
        a = _get(e, "a", w, str)
        b = _get(e, "b", w, str)
        length = _rational(_get(e, "length", w), w / "length")
        if length <= 0:
            (w / "length").fail(f"non-positive length {format_rational(length)}")
        edges.append((a, b, length))
    for i, v in enumerate(vertices):
        if not isinstance(v, str):
            (where / "vertices" / i).fail("vertex ids must be strings")
    try:
        return TreeMetric(vertices, edges)
    except MetricError as exc:
        where.fail(str(exc))


def _point(metric: TreeMetric, val, where: _Fields) -> PointRef:
    try:
        if isinstance(val, str):
            return metric.point(val)
        if isinstance(val, dict):
            edge = _get(val, "edge", where, list)
            if len(edge) != 2 or not all(isinstance(x, str) for x in edge):
                (where / "edge").fail("expected [a, b] vertex ids")
            offset = _rational(_get(val, "offset", where), where / "offset")
            return metric.point(edge[0], edge[1], offset)
    except MetricError as exc:
        where.fail(str(exc))
    where.fail(f"not a point: {val!r}")


def _tie_point(metric: TreeMetric, obj: dict, where: _Fields, default: PointRef | None) -> PointRef:
    if "z" in obj:
        return _point(metric, obj["z"], where / "z")
    if default is None:
        where.fail("missing tie-break point 'z'")
    return default


def parse(text: str | bytes, default_ties: bool = False) -> AnyInstance:
    """Validated :class:`Instance` or :class:`HierarchyInstance`.

    With ``default_ties`` a missing ``z`` falls back to the smallest vertex id;
    otherwise it is an error.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text, parse_float=_reject_decimal, parse_constant=_reject_decimal)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_document(doc, default_ties)


def from_document(doc: Any, default_ties: bool = False) -> AnyInstance:
    root = _Fields()
    if not isinstance(doc, dict):
        root.fail("a document must be a JSON object")
    schema = _get(doc, "schema", root, str)
    if schema != SCHEMA:
        (root / "schema").fail(f"unsupported schema {schema!r} (expected {SCHEMA!r})")
    kind = _get(doc, "kind", root, str)
    metric = _metric(_get(doc, "metric", root, dict), root / "metric")
    fallback = Vertex(min(metric.vertices)) if default_ties else None

    if kind == "single":
        z = _tie_point(metric, doc, root, fallback)
        mediators, z_list = [], []
        for i, med in enumerate(_get(doc, "mediators", root, list)):
            w = root / "mediators" / i
            agents = _get(med, "agents", w, list)
            if not agents:
                (w / "agents").fail("empty mediator")
            mediators.append(tuple(_point(metric, p, w / "agents" / j) for j, p in enumerate(agents)))
            z_list.append(_tie_point(metric, med, w, fallback))
        if not mediators:
            (root / "mediators").fail("at least one mediator is required")
        return Instance(metric, tuple(mediators), z, tuple(z_list))

    if kind == "hierarchy":
        hw = root / "hierarchy"
        hdoc = _get(doc, "hierarchy", root, dict)
        centre = _get(hdoc, "root", hw, str)
        nodes = {}
        for i, nd in enumerate(_get(hdoc, "nodes", hw, list)):
            w = hw / "nodes" / i
            nid = _get(nd, "id", w, str)
            if nid in nodes:
                (w / "id").fail(f"duplicate node id {nid!r}")
            if "location" in nd:
                if nd.get("children"):
                    w.fail("an agent cannot have children")
                nodes[nid] = HierarchyNode(nid, (), _point(metric, nd["location"], w / "location"))
            else:
                kids = _get(nd, "children", w, list)
                if not kids:
                    (w / "children").fail("empty mediator")
                for j, c in enumerate(kids):
                    if not isinstance(c, str):
                        (w / "children" / j).fail("child ids must be strings")
                nodes[nid] = HierarchyNode(nid, tuple(kids), None, _tie_point(metric, nd, w, fallback))
        return HierarchyInstance(metric, centre, nodes)

    (root / "kind").fail(f"unknown kind {kind!r} (expected 'single' or 'hierarchy')")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _point_doc(p: PointRef):
    if isinstance(p, Vertex):
        return p.id
    return {"edge": [p.a, p.b], "offset": format_rational(p.offset)}


def _metric_doc(metric: TreeMetric) -> dict:
    return {
        "vertices": sorted(metric.vertices),
        "edges": [{"a": a, "b": b, "length": format_rational(ln)} for a, b, ln in sorted(metric.edges)],
    }


def to_document(inst: AnyInstance) -> dict:
    if isinstance(inst, Instance):
        return {
            "schema": SCHEMA,
            "kind": "single",
            "metric": _metric_doc(inst.metric),
            "z": _point_doc(inst.z),
            "mediators": [
                {"z": _point_doc(zi), "agents": [_point_doc(p) for p in reports]}
                for reports, zi in zip(inst.mediators, inst.z_list)
            ],
        }
    nodes = []
    for nid in sorted(inst.nodes):
        node = inst.nodes[nid]
        if node.is_agent:
            nodes.append({"id": nid, "location": _point_doc(node.location)})
        else:
            nodes.append({"id": nid, "children": list(node.children), "z": _point_doc(node.z)})
    return {
        "schema": SCHEMA,
        "kind": "hierarchy",
        "metric": _metric_doc(inst.metric),
        "hierarchy": {"root": inst.root, "nodes": nodes},
    }


def serialize(inst: AnyInstance) -> str:
    return json.dumps(to_document(inst), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# random generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorParams:
    """Ranges are inclusive ``(lo, hi)`` pairs."""

    seed: int = 0
    vertices: tuple[int, int] = (1, 8)
    length: tuple[Fraction, Fraction] = (Fraction(1), Fraction(4))
    length_grid: int = 4  # lengths are multiples of 1/length_grid
    mediators: tuple[int, int] = (1, 4)
    agents: tuple[int, int] = (1, 4)
    interior_prob: Fraction = Fraction(1, 3)
    offset_grid: int = 4  # edge offsets are multiples of length/offset_grid
    path_only: bool = False
    depth: tuple[int, int] | None = None  # hierarchies only
    branching: tuple[int, int] = (1, 3)  # hierarchies only

    def __post_init__(self):
        for name in ("vertices", "length", "mediators", "agents", "branching") + (("depth",) if self.depth else ()):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"empty range for {name}: ({lo}, {hi})")
        lo, hi = (as_rational(x) for x in self.length)
        object.__setattr__(self, "length", (lo, hi))
        if self.vertices[0] < 1:
            raise ValueError("need at least one vertex")
        if lo <= 0:
            raise ValueError("edge lengths must be positive")
        if self.length_grid < 1 or self.offset_grid < 2:
            raise ValueError("length_grid must be >= 1 and offset_grid >= 2")
        if min(self.mediators[0], self.agents[0], self.branching[0]) < 1:
            raise ValueError("mediator, agent and branching counts must be >= 1")
        if not 0 <= self.interior_prob <= 1:
            raise ValueError("interior_prob must lie in [0, 1]")
        if self.depth is not None and self.depth[0] < 1:
            raise ValueError("hierarchy depth must be >= 1")
        if math.ceil(lo * self.length_grid) > math.floor(hi * self.length_grid):
            raise ValueError("no grid length inside the length range")


def _random_metric(rng: random.Random, params: GeneratorParams) -> TreeMetric:
    nv = rng.randint(*params.vertices)
    width = len(str(nv - 1))
    names = [f"v{i:0{width}d}" for i in range(nv)]
    lo, hi = params.length
    g = params.length_grid
    grid = [Fraction(k, g) for k in range(math.ceil(lo * g), math.floor(hi * g) + 1)]
    if nv == 1:
        pairs = []
    elif params.path_only:
        order = names[:]
        rng.shuffle(order)
        pairs = list(zip(order, order[1:]))
    elif nv == 2:
        pairs = [(names[0], names[1])]
    else:
        tree = nx.from_prufer_sequence([rng.randrange(nv) for _ in range(nv - 2)])
        pairs = sorted((names[a], names[b]) for a, b in tree.edges())
    return TreeMetric(names, [(a, b, rng.choice(grid)) for a, b in pairs])


def _random_point(rng: random.Random, metric: TreeMetric, params: GeneratorParams, pool: list) -> PointRef:
    # reuse an earlier point half of the time so that coincident agents are common
    if pool and rng.random() < 0.5:
        return rng.choice(pool)
    edges = metric.edges
    if edges and rng.random() < params.interior_prob:
        a, b, ln = rng.choice(edges)
        p = metric.point(a, b, ln * Fraction(rng.randint(1, params.offset_grid - 1), params.offset_grid))
    else:
        p = Vertex(rng.choice(sorted(metric.vertices)))
    pool.append(p)
    return p


def gen_random(params: GeneratorParams) -> Instance:
    rng = random.Random(params.seed)
    metric = _random_metric(rng, params)
    pool: list = []
    mediators = [
        tuple(_random_point(rng, metric, params, pool) for _ in range(rng.randint(*params.agents)))
        for _ in range(rng.randint(*params.mediators))
    ]
    z = _random_point(rng, metric, params, pool)
    z_list = tuple(_random_point(rng, metric, params, pool) for _ in mediators)
    return Instance(metric, tuple(mediators), z, z_list)


def gen_random_hierarchy(params: GeneratorParams) -> HierarchyInstance:
    """Uniform-depth mediation tree: every root-to-agent path has ``s`` edges.

    ``params.depth`` picks ``s``; each node above level 1 has ``branching``
    child mediators (the centre included), level-1 mediators hold ``agents``.
    """
    rng = random.Random(params.seed)
    metric = _random_metric(rng, params)
    s = rng.randint(*(params.depth or (2, 3)))
    pool: list = []
    nodes: dict[str, HierarchyNode] = {}

    def build(nid: str, level: int) -> None:
        if level == 1:
            kids = []
            for j in range(rng.randint(*params.agents)):
                aid = f"{nid}.a{j + 1}"
                nodes[aid] = HierarchyNode(aid, (), _random_point(rng, metric, params, pool))
                kids.append(aid)
        else:
            kids = [f"{nid}.{j + 1}" for j in range(rng.randint(*params.branching))]
            for kid in kids:
                build(kid, level - 1)
        nodes[nid] = HierarchyNode(nid, tuple(kids), None, _random_point(rng, metric, params, pool))

    if s == 1:
        kids = []
        for j in range(rng.randint(*params.agents)):
            aid = f"a{j + 1}"
            nodes[aid] = HierarchyNode(aid, (), _random_point(rng, metric, params, pool))
            kids.append(aid)
        nodes["center"] = HierarchyNode("center", tuple(kids), None, _random_point(rng, metric, params, pool))
    else:
        kids = [f"d{j + 1}" for j in range(rng.randint(*params.branching))]
        for kid in kids:
            build(kid, s - 1)
        nodes["center"] = HierarchyNode("center", tuple(kids), None, _random_point(rng, metric, params, pool))
    return HierarchyInstance(metric, "center", nodes)


# ---------------------------------------------------------------------------
# named families
# ---------------------------------------------------------------------------


def unit_interval() -> TreeMetric:
    """The segment [0, 1] with endpoint vertices ``"0"`` and ``"1"``."""
    return TreeMetric(["0", "1"], [("0", "1", 1)])


def family_ex51(l=0, h=1, r: int = 1, variant: int = 1, z=None) -> Instance:
    """Two mediators of ``2r + 1`` agents on [0, 1], medians ``l`` and ``h``.

    1: d1 holds r+1 at l and r at h, d2 holds 2r+1 at h.
    2: d1 holds 2r+1 at l, d2 holds r at l and r+1 at h.
    3: d1 all at l, d2 all at h.
    All tie-break points sit at ``z`` (default ``l``).
    """
    l, h = as_rational(l), as_rational(h)
    if not 0 <= l < h <= 1:
        raise InstanceError(f"need 0 <= l < h <= 1, got l={l}, h={h}")
    if not isinstance(r, int) or r < 1:
        raise InstanceError(f"r must be a positive integer, got {r!r}")
    metric = unit_interval()
    lo, hi = metric.point("0", "1", l), metric.point("0", "1", h)
    if variant == 1:
        d1, d2 = [lo] * (r + 1) + [hi] * r, [hi] * (2 * r + 1)
    elif variant == 2:
        d1, d2 = [lo] * (2 * r + 1), [lo] * r + [hi] * (r + 1)
    elif variant == 3:
        d1, d2 = [lo] * (2 * r + 1), [hi] * (2 * r + 1)
    else:
        raise InstanceError(f"variant must be 1, 2 or 3, got {variant!r}")
    zp = lo if z is None else metric.point("0", "1", as_rational(z))
    return Instance(metric, (tuple(d1), tuple(d2)), zp, (zp, zp))


def family_ex61(r: int, s: int, variant: int = 1) -> HierarchyInstance:
    """Depth-``s`` binary mediation tree on [0, 1] with a single top mediator.

    Level-1 mediator ``d1_j`` holds r agents, ``d1_1`` holds r+1.  Variant 1
    puts everyone at 0; variant 2 puts everyone at 1 except ``d1_1``'s agents.
    Every tie-break point is 0.
    """
    if not isinstance(r, int) or r < 1:
        raise InstanceError(f"r must be a positive integer, got {r!r}")
    if not isinstance(s, int) or s < 3:
        raise InstanceError(f"s must be an integer >= 3, got {s!r}")
    if variant not in (1, 2):
        raise InstanceError(f"variant must be 1 or 2, got {variant!r}")
    metric = unit_interval()
    zero, one = Vertex("0"), Vertex("1")
    nodes: dict[str, HierarchyNode] = {}
    for j in range(1, 2 ** (s - 2) + 1):
        mid = f"d1_{j}"
        where = zero if variant == 1 or j == 1 else one
        kids = []
        for a in range(1, r + (2 if j == 1 else 1)):
            aid = f"{mid}.a{a}"
            nodes[aid] = HierarchyNode(aid, (), where)
            kids.append(aid)
        nodes[mid] = HierarchyNode(mid, tuple(kids), None, zero)
    for level in range(2, s):
        for j in range(1, 2 ** (s - 1 - level) + 1):
            kids = (f"d{level - 1}_{2 * j - 1}", f"d{level - 1}_{2 * j}")
            nodes[f"d{level}_{j}"] = HierarchyNode(f"d{level}_{j}", kids, None, zero)
    nodes["center"] = HierarchyNode("center", (f"d{s - 1}_1",), None, zero)
    return HierarchyInstance(metric, "center", nodes)


FIG1_SIZES = {"R": 24, "A": 10, "B": 1, "Bc": 25, "D": 5, "Dc": 25, "F": 10}


def fig1_tree() -> Instance:
    """Eight unit edges' worth of tree with 100 agents; every mediator co-located.

    Topology R-{E, F}, E-{A, B}, B-Bc, F-D, D-Dc.  E holds no agents, so the
    subtrees hanging off R weigh 36 (via E) and 40 (via F).  Tie-breaks at R.
    """
    edges = [("R", "E"), ("R", "F"), ("E", "A"), ("E", "B"), ("B", "Bc"), ("F", "D"), ("D", "Dc")]
    metric = TreeMetric(["A", "B", "Bc", "D", "Dc", "E", "F", "R"], [(a, b, 1) for a, b in edges])
    order = ["R", "A", "B", "Bc", "D", "Dc", "F"]
    mediators = tuple((Vertex(v),) * FIG1_SIZES[v] for v in order)
    return Instance(metric, mediators, Vertex("R"), tuple(Vertex(v) for v in order))


def sec6_example() -> HierarchyInstance:
    """Five agents on [0, 2]: A holds 0, 0, 1 and B holds 2, 2; C sits above
    both, and the centre above C.  Every tie-break point is 0."""
    metric = TreeMetric(["0", "1", "2"], [("0", "1", 1), ("1", "2", 1)])
    zero = Vertex("0")
    spots = {"a": "0", "b": "0", "c": "1", "d": "2", "e": "2"}
    nodes = {k: HierarchyNode(k, (), Vertex(v)) for k, v in spots.items()}
    nodes["A"] = HierarchyNode("A", ("a", "b", "c"), None, zero)
    nodes["B"] = HierarchyNode("B", ("d", "e"), None, zero)
    nodes["C"] = HierarchyNode("C", ("A", "B"), None, zero)
    nodes["center"] = HierarchyNode("center", ("C",), None, zero)
    return HierarchyInstance(metric, "center", nodes)
