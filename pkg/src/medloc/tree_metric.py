"""Exact tree metrics: canonical points, distances, paths and edge splitting.

A :class:`TreeMetric` is a finite tree whose edges are real intervals of
positive rational length.  Points are either vertices or strictly interior
points of an edge; the two forms are canonical, so an offset of ``0`` or of the
full edge length always collapses to the corresponding :class:`Vertex`.

Every number is a :class:`fractions.Fraction`.  Floats are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence, Union

Rational = Fraction


class MetricError(ValueError):
    """Invalid tree, unknown vertex/edge, or out-of-range offset."""


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to :class:`Fraction`.

    Floats and decimal strings are refused; they cannot be represented exactly.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int) or isinstance(value, _RationalABC):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        num, sep, den = text.partition("/")
        if not _is_int_literal(num) or (sep and not _is_int_literal(den, signed=False)):
            raise ValueError(f"malformed rational {value!r}")
        if sep and int(den) == 0:
            raise ValueError(f"zero denominator in {value!r}")
        return Fraction(int(num), int(den) if sep else 1)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def _is_int_literal(text: str, signed: bool = True) -> bool:
    body = text[1:] if signed and text[:1] == "-" else text
    return body.isdigit() and body.isascii()


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, order=True)
class Vertex:
    id: str

    def __repr__(self) -> str:
        return f"Vertex({self.id!r})"


@dataclass(frozen=True, order=True)
class EdgeInterior:
    """A point strictly inside edge ``(a, b)``, ``offset`` measured from ``a``.

    Construct through :meth:`TreeMetric.point` so that orientation (``a < b``)
    and the open-interval condition are enforced.
    """

    a: str
    b: str
    offset: Fraction

    def __repr__(self) -> str:
        return f"EdgeInterior({self.a!r}, {self.b!r}, {format_rational(self.offset)})"


PointRef = Union[Vertex, EdgeInterior]

_UP = ("u",)
_DOWN = ("d",)


def point_key(p: PointRef) -> tuple:
    """Total, deterministic order on points (vertices first, then edge points)."""
    if isinstance(p, Vertex):
        return (0, p.id, "", Fraction(0))
    return (1, p.a, p.b, p.offset)


def edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class PathDecomposition:
    waypoints: tuple[PointRef, ...]
    length: Fraction


class TreeMetric:
    """An immutable edge-weighted tree.

    ``edges`` is an iterable of ``(a, b, length)`` triples.  Vertex ids are
    strings; the tree is rooted internally at the smallest id, which only
    matters for the distance bookkeeping and never leaks into results.
    """

    __slots__ = (
        "vertices", "_lengths", "_adj", "_parent", "_plen", "_depth", "_rdist", "_hash",
    )

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple]):
        verts = list(vertices)
        for v in verts:
            if not isinstance(v, str):
                raise MetricError(f"vertex id {v!r} is not a string")
        if len(set(verts)) != len(verts):
            raise MetricError("duplicate vertex ids")
        if not verts:
            raise MetricError("a tree needs at least one vertex")
        self.vertices: tuple[str, ...] = tuple(sorted(verts))
        vset = set(verts)
        lengths: dict[tuple[str, str], Fraction] = {}
        adj: dict[str, list[str]] = {v: [] for v in self.vertices}
        for a, b, length in edges:
            if a not in vset or b not in vset:
                raise MetricError(f"edge ({a}, {b}) references an unknown vertex")
            if a == b:
                raise MetricError(f"self-loop at {a}")
            key = edge_key(a, b)
            if key in lengths:
                raise MetricError(f"duplicate edge {key}")
            length = as_rational(length)
            if length <= 0:
                raise MetricError(f"edge {key} has non-positive length {length}")
            lengths[key] = length
            adj[a].append(b)
            adj[b].append(a)
        if len(lengths) != len(self.vertices) - 1:
            raise MetricError(
                f"a tree on {len(self.vertices)} vertices needs {len(self.vertices) - 1} edges, "
                f"got {len(lengths)}"
            )
        for v in adj:
            adj[v].sort()
        self._lengths = lengths
        self._adj = {v: tuple(ns) for v, ns in adj.items()}

        root = self.vertices[0]
        parent: dict[str, str | None] = {root: None}
        plen = {root: Fraction(0)}
        depth = {root: 0}
        rdist = {root: Fraction(0)}
        stack = [root]
        while stack:
            u = stack.pop()
            for w in self._adj[u]:
                if w in parent:
                    continue
                parent[w] = u
                plen[w] = lengths[edge_key(u, w)]
                depth[w] = depth[u] + 1
                rdist[w] = rdist[u] + plen[w]
                stack.append(w)
        if len(parent) != len(self.vertices):
            raise MetricError("the edge set does not connect every vertex")
        self._parent = parent
        self._plen = plen
        self._depth = depth
        self._rdist = rdist
        self._hash = None

    # -- structure ---------------------------------------------------------

    @property
    def edges(self) -> tuple[tuple[str, str, Fraction], ...]:
        return tuple((a, b, ln) for (a, b), ln in sorted(self._lengths.items()))

    def length(self, a: str, b: str) -> Fraction:
        try:
            return self._lengths[edge_key(a, b)]
        except KeyError:
            raise MetricError(f"unknown edge ({a}, {b})") from None

    def neighbors(self, v: str) -> tuple[str, ...]:
        try:
            return self._adj[v]
        except KeyError:
            raise MetricError(f"unknown vertex {v!r}") from None

    def degree(self, v: str) -> int:
        return len(self.neighbors(v))

    def is_path(self) -> bool:
        return all(len(ns) <= 2 for ns in self._adj.values())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TreeMetric)
            and self.vertices == other.vertices
            and self._lengths == other._lengths
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.vertices, tuple(sorted(self._lengths.items()))))
        return self._hash

    def __repr__(self) -> str:
        return f"TreeMetric({len(self.vertices)} vertices)"

    # -- points ------------------------------------------------------------

    def point(self, a: str, b: str | None = None, offset=None) -> PointRef:
        """Canonical point: ``point(v)`` or ``point(a, b, offset_from_a)``."""
        if b is None:
            if a not in self._adj:
                raise MetricError(f"unknown vertex {a!r}")
            return Vertex(a)
        length = self.length(a, b)
        offset = as_rational(offset)
        if offset < 0 or offset > length:
            raise MetricError(f"offset {offset} outside [0, {length}] on edge ({a}, {b})")
        if a > b:
            a, b, offset = b, a, length - offset
        if offset == 0:
            return Vertex(a)
        if offset == length:
            return Vertex(b)
        return EdgeInterior(a, b, offset)

    def validate(self, p: PointRef) -> PointRef:
        if isinstance(p, Vertex):
            if p.id not in self._adj:
                raise MetricError(f"unknown vertex {p.id!r}")
            return p
        if not isinstance(p, EdgeInterior):
            raise MetricError(f"not a point: {p!r}")
        if p.a >= p.b:
            raise MetricError(f"edge point {p!r} is not canonically oriented")
        length = self.length(p.a, p.b)
        if not 0 < p.offset < length:
            raise MetricError(f"offset of {p!r} is not strictly inside (0, {length})")
        return p

    def all_vertex_points(self) -> list[Vertex]:
        return [Vertex(v) for v in self.vertices]

    def _anchor(self, p: PointRef) -> tuple[str, Fraction]:
        """``(c, d)``: the point lies ``d`` above vertex ``c`` toward its parent."""
        if isinstance(p, Vertex):
            return p.id, Fraction(0)
        if self._parent.get(p.b) == p.a:
            return p.b, self._lengths[(p.a, p.b)] - p.offset
        return p.a, p.offset

    def root_distance(self, p: PointRef) -> Fraction:
        c, d = self._anchor(p)
        return self._rdist[c] - d

    def _lca(self, u: str, v: str) -> str:
        depth, parent = self._depth, self._parent
        while depth[u] > depth[v]:
            u = parent[u]
        while depth[v] > depth[u]:
            v = parent[v]
        while u != v:
            u, v = parent[u], parent[v]
        return u

    def is_ancestor(self, u: str, v: str) -> bool:
        """True if vertex ``u`` lies on the root path of vertex ``v`` (inclusive)."""
        depth, parent = self._depth, self._parent
        du = depth[u]
        while depth[v] > du:
            v = parent[v]
        return u == v

    # -- distances and paths -----------------------------------------------

    def distance(self, p: PointRef, q: PointRef) -> Fraction:
        cp, dp = self._anchor(p)
        cq, dq = self._anchor(q)
        if cp == cq:
            return abs(dp - dq)
        w = self._lca(cp, cq)
        rp = self._rdist[cp] - dp
        rq = self._rdist[cq] - dq
        if w == cp:
            return rq - rp
        if w == cq:
            return rp - rq
        return rp + rq - 2 * self._rdist[w]

    def _climb(self, c: str, stop: str) -> list[str]:
        """Proper ancestors of ``c`` up to and including ``stop``."""
        out = []
        while c != stop:
            c = self._parent[c]
            out.append(c)
        return out

    def path(self, p: PointRef, q: PointRef) -> PathDecomposition:
        self.validate(p)
        self.validate(q)
        cp, dp = self._anchor(p)
        cq, dq = self._anchor(q)
        if p == q:
            return PathDecomposition((p,), Fraction(0))
        if cp == cq:
            return PathDecomposition((p, q), abs(dp - dq))
        w = self._lca(cp, cq)
        if w == cp:
            down = [Vertex(x) for x in self._climb(cq, cp)]
            down.reverse()
            mids = down
        elif w == cq:
            mids = [Vertex(x) for x in self._climb(cp, cq)]
        else:
            up = [Vertex(x) for x in self._climb(cp, w)]
            down = [Vertex(x) for x in self._climb(cq, w)[:-1]]
            down.reverse()
            mids = up + down
        way = [p] + [m for m in mids if m != p and m != q] + [q]
        return PathDecomposition(tuple(way), self.distance(p, q))

    def on_path(self, x: PointRef, p: PointRef, q: PointRef) -> bool:
        return self.distance(p, x) + self.distance(x, q) == self.distance(p, q)

    def point_along(self, p: PointRef, q: PointRef, t: Fraction) -> PointRef:
        """The point on path(p, q) at distance ``t`` from ``p``."""
        total = self.distance(p, q)
        if t < 0 or t > total:
            raise MetricError(f"distance {t} outside [0, {total}]")
        way = self.path(p, q).waypoints
        walked = Fraction(0)
        for x, y in zip(way, way[1:]):
            seg = self.distance(x, y)
            if walked + seg >= t:
                return self._between(x, y, t - walked)
            walked += seg
        return q

    def _between(self, x: PointRef, y: PointRef, t: Fraction) -> PointRef:
        # consecutive waypoints share an edge
        if t == 0:
            return x
        if t == self.distance(x, y):
            return y
        if isinstance(x, EdgeInterior):
            a, b = x.a, x.b
        elif isinstance(y, EdgeInterior):
            a, b = y.a, y.b
        else:
            a, b = edge_key(x.id, y.id)
        ox = self.distance(Vertex(a), x)
        oy = self.distance(Vertex(a), y)
        return self.point(a, b, ox + t if oy > ox else ox - t)

    # -- component labels (used by the median machinery) -------------------

    def direction(self, p: PointRef, q: PointRef):
        """Label of the component of ``T - p`` containing ``q`` (``q != p``).

        Two points get the same label iff the path between them avoids ``p``.
        """
        cp, dp = self._anchor(p)
        cq, dq = self._anchor(q)
        if dp:
            # p interior to the edge above cp: two sides
            if cq == cp:
                return _DOWN if dq < dp else _UP
            return _DOWN if self.is_ancestor(cp, cq) else _UP
        # p is the vertex cp
        if cq == cp:
            return _UP  # q is interior of the edge above cp
        depth, parent = self._depth, self._parent
        dc = depth[cp]
        v = cq
        while depth[v] > dc + 1:
            v = parent[v]
        if depth[v] == dc + 1 and parent[v] == cp:
            return ("c", v)
        return _UP

    # -- editing -----------------------------------------------------------

    def fresh_vertex_id(self, stem: str = "_s") -> str:
        i = 0
        taken = self._adj
        while f"{stem}{i}" in taken:
            i += 1
        return f"{stem}{i}"

    def split_at(self, p: PointRef, new_id: str | None = None) -> tuple["TreeMetric", str]:
        """Make ``p`` a vertex.  Returns the new metric and the vertex id of ``p``."""
        self.validate(p)
        if isinstance(p, Vertex):
            return self, p.id
        vid = new_id if new_id is not None else self.fresh_vertex_id()
        if vid in self._adj:
            raise MetricError(f"vertex id {vid!r} already exists")
        length = self._lengths[(p.a, p.b)]
        edges = [(a, b, ln) for (a, b), ln in self._lengths.items() if (a, b) != (p.a, p.b)]
        edges.append((p.a, vid, p.offset))
        edges.append((vid, p.b, length - p.offset))
        return TreeMetric(self.vertices + (vid,), edges), vid

    def lift(self, p: PointRef, source: "TreeMetric") -> PointRef:
        """Re-express a point of a coarser ``source`` metric in this one.

        ``self`` must be obtained from ``source`` by :meth:`split_at` calls.
        """
        if isinstance(p, Vertex):
            return p
        if (p.a, p.b) in self._lengths:
            return p
        # the edge was split; walk the chain of new vertices from a toward b
        way = self.path(Vertex(p.a), Vertex(p.b)).waypoints
        return self.point_along(way[0], way[-1], p.offset)


def component_weights(metric: TreeMetric, p: PointRef, entries: Iterable[tuple[PointRef, Fraction]]) -> list[Fraction]:
    """Total weight of each component of ``T - p`` (points at ``p`` excluded).

    ``entries`` yields ``(location, weight)`` pairs; multiplicities are
    expressed by repetition or by pre-multiplied weights.  The order of the
    returned list follows the sorted component labels.
    """
    groups: dict = {}
    for q, w in entries:
        if q == p:
            continue
        label = metric.direction(p, q)
        groups[label] = groups.get(label, Fraction(0)) + w
    return [groups[k] for k in sorted(groups)]


def path_graph(lengths: Sequence, prefix: str = "v") -> TreeMetric:
    """A path ``v0 - v1 - ... - vk`` with the given edge lengths."""
    width = len(str(len(lengths)))
    names = [f"{prefix}{i:0{width}d}" for i in range(len(lengths) + 1)]
    return TreeMetric(names, [(names[i], names[i + 1], ln) for i, ln in enumerate(lengths)])
