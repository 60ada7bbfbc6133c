"""Weighted medians on tree metrics.

``m_p`` is the heaviest component of the multiset once everything located at
``p`` is removed; ``p`` is a weighted median when that weight is at most half
the total.  Among all weighted medians there is exactly one closest to any
fixed point ``z``, and it always lies in ``V ∪ {z} ∪ support(S)``, so the search
below is finite and exact.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .tree_metric import PointRef, TreeMetric, component_weights, point_key


class EmptyMultisetError(ValueError):
    pass


class MedianUniquenessError(AssertionError):
    """Two distinct medians at the same minimal distance from ``z``."""


@dataclass(frozen=True)
class WeightedPoint:
    location: PointRef
    weight: Fraction

    def __post_init__(self):
        if not isinstance(self.weight, Fraction):
            object.__setattr__(self, "weight", Fraction(self.weight))
        if self.weight <= 0:
            raise ValueError(f"weight must be positive, got {self.weight}")


class WeightedMultiset:
    """A multiset of weighted points with the usual union/difference rules."""

    __slots__ = ("_counts", "_total")

    def __init__(self, items: Iterable = ()):
        counts: Counter = Counter()
        for item in items:
            if isinstance(item, WeightedPoint):
                counts[item] += 1
            else:
                loc, w = item
                counts[WeightedPoint(loc, w)] += 1
        self._counts = counts
        self._total = sum((wp.weight * f for wp, f in counts.items()), Fraction(0))

    @classmethod
    def unit(cls, points: Iterable[PointRef]) -> "WeightedMultiset":
        return cls((p, 1) for p in points)

    @classmethod
    def _from_counts(cls, counts: Counter) -> "WeightedMultiset":
        out = cls()
        out._counts = Counter({k: v for k, v in counts.items() if v > 0})
        out._total = sum((wp.weight * f for wp, f in out._counts.items()), Fraction(0))
        return out

    def multiplicity(self, wp: WeightedPoint) -> int:
        return self._counts.get(wp, 0)

    def total_weight(self) -> Fraction:
        return self._total

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __iter__(self):
        for wp in sorted(self._counts, key=lambda w: (point_key(w.location), w.weight)):
            for _ in range(self._counts[wp]):
                yield wp

    def __eq__(self, other) -> bool:
        return isinstance(other, WeightedMultiset) and self._counts == other._counts

    def union(self, other: "WeightedMultiset") -> "WeightedMultiset":
        return self._from_counts(self._counts + other._counts)

    def difference(self, other: "WeightedMultiset") -> "WeightedMultiset":
        return self._from_counts(self._counts - other._counts)

    __or__ = union
    __sub__ = difference

    def at(self, p: PointRef) -> "WeightedMultiset":
        """The sub-multiset ``S_p`` located exactly at ``p``."""
        return self._from_counts(Counter({wp: f for wp, f in self._counts.items() if wp.location == p}))

    def location_weights(self) -> dict[PointRef, Fraction]:
        """Aggregated weight per distinct location."""
        out: dict[PointRef, Fraction] = {}
        for wp, f in self._counts.items():
            out[wp.location] = out.get(wp.location, Fraction(0)) + wp.weight * f
        return out

    def support(self) -> list[PointRef]:
        return sorted(self.location_weights(), key=point_key)

    def __repr__(self) -> str:
        body = ", ".join(f"{wp.location!r}:{wp.weight}x{f}" for wp, f in self._counts.items())
        return f"WeightedMultiset({body})"


@dataclass(frozen=True)
class MedianResult:
    chosen: PointRef
    m_value: Fraction
    candidates: tuple[tuple[PointRef, bool], ...]


def _as_multiset(S) -> WeightedMultiset:
    if isinstance(S, WeightedMultiset):
        return S
    return WeightedMultiset(S)


def _max_component(metric: TreeMetric, p: PointRef, weights: dict[PointRef, Fraction]) -> Fraction:
    comps = component_weights(metric, p, weights.items())
    return max(comps) if comps else Fraction(0)


def m_p(metric: TreeMetric, S, p: PointRef) -> Fraction:
    S = _as_multiset(S)
    if not S:
        raise EmptyMultisetError("m_p of an empty multiset")
    return _max_component(metric, metric.validate(p), S.location_weights())


def is_weighted_median(metric: TreeMetric, S, p: PointRef) -> bool:
    S = _as_multiset(S)
    return m_p(metric, S, p) <= S.total_weight() / 2


def closest_median(metric: TreeMetric, S, z: PointRef) -> MedianResult:
    """The unique weighted median of ``S`` nearest to ``z``."""
    S = _as_multiset(S)
    if not S:
        raise EmptyMultisetError("closest_median of an empty multiset")
    metric.validate(z)
    weights = S.location_weights()
    return _closest_median(metric, weights, S.total_weight(), z)


def _closest_median(metric: TreeMetric, weights: dict, total: Fraction, z: PointRef) -> MedianResult:
    half = total / 2
    cands = {p: None for p in metric.all_vertex_points()}
    cands[z] = None
    for p in weights:
        cands[p] = None
    ranked = sorted(((metric.distance(p, z), point_key(p), p) for p in cands), key=lambda t: t[:2])
    examined = []
    chosen = None
    best_d = None
    chosen_m = None
    for d, _, p in ranked:
        if chosen is not None and d > best_d:
            break
        m = _max_component(metric, p, weights)
        ok = m <= half
        examined.append((p, ok))
        if not ok:
            continue
        if chosen is not None:
            raise MedianUniquenessError(f"medians {chosen!r} and {p!r} both at distance {d} from {z!r}")
        chosen, best_d, chosen_m = p, d, m
    if chosen is None:  # pragma: no cover - a weighted median always exists
        raise AssertionError("no weighted median among the candidate set")
    return MedianResult(chosen, chosen_m, tuple(examined))


def weighted_closest_median(metric: TreeMetric, pairs: Iterable[tuple[PointRef, Fraction]], z: PointRef) -> PointRef:
    """Fast path for mechanisms: ``pairs`` of (location, weight), duplicates allowed."""
    weights: dict[PointRef, Fraction] = {}
    for loc, w in pairs:
        weights[loc] = weights.get(loc, Fraction(0)) + w
    if not weights:
        raise EmptyMultisetError("closest_median of an empty multiset")
    return _closest_median(metric, weights, sum(weights.values(), Fraction(0)), z).chosen


def median_of_points(metric: TreeMetric, points: Iterable[PointRef], z: PointRef) -> PointRef:
    """The median of a plain multiset of points closest to ``z``."""
    return weighted_closest_median(metric, ((p, Fraction(1)) for p in points), z)
