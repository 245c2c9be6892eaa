"""The cut space {0..d-1} x R: threshold cuts, interval unions and uniform cut sampling.

Every set is a union of half-open intervals ``[a, b)`` per coordinate. Endpoints
carry no measure, so the half-open convention keeps the set algebra exact
without changing sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np


class EmptyCutSetError(ValueError):
    pass


class ThresholdCut(NamedTuple):
    coord: int
    threshold: float


def delta(x, cut: ThresholdCut) -> int:
    """1 if ``x`` lies strictly right of the cut, else 0 (ties go left)."""
    return int(float(x[cut.coord]) > cut.threshold)


def _normalize(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Sort and merge intervals into a disjoint (m, 2) array; drops empty ones."""
    keep = lo < hi
    lo, hi = lo[keep], hi[keep]
    if lo.size == 0:
        return np.empty((0, 2))
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    # a new run starts where an interval begins past everything before it
    start = np.ones(lo.size, dtype=bool)
    start[1:] = lo[1:] > reach[:-1]
    end = np.r_[start[1:], True]
    out_lo, out_hi = lo[start], reach[end]
    return np.column_stack([out_lo, out_hi])


def _contains(iv: np.ndarray, x: np.ndarray) -> np.ndarray:
    if iv.shape[0] == 0:
        return np.zeros(x.shape, dtype=bool)
    j = np.searchsorted(iv[:, 0], x, side="right") - 1
    ok = j >= 0
    out = np.zeros(x.shape, dtype=bool)
    out[ok] = x[ok] < iv[j[ok], 1]
    return out


def _combine(a: np.ndarray, b: np.ndarray, op) -> np.ndarray:
    pts = np.unique(np.concatenate([a.ravel(), b.ravel()]))
    if pts.size < 2:
        return np.empty((0, 2))
    left = pts[:-1]
    inside = op(_contains(a, left), _contains(b, left))
    return _normalize(left[inside], pts[1:][inside])


@dataclass(frozen=True, eq=False)
class IntervalUnion:
    """Measurable subset of the cut space, stored per coordinate.

    ``parts[i]`` is a sorted (m, 2) array of disjoint intervals ``[a, b)`` with ``a < b``.
    """

    dimension: int
    parts: tuple

    def __post_init__(self):
        if len(self.parts) != self.dimension:
            raise ValueError("need one interval list per coordinate")
        for p in self.parts:
            p.setflags(write=False)

    @classmethod
    def empty(cls, dimension: int) -> "IntervalUnion":
        return cls(dimension, tuple(np.empty((0, 2)) for _ in range(dimension)))

    @classmethod
    def from_intervals(cls, dimension: int, coords: Iterable[int], lo: Iterable[float],
                       hi: Iterable[float]) -> "IntervalUnion":
        coords = np.asarray(list(coords) if not isinstance(coords, np.ndarray) else coords, dtype=np.int64)
        lo = np.asarray(lo, dtype=np.float64).reshape(-1)
        hi = np.asarray(hi, dtype=np.float64).reshape(-1)
        if coords.size and (coords.min() < 0 or coords.max() >= dimension):
            raise ValueError("interval coordinate out of range")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("unbounded intervals are not supported")
        parts = tuple(_normalize(lo[coords == i], hi[coords == i]) for i in range(dimension))
        return cls(dimension, parts)

    @property
    def measure(self) -> float:
        iv = np.concatenate(self.parts) if self.parts else np.empty((0, 2))
        return float((iv[:, 1] - iv[:, 0]).sum())

    def coordinate_measures(self) -> np.ndarray:
        return np.array([(p[:, 1] - p[:, 0]).sum() for p in self.parts])

    def is_empty(self) -> bool:
        return all(p.shape[0] == 0 for p in self.parts)

    def contains(self, cut: ThresholdCut) -> bool:
        return bool(_contains(self.parts[cut.coord], np.array([cut.threshold]))[0])

    def _binary(self, other: "IntervalUnion", op) -> "IntervalUnion":
        if other.dimension != self.dimension:
            raise ValueError(f"dimension mismatch: {self.dimension} != {other.dimension}")
        return IntervalUnion(self.dimension,
                             tuple(_combine(a, b, op) for a, b in zip(self.parts, other.parts)))

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return self._binary(other, np.logical_or)

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        return self._binary(other, np.logical_and)

    def subtract(self, other: "IntervalUnion") -> "IntervalUnion":
        return self._binary(other, lambda x, y: x & ~y)

    __or__ = union
    __and__ = intersect
    __sub__ = subtract

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalUnion) or other.dimension != self.dimension:
            return NotImplemented
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.parts, other.parts))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}:" + "".join(f"[{a:g},{b:g})" for a, b in p)
                         for i, p in enumerate(self.parts) if p.shape[0])
        return f"IntervalUnion(d={self.dimension}, {{{body}}})"


def union(a: IntervalUnion, b: IntervalUnion) -> IntervalUnion:
    return a.union(b)


def subtract(a: IntervalUnion, b: IntervalUnion) -> IntervalUnion:
    return a.subtract(b)


def intersect(a: IntervalUnion, b: IntervalUnion) -> IntervalUnion:
    return a.intersect(b)


def measure(a: IntervalUnion) -> float:
    return a.measure


def separating_set(c, c2) -> IntervalUnion:
    """Cuts that put ``c`` and ``c2`` on opposite sides. Its measure is ||c - c2||_1."""
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    c2 = np.asarray(c2, dtype=np.float64).reshape(-1)
    if c.size != c2.size:
        raise ValueError(f"dimension mismatch: {c.size} != {c2.size}")
    iv = np.column_stack([np.minimum(c, c2), np.maximum(c, c2)])
    if not np.all(np.isfinite(iv)):
        raise ValueError("unbounded intervals are not supported")
    # one interval per coordinate, already disjoint and sorted
    return IntervalUnion(c.size, tuple(iv[i:i + 1] if iv[i, 0] < iv[i, 1] else iv[i:i] for i in range(c.size)))


def sample_cut(r: IntervalUnion, rng: np.random.Generator) -> ThresholdCut:
    """Draw a cut uniformly (w.r.t. Lebesgue measure) from ``r``."""
    lens = r.coordinate_measures()
    total = lens.sum()
    if not total > 0:
        raise EmptyCutSetError("empty cut set")
    coord = int(rng.choice(r.dimension, p=lens / total))
    iv = r.parts[coord]
    widths = iv[:, 1] - iv[:, 0]
    return ThresholdCut(coord, _uniform_in(iv, widths, rng))


def _uniform_in(iv: np.ndarray, widths: np.ndarray, rng: np.random.Generator) -> float:
    cum = np.cumsum(widths)
    u = rng.random() * cum[-1]
    j = min(int(np.searchsorted(cum, u, side="right")), iv.shape[0] - 1)
    a, b = iv[j]
    theta = a + (u - (cum[j] - widths[j]))
    if theta >= b:
        theta = np.nextafter(b, -np.inf)
    return float(max(theta, a))
