"""Points, weighted datasets, clustering objectives and per-cluster centers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

WEISZFELD_TOL = 1e-9
WEISZFELD_MAX_ITER = 1000


class Objective(str, enum.Enum):
    L1 = "l1"
    L2 = "l2"
    L2SQ = "l2sq"


def as_point(x, dimension: int | None = None) -> np.ndarray:
    p = np.asarray(x, dtype=np.float64).reshape(-1)
    if p.size < 1:
        raise ValueError("a point needs at least one coordinate")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    if dimension is not None and p.size != dimension:
        raise ValueError(f"dimension mismatch: expected {dimension}, got {p.size}")
    return p


@dataclass(frozen=True, eq=False)
class Dataset:
    """Weighted points in R^d. ``points`` has shape (n, d)."""

    points: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError("points must be a 2-D array with at least one column")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if self.weights is None:
            w = np.ones(len(pts))
        else:
            w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError("need exactly one weight per point")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.points[idx], self.weights[idx])


@dataclass(frozen=True, eq=False)
class CenterSet:
    """k pairwise distinct reference centers, shape (k, d)."""

    centers: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=np.float64)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError("need at least one center with at least one coordinate")
        if not np.all(np.isfinite(c)):
            raise ValueError("center coordinates must be finite")
        if len(np.unique(c, axis=0)) != len(c):
            raise ValueError("coincident centers")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dimension(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return self.k

    def __getitem__(self, i) -> np.ndarray:
        return self.centers[i]


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise ValueError(f"dimension mismatch: {a} != {b}")


def distance(x, y, obj: Objective) -> float:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    _check_dims(x.size, y.size)
    return float(pairwise_cost(x[None, :], y[None, :], obj)[0, 0])


def pairwise_cost(points: np.ndarray, centers: np.ndarray, obj: Objective) -> np.ndarray:
    """Matrix of per-pair costs, shape (n, k)."""
    obj = Objective(obj)
    diff = points[:, None, :] - centers[None, :, :]
    if obj is Objective.L1:
        return np.abs(diff).sum(axis=2)
    sq = np.einsum("nkd,nkd->nk", diff, diff)
    return np.sqrt(sq) if obj is Objective.L2 else sq


def point_costs(points: np.ndarray, centers: np.ndarray, obj: Objective) -> np.ndarray:
    """Row-wise cost of ``points[j]`` against ``centers[j]``."""
    obj = Objective(obj)
    diff = points - centers
    if obj is Objective.L1:
        return np.abs(diff).sum(axis=1)
    sq = np.einsum("nd,nd->n", diff, diff)
    return np.sqrt(sq) if obj is Objective.L2 else sq


def nearest_costs(points: np.ndarray, centers: np.ndarray, obj: Objective,
                  chunk: int = 4_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Per-point min cost over ``centers`` and the argmin, chunked to bound memory.

    For the Euclidean objectives the argmin comes from the Gram-matrix expansion
    and the reported cost is then recomputed exactly against the chosen center.
    """
    obj = Objective(obj)
    n, d = points.shape
    k = centers.shape[0]
    arg = np.empty(n, dtype=np.int64)
    if obj is Objective.L1:
        step = max(1, chunk // max(1, k * d))
        for s in range(0, n, step):
            arg[s:s + step] = pairwise_cost(points[s:s + step], centers, obj).argmin(axis=1)
    else:
        csq = np.einsum("kd,kd->k", centers, centers)
        step = max(1, chunk // max(1, k))
        for s in range(0, n, step):
            g = points[s:s + step] @ centers.T
            arg[s:s + step] = (csq[None, :] - 2.0 * g).argmin(axis=1)
    best = np.empty(n)
    step = max(1, chunk // max(1, d))
    for s in range(0, n, step):
        best[s:s + step] = point_costs(points[s:s + step], centers[arg[s:s + step]], obj)
    return best, arg


def clustering_cost(X: Dataset, C: CenterSet, obj: Objective) -> float:
    """Weighted cost of assigning every point to its nearest center.

    An empty dataset costs 0.
    """
    _check_dims(X.dimension, C.dimension)
    if len(X) == 0:
        return 0.0
    best, _ = nearest_costs(X.points, C.centers, obj)
    return float(np.dot(X.weights, best))


def weighted_lower_median(values: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Smallest value whose cumulative weight reaches half the total."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("median of an empty slice")
    if weights is None:
        return float(np.sort(values)[(values.size - 1) // 2])
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(np.asarray(weights, dtype=np.float64)[order])
    pos = int(np.searchsorted(cw, 0.5 * cw[-1], side="left"))
    return float(values[order[min(pos, values.size - 1)]])


def coordinate_median(points: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if weights is None:
        return np.sort(points, axis=0)[(points.shape[0] - 1) // 2].copy()
    return np.array([weighted_lower_median(points[:, i], weights)
                     for i in range(points.shape[1])])


def geometric_median(points: np.ndarray, weights: np.ndarray | None = None,
                     tol: float = WEISZFELD_TOL, max_iter: int = WEISZFELD_MAX_ITER) -> np.ndarray:
    """Weiszfeld iteration for the weighted geometric median."""
    points = np.asarray(points, dtype=np.float64)
    w = np.ones(len(points)) if weights is None else np.asarray(weights, dtype=np.float64)
    if len(points) == 1:
        return points[0].copy()
    y = np.average(points, axis=0, weights=w)
    for _ in range(max_iter):
        dist = np.sqrt(((points - y) ** 2).sum(axis=1))
        if np.any(dist == 0.0):
            # landed on an input point: nudge off it and keep going
            y = y.copy()
            y[0] += 1e-12
            dist = np.sqrt(((points - y) ** 2).sum(axis=1))
            dist = np.maximum(dist, 1e-300)
        inv = w / dist
        y_new = (inv[:, None] * points).sum(axis=0) / inv.sum()
        if np.sqrt(((y_new - y) ** 2).sum()) <= tol:
            y = y_new
            break
        y = y_new
    # Weiszfeld crawls when the optimum is an input point; compare against the nearest one
    near = points[int(np.argmin(((points - y) ** 2).sum(axis=1)))]
    if _sum_dist(points, w, near) < _sum_dist(points, w, y):
        return near.copy()
    return y


def _sum_dist(points: np.ndarray, w: np.ndarray, y: np.ndarray) -> float:
    return float(np.dot(w, np.sqrt(((points - y) ** 2).sum(axis=1))))


def leaf_center(points, obj: Objective, weights=None) -> np.ndarray:
    """Optimal single center for a cluster under ``obj``.

    L1 gives the coordinate-wise lower weighted median, L2SQ the weighted mean
    and L2 the geometric median.
    """
    if isinstance(points, Dataset):
        points, weights = points.points, points.weights
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] == 0:
        raise ValueError("leaf_center of an empty slice")
    obj = Objective(obj)
    if obj is Objective.L1:
        return coordinate_median(points, weights)
    if obj is Objective.L2SQ:
        return np.average(points, axis=0, weights=weights)
    return geometric_median(points, weights)


def spawn_seed(master: int, *path: int) -> int:
    """Deterministic child seed derived from a master seed and an index path."""
    ss = np.random.SeedSequence(entropy=int(master) & ((1 << 64) - 1), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0])


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
