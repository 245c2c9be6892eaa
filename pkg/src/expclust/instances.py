"""Benchmark mixtures, k-means++ style seeding, and the adversarial lower-bound
instances together with empirical checks of their two key properties
(well-separated centers, every cut separating many points from their centers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CenterSet, Dataset, Objective, point_costs


class InstanceError(ValueError):
    pass


@dataclass(eq=False)
class Instance:
    data: Dataset
    centers: CenterSet
    assignment: np.ndarray
    objective: Objective
    known_opt: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.shape != (len(self.data),):
            raise InstanceError("need one assignment per data point")
        if self.assignment.size and (self.assignment.min() < 0 or self.assignment.max() >= self.centers.k):
            raise InstanceError("assignment index out of range")
        self.objective = Objective(self.objective)

    def assignment_cost(self, chunk: int = 1024) -> float:
        X, C = self.data, self.centers.centers
        total = 0.0
        for s in range(0, len(X), chunk):
            a = self.assignment[s:s + chunk]
            total += float(np.dot(X.weights[s:s + chunk], point_costs(X.points[s:s + chunk], C[a], self.objective)))
        return total

    def metadata(self) -> dict:
        out = dict(self.meta)
        out.update(k=self.centers.k, d=self.centers.dimension, known_opt=self.known_opt,
                   objective=self.objective.value)
        out.setdefault("eps", None)
        out.setdefault("seed", None)
        return out


def gen_mixture(k: int, d: int, n: int, spread: float, rng: np.random.Generator,
                objective: Objective = Objective.L1) -> Instance:
    """k uniform centers in [0,1]^d and n Gaussian-perturbed copies of random centers."""
    if k < 1 or d < 1 or n < k:
        raise InstanceError(f"invalid sizes k={k}, d={d}, n={n} (need k>=1, d>=1, n>=k)")
    if spread < 0:
        raise InstanceError("spread must be non-negative")
    centers = rng.random((k, d))
    assignment = rng.integers(0, k, size=n)
    points = centers[assignment] + spread * rng.standard_normal((n, d))
    return Instance(Dataset(points), CenterSet(centers), assignment, objective,
                    meta=dict(kind="mixture", n=n, spread=spread))


def kmeanspp_seed(X: Dataset, k: int, obj: Objective, rng: np.random.Generator) -> CenterSet:
    """Seed k centers from X, sampling each new one with probability proportional
    to weight times its current cost (squared distance for L2SQ, distance otherwise).
    """
    obj = Objective(obj)
    if k < 1:
        raise InstanceError("k must be positive")
    if len(np.unique(X.points, axis=0)) < k:
        raise InstanceError(f"fewer than k={k} distinct points")
    w = X.weights
    first = int(rng.choice(len(X), p=w / w.sum()))
    chosen = [first]
    best = point_costs(X.points, np.broadcast_to(X.points[first], X.points.shape), obj)
    while len(chosen) < k:
        p = w * best
        nxt = int(rng.choice(len(X), p=p / p.sum()))
        chosen.append(nxt)
        best = np.minimum(best, point_costs(X.points, np.broadcast_to(X.points[nxt], X.points.shape), obj))
    return CenterSet(X.points[chosen])


def _min_feasible_k(eps_const: float) -> int:
    k = 2
    while eps_const * math.log(k) / k >= 1:
        k += 1 if k < 64 else max(1, k // 1024)
    while k > 2 and eps_const * math.log(k - 1) / (k - 1) < 1:
        k -= 1
    return k


def lb_kmeans_params(k: int, d_const: float = 300, eps_const: float = 300, force: bool = False) -> tuple[int, float]:
    """Dimension ceil(d_const ln k) and offset eps_const ln k / k for the k-means lower bound."""
    if k < 2:
        raise InstanceError("k must be at least 2")
    d = max(1, math.ceil(d_const * math.log(k)))
    eps = eps_const * math.log(k) / k
    if eps >= 1 and not force:
        raise InstanceError(f"eps={eps:.4g} >= 1 for k={k}; the construction needs "
                            f"k >= {_min_feasible_k(eps_const)} with these constants (or force)")
    return d, eps


def lb_l2medians_params(k: int, d_const: float = 300) -> tuple[int, float]:
    if k < 2:
        raise InstanceError("k must be at least 2")
    return max(1, math.ceil(d_const * math.log(k))), 1.0 / math.ceil(math.log(k))


def _offset_instance(centers: np.ndarray, eps: float, colocated_weight: float) -> tuple[Dataset, np.ndarray]:
    k, d = centers.shape
    rows = np.empty((3 * k, d))
    rows[0::3] = centers - eps
    rows[1::3] = centers + eps
    rows[2::3] = centers
    weights = np.ones(3 * k)
    weights[2::3] = colocated_weight
    return Dataset(rows, weights), np.repeat(np.arange(k), 3)


def gen_lb_kmeans(k: int, rng: np.random.Generator, d_const: float = 300, eps_const: float = 300,
                  colocated_weight: float | None = None, force: bool = False) -> Instance:
    """Random centers in [0,1]^d, each with points at c - eps*1 and c + eps*1 and a heavy
    point at c. The optimal k-means cost is exactly 2*k*eps^2*d.
    """
    d, eps = lb_kmeans_params(k, d_const, eps_const, force)
    centers = rng.random((k, d))
    w = float(k * k) if colocated_weight is None else float(colocated_weight)
    data, assignment = _offset_instance(centers, eps, w)
    return Instance(data, CenterSet(centers), assignment, Objective.L2SQ, 2 * k * eps * eps * d,
                    meta=dict(kind="lb-kmeans", eps=eps, colocated_weight=w))


def gen_lb_l2medians(k: int, rng: np.random.Generator, d_const: float = 300,
                     colocated_weight: float | None = None) -> Instance:
    """Centers drawn from the grid {0, eps, ..., 1}^d with eps = 1/ceil(ln k), plus the
    same offset points as the k-means construction. Reference cost is 2*k*eps*sqrt(d).
    """
    d, eps = lb_l2medians_params(k, d_const)
    steps = round(1 / eps)
    grid = rng.integers(0, steps + 1, size=(k, d))
    while True:
        _, first = np.unique(grid, axis=0, return_index=True)
        if first.size == k:
            break
        dup = np.setdiff1d(np.arange(k), first)
        grid[dup] = rng.integers(0, steps + 1, size=(dup.size, d))
    centers = grid * eps
    w = float(k * k) if colocated_weight is None else float(colocated_weight)
    data, assignment = _offset_instance(centers, eps, w)
    return Instance(data, CenterSet(centers), assignment, Objective.L2, 2 * k * eps * math.sqrt(d),
                    meta=dict(kind="lb-l2medians", eps=eps, colocated_weight=w))


# --- verification ---------------------------------------------------------------

@dataclass
class LbVerifyReport:
    k: int
    d: int
    eps: float
    pair_samples: int
    min_pairwise_sq_dist: float
    pairwise_threshold: float
    pairwise_ok: bool
    min_cut_separation: int
    separation_threshold: float
    separation_ok: bool
    worst_cut: tuple[int, float] | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def covered_intervals(col: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Cut positions that separate an offset point from its center: [c - eps, c + eps)."""
    return col - eps, col + eps


def min_separation_sweep(col: np.ndarray, eps: float, lo: float = 0.0, hi: float = 1.0) -> tuple[int, float]:
    """Fewest centers damaged by any cut position in [lo, hi), by sweeping interval endpoints."""
    a, b = covered_intervals(col, eps)
    a_sorted, b_sorted = np.sort(a), np.sort(b)
    cand = np.concatenate([[lo], a, b])
    cand = cand[(cand >= lo) & (cand < hi)]
    counts = np.searchsorted(a_sorted, cand, side="right") - np.searchsorted(b_sorted, cand, side="right")
    j = int(np.argmin(counts))
    return int(counts[j]), float(cand[j])


def min_separation_bruteforce(col: np.ndarray, eps: float, lo: float = 0.0, hi: float = 1.0) -> int:
    """O(k^2) reference: count intervals containing each candidate position one by one."""
    a, b = covered_intervals(col, eps)
    cands = [lo] + [float(v) for v in np.concatenate([a, b]) if lo <= v < hi]
    best = None
    for p in cands:
        c = 0
        for x, y in zip(a, b):
            if x <= p < y:
                c += 1
        best = c if best is None else min(best, c)
    return best


def verify_lb(inst: Instance, pair_samples: int = 100_000, rng: np.random.Generator | None = None,
              chunk: int = 512) -> LbVerifyReport:
    rng = rng if rng is not None else np.random.default_rng(0)
    C = inst.centers.centers
    k, d = C.shape
    eps = float(inst.meta["eps"])
    best = np.inf
    done = 0
    while done < pair_samples:
        m = min(chunk, pair_samples - done)
        i = rng.integers(0, k, size=m)
        j = (i + rng.integers(1, k, size=m)) % k
        diff = C[i] - C[j]
        best = min(best, float(np.einsum("nd,nd->n", diff, diff).min()))
        done += m
    # the l2-medians construction only guarantees distance sqrt(d)/4
    pair_thr = d / 16 if inst.objective is Objective.L2 else d / 12
    worst, where = None, None
    for coord in range(d):
        cnt, pos = min_separation_sweep(C[:, coord], eps)
        if worst is None or cnt < worst:
            worst, where = cnt, (coord, pos)
    sep_thr = eps * k / 4
    return LbVerifyReport(k, d, eps, pair_samples, best, pair_thr, bool(best >= pair_thr),
                          int(worst), sep_thr, bool(worst >= sep_thr), where)


__all__ = [
    "Instance", "InstanceError", "LbVerifyReport", "gen_mixture", "kmeanspp_seed",
    "gen_lb_kmeans", "gen_lb_l2medians", "lb_kmeans_params", "lb_l2medians_params",
    "verify_lb", "min_separation_sweep", "min_separation_bruteforce",
]
