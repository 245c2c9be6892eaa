"""Threshold-tree construction for k-medians under the l2 norm.

A node's centers are split around their coordinate-wise median m. Candidate cuts
sit at ``m_i + sigma*sqrt(theta)`` with i uniform, sigma a random sign and theta
uniform in ``[0, R^2]``, where R is the largest distance from m to a center still
in the main part (the piece holding m). Cuts that do not split the main part are
rejected. Once the main part holds at most half the node's centers, every piece
is processed recursively.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algo_l1 import BuildError, BuildOptions, BuildStats, _as_centers
from .core import CenterSet, coordinate_median
from .cutspace import ThresholdCut
from .tree import ThresholdTree, TreeBuilder, TreeInvariantError, single_leaf, validate_tree

_BATCH = 256


class SamplerStalled(BuildError):
    pass


@dataclass
class PartitionResult:
    """Outcome of partitioning one node.

    ``steps[j]`` is the j-th accepted cut and the side ("left"/"right") kept as the
    main part; ``pieces[j]`` are the (local) indices it split off. ``main`` is the
    final main part.
    """

    median: np.ndarray
    steps: list[tuple[ThresholdCut, str]] = field(default_factory=list)
    pieces: list[np.ndarray] = field(default_factory=list)
    main: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    radii: list[float] = field(default_factory=list)
    draws: int = 0

    @property
    def parts(self) -> list[np.ndarray]:
        return [*self.pieces, self.main]


def partition_leaf(centers, rng: np.random.Generator, opts: BuildOptions | None = None) -> PartitionResult:
    opts = opts or BuildOptions()
    X = np.asarray(centers, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n, d = X.shape
    if n < 2:
        raise BuildError("partition_leaf needs at least two centers")
    if len(np.unique(X, axis=0)) != n:
        raise BuildError("coincident centers")
    m = coordinate_median(X)
    res = PartitionResult(median=m)
    main = np.arange(n)
    while len(main) > n / 2:
        P = X[main]
        R = float(np.sqrt(((P - m) ** 2).sum(axis=1).max()))
        if opts.check and res.radii and R > res.radii[-1]:
            raise TreeInvariantError("main-part radius increased")
        res.radii.append(R)
        lo, hi = P.min(axis=0), P.max(axis=0)
        while True:
            if res.draws >= opts.max_draws:
                raise SamplerStalled("sampler stalled")
            batch = min(_BATCH, opts.max_draws - res.draws)
            coord = rng.integers(0, d, size=batch)
            theta = rng.uniform(0.0, R * R, size=batch)
            sign = rng.choice(np.array([-1.0, 1.0]), size=batch)
            v = m[coord] + sign * np.sqrt(theta)
            ok = np.flatnonzero((lo[coord] <= v) & (v < hi[coord]))
            if ok.size:
                j = int(ok[0])
                res.draws += j + 1
                break
            res.draws += batch
        i, th = int(coord[j]), float(v[j])
        go_left = P[:, i] <= th
        main_left = bool(m[i] <= th)
        keep = go_left if main_left else ~go_left
        res.steps.append((ThresholdCut(i, th), "left" if main_left else "right"))
        res.pieces.append(main[~keep])
        main = main[keep]
    res.main = main
    if opts.check:
        for part in res.parts:
            if len(part) > n / 2:
                raise TreeInvariantError(f"part of size {len(part)} exceeds half of {n}")
    return res


def build_l2(C, rng: np.random.Generator, opts: BuildOptions | None = None,
             stats: BuildStats | None = None) -> ThresholdTree:
    opts = opts or BuildOptions()
    centers = _as_centers(C)
    k, d = centers.shape
    if stats is not None:
        stats.algorithm = "l2"
    if k == 1:
        return single_leaf(d)
    builder = TreeBuilder(d, k)
    stack = [(0, np.arange(k), 1)]
    max_level = draws = cuts = 0
    while stack:
        node, ids, level = stack.pop()
        if len(ids) == 1:
            builder.set_leaf(node, int(ids[0]))
            continue
        max_level = max(max_level, level)
        res = partition_leaf(centers[ids], rng, opts)
        draws += res.draws
        cuts += len(res.steps)
        if stats is not None:
            stats.part_checks.append((len(ids), [len(p) for p in res.parts]))
        cur = node
        for (cut, side), piece in zip(res.steps, res.pieces):
            lo, hi = builder.split(cur, cut)
            main_node, piece_node = (lo, hi) if side == "left" else (hi, lo)
            stack.append((piece_node, ids[piece], level + 1))
            cur = main_node
        stack.append((cur, ids[res.main], level + 1))
    if stats is not None:
        stats.recursion_depth = max_level
        stats.draws = draws
        stats.iterations = stats.cuts_sampled = cuts
    tree = builder.build()
    if opts.check:
        validate_tree(tree, CenterSet(centers))
    return tree
