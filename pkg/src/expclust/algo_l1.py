"""Randomized threshold-tree construction for k-medians under the l1 norm.

Two builders are provided. ``build_l1`` draws one global cut per round from the
set of cuts that separate some not-yet-separated pair of centers, minus the cuts
that only separate pairs at distance at most D/k^3, and applies it to every leaf.
``build_l1_fast`` draws an independent cut per leaf from that leaf's bounding
ranges and keeps per-leaf ordered rank tables so each split only moves the
smaller side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .core import CenterSet
from .cutspace import IntervalUnion, ThresholdCut, sample_cut
from .tree import ThresholdTree, TreeBuilder, TreeInvariantError, single_leaf, validate_tree


class BuildError(ValueError):
    pass


@dataclass
class RoundInfo:
    D: float
    measure_A: float
    measure_R: float
    cut: ThresholdCut
    leaves_split: int


@dataclass
class BuildStats:
    """Per-build diagnostics filled in by the builders when passed in."""

    algorithm: str = ""
    iterations: int = 0
    cuts_sampled: int = 0
    draws: int = 0
    rounds: list[RoundInfo] = field(default_factory=list)
    recursion_depth: int = 0
    part_checks: list[tuple[int, list[int]]] = field(default_factory=list)


@dataclass
class BuildOptions:
    max_iter: int | None = None  # default 10*k
    max_draws: int = 10**6
    check: bool = True


def _as_centers(C) -> np.ndarray:
    if isinstance(C, CenterSet):
        return C.centers
    try:
        return CenterSet(C).centers
    except ValueError as e:
        raise BuildError(str(e)) from None


@dataclass
class BuildState:
    """Open leaves of a partially built tree; ``groups[j]`` lists the centers at ``nodes[j]``."""

    centers: np.ndarray
    groups: list[np.ndarray]
    nodes: list[int]
    t: int = 0
    D_history: list[float] = field(default_factory=list)

    @classmethod
    def initial(cls, centers: np.ndarray) -> "BuildState":
        return cls(centers, [np.arange(len(centers))], [0])

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    def unseparated_pairs(self) -> list[tuple[int, int]]:
        out = []
        for g in self.groups:
            for a in range(len(g)):
                for b in range(a + 1, len(g)):
                    out.append((int(g[a]), int(g[b])))
        return out

    def done(self) -> bool:
        return all(len(g) < 2 for g in self.groups)


def _cut_sets(state: BuildState) -> tuple[float, IntervalUnion, IntervalUnion]:
    C, k, d = state.centers, state.k, state.centers.shape[1]
    big = [g for g in state.groups if len(g) >= 2]
    if not big:
        raise BuildError("build complete")
    dists = [pdist(C[g], "cityblock") for g in big]
    D = max(float(x.max()) for x in dists)
    # A_t: the union of all pairwise ranges inside a leaf is the leaf's [min, max)
    mins = np.array([C[g].min(axis=0) for g in big])
    maxs = np.array([C[g].max(axis=0) for g in big])
    coords = np.broadcast_to(np.arange(d), mins.shape)
    A = IntervalUnion.from_intervals(d, coords.ravel(), mins.ravel(), maxs.ravel())
    small = D / k**3
    lo, hi, cc = [], [], []
    for g, dist in zip(big, dists):
        ii, jj = np.triu_indices(len(g), 1)
        sel = dist <= small
        if not np.any(sel):
            continue
        p, q = C[g[ii[sel]]], C[g[jj[sel]]]
        lo.append(np.minimum(p, q).ravel())
        hi.append(np.maximum(p, q).ravel())
        cc.append(np.broadcast_to(np.arange(d), p.shape).ravel())
    if lo:
        B = IntervalUnion.from_intervals(d, np.concatenate(cc), np.concatenate(lo), np.concatenate(hi))
    else:
        B = IntervalUnion.empty(d)
    return D, A, B


def cut_distribution(state: BuildState) -> tuple[float, IntervalUnion]:
    """Current max unseparated l1 distance D_t and the cut set R_t = A_t \\ B_t."""
    D, A, B = _cut_sets(state)
    return D, A.subtract(B)


def build_l1(C, rng: np.random.Generator, opts: BuildOptions | None = None,
             stats: BuildStats | None = None) -> ThresholdTree:
    """Global-cut construction: one uniformly drawn cut per round, applied to all leaves."""
    opts = opts or BuildOptions()
    centers = _as_centers(C)
    k, d = centers.shape
    if stats is not None:
        stats.algorithm = "l1"
    if k == 1:
        return single_leaf(d)
    cap = opts.max_iter if opts.max_iter is not None else 10 * k
    builder = TreeBuilder(d, k)
    state = BuildState.initial(centers)
    prev_D = np.inf
    while not state.done():
        if state.t >= cap:
            raise BuildError("iteration cap exceeded")
        D, A, B = _cut_sets(state)
        R = A.subtract(B)
        if opts.check:
            if D > prev_D:
                raise TreeInvariantError(f"D_t increased from {prev_D} to {D}")
            if A.measure < D * (1 - 1e-12):
                raise TreeInvariantError("measure(A_t) < D_t")
        prev_D = D
        cut = sample_cut(R, rng)
        groups, nodes, n_split = [], [], 0
        for g, node in zip(state.groups, state.nodes):
            if len(g) < 2:
                groups.append(g)
                nodes.append(node)
                continue
            go_left = centers[g, cut.coord] <= cut.threshold
            if go_left.all() or not go_left.any():
                groups.append(g)
                nodes.append(node)
                continue
            lo, hi = builder.split(node, cut)
            groups += [g[go_left], g[~go_left]]
            nodes += [lo, hi]
            n_split += 1
        if n_split == 0:
            raise TreeInvariantError("sampled cut separated no unseparated pair")
        state.groups, state.nodes = groups, nodes
        state.D_history.append(D)
        state.t += 1
        if stats is not None:
            stats.rounds.append(RoundInfo(D, A.measure, R.measure, cut, n_split))
            stats.iterations = state.t
            stats.cuts_sampled = state.t
    for g, node in zip(state.groups, state.nodes):
        builder.set_leaf(node, int(g[0]))
    tree = builder.build()
    if opts.check:
        validate_tree(tree, CenterSet(centers))
    return tree


class _RankTables:
    """Global per-coordinate orderings of the centers.

    ``rank[j, c]`` is the position of center c when sorted by coordinate j (ties by
    index), ``inv[j, r]`` is its inverse and ``vals[j, r]`` the sorted values.
    """

    def __init__(self, centers: np.ndarray):
        k, d = centers.shape
        self.k, self.d = k, d
        self.inv = np.argsort(centers.T, axis=1, kind="stable")
        self.vals = np.take_along_axis(centers.T, self.inv, axis=1)
        self.rank = np.empty((d, k), dtype=np.int64)
        np.put_along_axis(self.rank, self.inv, np.arange(k)[None, :].repeat(d, 0), axis=1)
        self.offsets = (np.arange(d, dtype=np.int64) * k)[:, None]

    def table_for(self, ids: np.ndarray) -> np.ndarray:
        """Fresh ordered table for a set of centers: row j holds their sorted j-ranks."""
        return np.sort(self.rank[:, ids], axis=1)


def build_l1_fast(C, rng: np.random.Generator, opts: BuildOptions | None = None,
                  stats: BuildStats | None = None) -> ThresholdTree:
    """Per-leaf construction: each leaf draws its cut uniformly from
    the union over coordinates of ``[min_i, max_i)`` of its centers.

    Each leaf owns a (d, m) table of sorted ranks. Min/max per coordinate are its
    first/last column and a split size is one binary search. The smaller side is
    removed from the table by binary search on every row and gets a freshly
    sorted table; the larger side keeps the old one.
    """
    opts = opts or BuildOptions()
    centers = _as_centers(C)
    k, d = centers.shape
    if stats is not None:
        stats.algorithm = "l1-fast"
    if k == 1:
        return single_leaf(d)
    rt = _RankTables(centers)
    builder = TreeBuilder(d, k)
    ar = np.arange(d)
    stack = [(0, rt.table_for(np.arange(k)))]
    splits = 0
    while stack:
        node, table = stack.pop()
        m = table.shape[1]
        if m == 1:
            builder.set_leaf(node, int(rt.inv[0, table[0, 0]]))
            continue
        a = rt.vals[ar, table[:, 0]]
        b = rt.vals[ar, table[:, -1]]
        widths = b - a
        cum = widths.cumsum()
        u = rng.random(2)
        i = min(int(cum.searchsorted(u[0] * cum[-1], side="right")), d - 1)
        theta = a[i] + u[1] * widths[i]
        if theta >= b[i]:
            theta = float(np.nextafter(b[i], -np.inf))
        cut_rank = rt.vals[i].searchsorted(theta, side="right")
        n_left = int(table[i].searchsorted(cut_rank, side="left"))
        if not 0 < n_left < m:
            raise TreeInvariantError("sampled cut does not split the leaf")
        left_small = n_left <= m - n_left
        moved = table[i, :n_left] if left_small else table[i, n_left:]
        child = rt.table_for(rt.inv[i, moved])
        flat = (table + rt.offsets).ravel()
        keep = np.ones(flat.size, dtype=bool)
        keep[flat.searchsorted((child + rt.offsets).ravel())] = False
        rest = flat[keep].reshape(d, m - child.shape[1]) - rt.offsets
        lo, hi = builder.split(node, ThresholdCut(i, float(theta)))
        splits += 1
        if left_small:
            stack += [(hi, rest), (lo, child)]
        else:
            stack += [(hi, child), (lo, rest)]
    if stats is not None:
        stats.iterations = stats.cuts_sampled = splits
    tree = builder.build()
    if opts.check:
        validate_tree(tree, CenterSet(centers))
    return tree
