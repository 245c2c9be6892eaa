"""Coordinate-cut preserving terminal embedding of squared l2 into l1, and the
k-means tree pipeline built on it.

In one dimension, with sorted terminals y_1 < ... < y_m, terminal y_i maps to
z_i = 1/2 * sum_{j<i} (y_{j+1} - y_j)^2 and any other x maps to
z_i + sign(x - y_i) * (x - y_i)^2, y_i being the terminal closest to x. The map
is strictly increasing, so threshold cuts pull back to threshold cuts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algo_l1 import BuildOptions, BuildStats, _as_centers, build_l1, build_l1_fast
from .core import CenterSet
from .cutspace import ThresholdCut
from .tree import ThresholdTree, validate_tree


@dataclass(frozen=True, eq=False)
class TerminalEmbedding1D:
    breakpoints: np.ndarray  # sorted distinct terminals y
    images: np.ndarray  # z, with z[0] == 0

    @classmethod
    def fit(cls, terminals) -> "TerminalEmbedding1D":
        y = np.unique(np.asarray(terminals, dtype=np.float64).reshape(-1))
        if y.size == 0:
            raise ValueError("need at least one terminal")
        z = np.zeros(y.size)
        z[1:] = 0.5 * np.cumsum(np.diff(y) ** 2)
        y.setflags(write=False)
        z.setflags(write=False)
        return cls(y, z)

    def _closest(self, x: np.ndarray) -> np.ndarray:
        y = self.breakpoints
        j = np.clip(np.searchsorted(y, x, side="left"), 1, max(y.size - 1, 1))
        if y.size == 1:
            return np.zeros(x.shape, dtype=np.int64)
        # ties at midpoints go to the left terminal
        right_closer = (y[j] - x) < (x - y[j - 1])
        return np.where(right_closer, j, j - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        i = self._closest(x)
        off = x - self.breakpoints[i]
        return self.images[i] + np.sign(off) * off * off

    def difference(self, x, y) -> np.ndarray:
        """psi(x) - psi(y) without the cancellation of subtracting two images.

        Points sharing a closest terminal differ only in their square offsets, so
        the (possibly large) image z drops out exactly.
        """
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        i, j = self._closest(x), self._closest(y)
        ox, oy = x - self.breakpoints[i], y - self.breakpoints[j]
        return (self.images[i] - self.images[j]) + (np.sign(ox) * ox * ox - np.sign(oy) * oy * oy)

    def inverse(self, theta):
        """Exact preimage: the unique x with psi(x) == theta."""
        th = np.asarray(theta, dtype=np.float64)
        z = self.images
        # psi maps midpoints between terminals to midpoints between images,
        # so the piece is located by the nearest image
        if z.size == 1:
            i = np.zeros(th.shape, dtype=np.int64)
        else:
            j = np.clip(np.searchsorted(z, th, side="left"), 1, z.size - 1)
            i = np.where((z[j] - th) < (th - z[j - 1]), j, j - 1)
        off = th - z[i]
        return self.breakpoints[i] + np.sign(off) * np.sqrt(np.abs(off))

    def pull_back(self, theta: float) -> float:
        """Threshold x' with {x <= x'} == {x : psi(x) <= theta} in floating point."""
        x = float(self.inverse(theta))
        # closed form is exact up to rounding; settle the last ulps against psi itself
        for _ in range(64):
            if float(self(x)) > theta:
                x = float(np.nextafter(x, -np.inf))
            elif float(self(np.nextafter(x, np.inf))) <= theta:
                x = float(np.nextafter(x, np.inf))
            else:
                break
        return x


@dataclass(frozen=True, eq=False)
class TerminalEmbedding:
    components: tuple

    @property
    def dimension(self) -> int:
        return len(self.components)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dimension:
            raise ValueError(f"dimension mismatch: {x.shape[-1]} != {self.dimension}")
        out = np.empty_like(x)
        for i, psi in enumerate(self.components):
            out[..., i] = psi(x[..., i])
        return out

    __call__ = apply

    def l1_distance(self, x, y) -> np.ndarray:
        """||psi(x) - psi(y)||_1 over the last axis, computed per coordinate via ``difference``."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        if x.shape[-1] != self.dimension:
            raise ValueError(f"dimension mismatch: {x.shape[-1]} != {self.dimension}")
        return sum(np.abs(psi.difference(x[..., i], y[..., i])) for i, psi in enumerate(self.components))


def fit_embedding(C) -> TerminalEmbedding:
    """One 1-D embedding per coordinate, with that coordinate of the centers as terminals."""
    centers = C.centers if isinstance(C, CenterSet) else np.atleast_2d(np.asarray(C, dtype=np.float64))
    return TerminalEmbedding(tuple(TerminalEmbedding1D.fit(centers[:, i]) for i in range(centers.shape[1])))


def psi_apply(e: TerminalEmbedding, x) -> np.ndarray:
    return e.apply(x)


def psi_invert_threshold(e: TerminalEmbedding, cut: ThresholdCut) -> ThresholdCut:
    return ThresholdCut(cut.coord, e.components[cut.coord].pull_back(cut.threshold))


def pull_back_tree(e: TerminalEmbedding, t: ThresholdTree) -> ThresholdTree:
    th = t.threshold.copy()
    for node in t.internal_nodes():
        th[node] = e.components[t.coord[node]].pull_back(float(t.threshold[node]))
    th.setflags(write=False)
    return ThresholdTree(t.dimension, t.k, t.coord, th, t.left, t.right, t.center)


def build_kmeans_tree(C, rng: np.random.Generator, opts: BuildOptions | None = None,
                      stats: BuildStats | None = None, fast: bool = True,
                      return_embedded: bool = False):
    """Embed the centers, build an l1 tree on the images and pull every cut back.

    With ``return_embedded`` the embedded-space tree and the embedding are returned too.
    """
    opts = opts or BuildOptions()
    centers = _as_centers(C)
    e = fit_embedding(centers)
    builder = build_l1_fast if fast else build_l1
    embedded = builder(e.apply(centers), rng, opts, stats)
    if stats is not None:
        stats.algorithm = "kmeans-embed"
    tree = pull_back_tree(e, embedded)
    if opts.check:
        validate_tree(tree, CenterSet(centers))
    if return_embedded:
        return tree, embedded, e
    return tree
