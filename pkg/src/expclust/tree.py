"""Threshold trees: routing, cost evaluation and JSON serialization.

A tree is stored as flat node arrays. Node 0 is the root; internal nodes hold a
coordinate and threshold, leaves hold a center index. Points with
``x[coord] <= threshold`` go left.
"""

from __future__ import annotations

import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .core import CenterSet, Dataset, Objective, clustering_cost, leaf_center, point_costs
from .cutspace import ThresholdCut


class TreeFormatError(ValueError):
    pass


class TreeInvariantError(AssertionError):
    pass


@dataclass(frozen=True, eq=False)
class ThresholdTree:
    dimension: int
    k: int
    coord: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    center: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.coord.shape[0])

    def is_leaf(self, node: int) -> bool:
        return self.coord[node] < 0

    def cut(self, node: int) -> ThresholdCut:
        return ThresholdCut(int(self.coord[node]), float(self.threshold[node]))

    def internal_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.coord >= 0)

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.coord < 0)

    def leaf_of_center(self) -> np.ndarray:
        """``out[i]`` is the node id of the leaf labelled with center ``i``."""
        out = np.full(self.k, -1, dtype=np.int64)
        lv = self.leaves()
        out[self.center[lv]] = lv
        return out

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, dep = stack.pop()
            if self.coord[node] < 0:
                best = max(best, dep)
            else:
                stack.append((int(self.left[node]), dep + 1))
                stack.append((int(self.right[node]), dep + 1))
        return best

    def preorder(self) -> list[tuple]:
        """Canonical node listing; two trees are equal iff their listings are."""
        out, stack = [], [0]
        while stack:
            node = stack.pop()
            if self.coord[node] < 0:
                out.append(("leaf", int(self.center[node])))
            else:
                out.append(("cut", int(self.coord[node]), float(self.threshold[node])))
                stack.append(int(self.right[node]))
                stack.append(int(self.left[node]))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThresholdTree):
            return NotImplemented
        return (self.dimension, self.k) == (other.dimension, other.k) and self.preorder() == other.preorder()

    def __repr__(self) -> str:
        return f"ThresholdTree(d={self.dimension}, k={self.k}, nodes={self.n_nodes})"


class TreeBuilder:
    """Grows a tree by splitting open leaves; used by every construction algorithm."""

    def __init__(self, dimension: int, k: int):
        self.dimension = dimension
        self.k = k
        self.coord = [-1]
        self.threshold = [0.0]
        self.left = [-1]
        self.right = [-1]
        self.center = [-1]

    def split(self, node: int, cut: ThresholdCut) -> tuple[int, int]:
        if self.coord[node] >= 0:
            raise ValueError(f"node {node} is already split")
        lo = len(self.coord)
        for _ in range(2):
            self.coord.append(-1)
            self.threshold.append(0.0)
            self.left.append(-1)
            self.right.append(-1)
            self.center.append(-1)
        self.coord[node] = int(cut.coord)
        self.threshold[node] = float(cut.threshold)
        self.left[node], self.right[node] = lo, lo + 1
        return lo, lo + 1

    def set_leaf(self, node: int, center: int) -> None:
        self.center[node] = int(center)

    def build(self) -> ThresholdTree:
        arr = dict(coord=np.array(self.coord, dtype=np.int64),
                   threshold=np.array(self.threshold, dtype=np.float64),
                   left=np.array(self.left, dtype=np.int64),
                   right=np.array(self.right, dtype=np.int64),
                   center=np.array(self.center, dtype=np.int64))
        for a in arr.values():
            a.setflags(write=False)
        return ThresholdTree(self.dimension, self.k, **arr)


def single_leaf(dimension: int) -> ThresholdTree:
    b = TreeBuilder(dimension, 1)
    b.set_leaf(0, 0)
    return b.build()


def route(t: ThresholdTree, x) -> int:
    """Leaf node id reached by ``x``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != t.dimension:
        raise ValueError(f"dimension mismatch: {x.size} != {t.dimension}")
    node = 0
    while t.coord[node] >= 0:
        node = t.left[node] if x[t.coord[node]] <= t.threshold[node] else t.right[node]
    return int(node)


def route_many(t: ThresholdTree, points: np.ndarray) -> np.ndarray:
    """Leaf node id for every row of ``points``."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != t.dimension:
        raise ValueError(f"dimension mismatch: points must have {t.dimension} columns")
    out = np.empty(points.shape[0], dtype=np.int64)
    stack = [(0, np.arange(points.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if t.coord[node] < 0:
            out[idx] = node
            continue
        if idx.size == 0:
            continue
        go_left = points[idx, t.coord[node]] <= t.threshold[node]
        stack.append((int(t.left[node]), idx[go_left]))
        stack.append((int(t.right[node]), idx[~go_left]))
    return out


def assign(t: ThresholdTree, points: np.ndarray) -> np.ndarray:
    """Center index each row of ``points`` is clustered to by the tree."""
    return t.center[route_many(t, points)]


def validate_tree(t: ThresholdTree, C: CenterSet | None = None) -> None:
    """Raise TreeInvariantError unless ``t`` is a well-formed k-leaf tree (over ``C``)."""
    leaves = t.leaves()
    if leaves.size != t.k:
        raise TreeInvariantError(f"expected {t.k} leaves, found {leaves.size}")
    if not np.array_equal(np.sort(t.center[leaves]), np.arange(t.k)):
        raise TreeInvariantError("leaf labels are not a permutation of 0..k-1")
    internal = t.internal_nodes()
    if np.any(t.coord[internal] >= t.dimension):
        raise TreeInvariantError("cut coordinate out of range")
    seen = np.zeros(t.n_nodes, dtype=np.int64)
    stack = [0]
    while stack:
        node = stack.pop()
        seen[node] += 1
        if t.coord[node] >= 0:
            stack.extend((int(t.left[node]), int(t.right[node])))
    if np.any(seen != 1):
        raise TreeInvariantError("node arrays do not form a tree")
    if C is not None:
        if C.k != t.k or C.dimension != t.dimension:
            raise TreeInvariantError("tree and centers disagree on k or dimension")
        got = t.center[route_many(t, C.centers)]
        bad = np.flatnonzero(got != np.arange(t.k))
        if bad.size:
            raise TreeInvariantError(f"center {int(bad[0])} routes to leaf of center {int(got[bad[0]])}")


@dataclass
class TreeCostReport:
    tree_cost: float
    reference_cost: float
    baseline_cost: float
    ratio: float | None
    leaf_sizes: list[int] = field(default_factory=list)
    mode: str = "reference"

    def to_dict(self) -> dict:
        return dict(tree_cost=self.tree_cost, reference_cost=self.reference_cost,
                    baseline_cost=self.baseline_cost, ratio=self.ratio,
                    leaf_sizes=self.leaf_sizes, mode=self.mode)


def safe_ratio(num: float, den: float | None) -> float | None:
    if den is None or den <= 0:
        return None
    return num / den


def _chunked_point_costs(points, centers, obj, chunk=2048):
    out = np.empty(points.shape[0])
    for s in range(0, points.shape[0], chunk):
        out[s:s + chunk] = point_costs(points[s:s + chunk], centers[s:s + chunk], obj)
    return out


def tree_cost(X: Dataset, C: CenterSet, t: ThresholdTree, obj: Objective,
              mode: str = "reference") -> TreeCostReport:
    """Cost of the clustering induced by ``t``.

    ``reference`` charges each point to the reference center of its leaf;
    ``optimal`` recomputes the best center of every nonempty leaf.
    """
    obj = Objective(obj)
    if mode not in ("reference", "optimal"):
        raise ValueError(f"unknown center mode {mode!r}")
    if X.dimension != C.dimension or t.dimension != C.dimension:
        raise ValueError("dimension mismatch between data, centers and tree")
    if t.k != C.k:
        raise ValueError(f"tree has k={t.k} but {C.k} centers were given")
    labels = assign(t, X.points) if len(X) else np.empty(0, dtype=np.int64)
    sizes = np.bincount(labels, minlength=t.k)
    ref = float(np.dot(X.weights, _chunked_point_costs(X.points, C.centers[labels], obj))) if len(X) else 0.0
    if mode == "reference":
        cost = ref
    else:
        cost = 0.0
        order = np.argsort(labels, kind="stable")
        bounds = np.searchsorted(labels[order], np.arange(t.k + 1))
        for c in range(t.k):
            idx = order[bounds[c]:bounds[c + 1]]
            if idx.size == 0:
                continue
            pts, w = X.points[idx], X.weights[idx]
            m = leaf_center(pts, obj, w)
            cost += float(np.dot(w, _chunked_point_costs(pts, np.broadcast_to(m, pts.shape), obj)))
    base = clustering_cost(X, C, obj)
    return TreeCostReport(cost, ref, base, safe_ratio(cost, base), sizes.tolist(), mode)


# --- serialization -------------------------------------------------------------

def _fmt_float(v: float) -> str:
    return json.dumps(float(v))


def serialize(t: ThresholdTree) -> bytes:
    """Compact JSON; floats use the shortest round-trip repr."""
    parts: list[str] = []
    stack: list = [0]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
            continue
        node = item
        if t.coord[node] < 0:
            parts.append('{"leaf":{"center":%d}}' % int(t.center[node]))
        else:
            parts.append('{"cut":{"coord":%d,"threshold":%s},"left":'
                         % (int(t.coord[node]), _fmt_float(t.threshold[node])))
            stack.extend(["}", int(t.right[node]), ',"right":', int(t.left[node])])
    body = "".join(parts)
    return ('{"dimension":%d,"k":%d,"root":%s}' % (t.dimension, t.k, body)).encode()


@contextmanager
def _deep_recursion(limit: int = 20000):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, limit))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def _int_field(obj: dict, key: str, where: str) -> int:
    if key not in obj:
        raise TreeFormatError(f"{where}: missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise TreeFormatError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def deserialize(data: bytes | str) -> ThresholdTree:
    """Parse tree JSON; structural problems raise TreeFormatError naming the path."""
    if isinstance(data, bytes):
        data = data.decode()
    try:
        with _deep_recursion():
            doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise TreeFormatError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise TreeFormatError("$: expected an object")
    if "root" not in doc:
        # bare node documents are accepted for convenience (dimension inferred)
        doc = {"root": doc}
    root = doc["root"]
    b = TreeBuilder(0, 0)
    stack = [(root, 0, "$.root")]
    max_coord, n_leaves = -1, 0
    while stack:
        obj, node, where = stack.pop()
        if not isinstance(obj, dict):
            raise TreeFormatError(f"{where}: expected an object")
        if "leaf" in obj and "cut" not in obj:
            leaf = obj["leaf"]
            if not isinstance(leaf, dict):
                raise TreeFormatError(f"{where}.leaf: expected an object")
            c = _int_field(leaf, "center", f"{where}.leaf")
            if c < 0:
                raise TreeFormatError(f"{where}.leaf.center: negative center index")
            b.set_leaf(node, c)
            n_leaves += 1
        elif "cut" in obj:
            cut = obj["cut"]
            if not isinstance(cut, dict):
                raise TreeFormatError(f"{where}.cut: expected an object")
            coord = _int_field(cut, "coord", f"{where}.cut")
            if coord < 0:
                raise TreeFormatError(f"{where}.cut.coord: negative coordinate")
            th = cut.get("threshold")
            if isinstance(th, bool) or not isinstance(th, (int, float)) or not np.isfinite(th):
                raise TreeFormatError(f"{where}.cut.threshold: expected a finite number")
            for side in ("left", "right"):
                if side not in obj:
                    raise TreeFormatError(f"{where}: missing field {side!r}")
            lo, hi = b.split(node, ThresholdCut(coord, float(th)))
            max_coord = max(max_coord, coord)
            stack.append((obj["right"], hi, where + ".right"))
            stack.append((obj["left"], lo, where + ".left"))
        else:
            raise TreeFormatError(f"{where}: expected a 'cut' or 'leaf' node")
    d = doc.get("dimension", max_coord + 1 if max_coord >= 0 else 1)
    k = doc.get("k", n_leaves)
    for name, v in (("dimension", d), ("k", k)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise TreeFormatError(f"$.{name}: expected a positive integer")
    b.dimension, b.k = d, k
    t = b.build()
    try:
        validate_tree(t)
    except TreeInvariantError as e:
        raise TreeFormatError(f"$: {e}") from None
    return t
