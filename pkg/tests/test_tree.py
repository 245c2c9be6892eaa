import json

import numpy as np
import pytest

from expclust.algo_l1 import build_l1_fast
from expclust.core import CenterSet, Dataset, Objective, clustering_cost
from expclust.cutspace import ThresholdCut
from expclust.tree import (TreeBuilder, TreeFormatError, TreeInvariantError, deserialize, route,
                           route_many, serialize, single_leaf, tree_cost, validate_tree)


def stump(theta=0.5, d=1):
    b = TreeBuilder(d, 2)
    lo, hi = b.split(0, ThresholdCut(0, theta))
    b.set_leaf(lo, 0)
    b.set_leaf(hi, 1)
    return b.build(), lo, hi


def test_route_examples():
    t = single_leaf(3)
    assert route(t, (1, 2, 3)) == 0
    t, lo, hi = stump(0.5)
    assert route(t, [0.5]) == lo
    assert route(t, [0.6]) == hi


def test_route_many_matches_route(rng):
    C = rng.normal(size=(12, 3))
    t = build_l1_fast(C, rng)
    X = rng.normal(size=(500, 3))
    assert [route(t, x) for x in X] == route_many(t, X).tolist()


def test_tree_cost_examples():
    X = Dataset([[0.0], [1.0], [5.0], [6.0]])
    C = CenterSet([[0.0], [6.0]])
    t, _, _ = stump(3.0)
    assert tree_cost(X, C, t, Objective.L1, "reference").tree_cost == 2.0
    rep = tree_cost(X, C, t, Objective.L1, "optimal")
    assert rep.tree_cost == 2.0
    assert rep.leaf_sizes == [2, 2]


@pytest.mark.parametrize("obj", list(Objective))
def test_centers_as_data_cost_zero(obj, rng):
    C = CenterSet(rng.normal(size=(9, 2)))
    t = build_l1_fast(C, rng)
    rep = tree_cost(Dataset(C.centers), C, t, obj)
    assert rep.tree_cost == 0.0
    assert rep.ratio is None


@pytest.mark.parametrize("obj", list(Objective))
def test_cost_orderings(obj, rng):
    for _ in range(20):
        C = CenterSet(rng.normal(size=(8, 3)))
        X = Dataset(rng.normal(size=(200, 3)), rng.uniform(0.5, 2, 200))
        t = build_l1_fast(C, rng)
        ref = tree_cost(X, C, t, obj, "reference")
        opt = tree_cost(X, C, t, obj, "optimal")
        assert opt.tree_cost <= ref.tree_cost + 1e-9
        assert opt.reference_cost >= opt.tree_cost - 1e-9
        assert ref.tree_cost >= clustering_cost(X, C, obj) - 1e-9


def test_empty_leaves_contribute_zero():
    t, _, _ = stump(0.5)
    rep = tree_cost(Dataset([[0.0], [0.2]]), CenterSet([[0.0], [1.0]]), t, Objective.L2, "optimal")
    assert rep.leaf_sizes == [2, 0]
    assert rep.tree_cost == pytest.approx(0.2)


def test_tree_cost_dimension_mismatch():
    t, _, _ = stump()
    with pytest.raises(ValueError):
        tree_cost(Dataset([[0.0, 1.0]]), CenterSet([[0.0], [1.0]]), t, Objective.L1)


def test_serialize_leaf_only():
    doc = json.loads(serialize(single_leaf(2)))
    assert doc == {"dimension": 2, "k": 1, "root": {"leaf": {"center": 0}}}
    assert b'"root":{"leaf":{"center":0}}' in serialize(single_leaf(2))


def test_round_trip_random_trees(rng):
    for _ in range(50):
        k = int(rng.integers(1, 40))
        C = rng.normal(size=(k, 3)) * 10 ** rng.uniform(-5, 5)
        t = build_l1_fast(C, rng)
        back = deserialize(serialize(t))
        assert back == t
        assert serialize(back) == serialize(t)


def test_round_trip_bit_exact_floats():
    b = TreeBuilder(1, 2)
    lo, hi = b.split(0, ThresholdCut(0, 0.1 + 0.2))
    b.set_leaf(lo, 1)
    b.set_leaf(hi, 0)
    t = b.build()
    assert deserialize(serialize(t)).threshold[0] == 0.1 + 0.2


def test_deep_tree_round_trip():
    # a caterpillar deeper than the default recursion limit
    k = 3000
    C = np.arange(k, dtype=float)[:, None]
    b = TreeBuilder(1, k)
    node = 0
    for i in range(k - 1):
        lo, hi = b.split(node, ThresholdCut(0, i + 0.5))
        b.set_leaf(lo, i)
        node = hi
    b.set_leaf(node, k - 1)
    t = b.build()
    validate_tree(t, CenterSet(C))
    assert deserialize(serialize(t)) == t


@pytest.mark.parametrize("bad,where", [
    ('{"cut":{}}', "$.root.cut"),
    ('{"dimension":1,"k":2,"root":{"cut":{"coord":0,"threshold":1},"left":{"leaf":{"center":0}}}}', "$.root"),
    ('{"dimension":1,"k":1,"root":{"leaf":{"center":"a"}}}', "$.root.leaf.center"),
    ('{"dimension":1,"k":1,"root":[1]}', "$.root"),
    ('{"dimension":1,', "line 1"),
    ('{"dimension":1,"k":2,"root":{"leaf":{"center":0}}}', "expected 2 leaves"),
])
def test_malformed(bad, where):
    with pytest.raises(TreeFormatError, match=where.replace("$", r"\$").replace(".", r"\.")):
        deserialize(bad)


def test_validate_detects_misrouted_center():
    t, _, _ = stump(0.5)
    with pytest.raises(TreeInvariantError, match="routes"):
        validate_tree(t, CenterSet([[1.0], [0.0]]))
