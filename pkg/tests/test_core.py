import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from expclust.core import (CenterSet, Dataset, Objective, clustering_cost, distance, leaf_center,
                           spawn_seed, weighted_lower_median)


@pytest.mark.parametrize("obj,expected", [(Objective.L1, 7.0), (Objective.L2, 5.0), (Objective.L2SQ, 25.0)])
def test_distance_examples(obj, expected):
    assert distance((0, 0), (3, 4), obj) == expected


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        distance((0, 0), (1, 2, 3), Objective.L1)


@pytest.mark.parametrize("obj", [Objective.L1, Objective.L2])
def test_triangle_inequality(obj, rng):
    x, y, z = rng.normal(size=(3, 10_000, 4))
    from expclust.core import point_costs
    assert np.all(point_costs(x, z, obj) <= point_costs(x, y, obj) + point_costs(y, z, obj) + 1e-12)


def test_distance_symmetric_and_zero_iff_equal(rng):
    for _ in range(100):
        x, y = rng.normal(size=(2, 3))
        for obj in Objective:
            assert distance(x, y, obj) == pytest.approx(distance(y, x, obj))
            assert distance(x, x, obj) == 0.0
        assert distance(x, y, Objective.L1) > 0


def test_clustering_cost_examples():
    assert clustering_cost(Dataset([[1.0], [4.0]]), CenterSet([[0.0], [5.0]]), Objective.L1) == 2.0
    assert clustering_cost(Dataset([[1.0]], [3.0]), CenterSet([[0.0]]), Objective.L1) == 3.0
    X = Dataset([[0.0, 0.0], [3.0, 4.0]])
    assert clustering_cost(X, CenterSet([[0.0, 0.0]]), Objective.L2SQ) == 25.0


def test_clustering_cost_empty_dataset_is_zero():
    assert clustering_cost(Dataset(np.empty((0, 2))), CenterSet([[0.0, 0.0]]), Objective.L2) == 0.0


def test_clustering_cost_dimension_mismatch():
    with pytest.raises(ValueError):
        clustering_cost(Dataset([[0.0, 1.0]]), CenterSet([[0.0]]), Objective.L1)


def test_clustering_cost_monotone_when_adding_centers(rng):
    for _ in range(50):
        X = Dataset(rng.normal(size=(40, 3)), rng.uniform(0.5, 2, size=40))
        C = rng.normal(size=(6, 3))
        for obj in Objective:
            costs = [clustering_cost(X, CenterSet(C[:j]), obj) for j in range(1, 7)]
            assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))


def test_gram_argmin_matches_brute_force(rng):
    from expclust.core import nearest_costs, pairwise_cost
    X = rng.normal(size=(500, 7))
    C = rng.normal(size=(30, 7))
    for obj in Objective:
        best, _ = nearest_costs(X, C, obj)
        np.testing.assert_allclose(best, pairwise_cost(X, C, obj).min(axis=1), rtol=1e-12)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([[0.0, np.nan]])
    with pytest.raises(ValueError):
        Dataset([[0.0], [1.0]], [1.0, 0.0])
    with pytest.raises(ValueError):
        Dataset([[0.0], [1.0]], [1.0])


def test_centerset_rejects_coincident():
    with pytest.raises(ValueError, match="coincident"):
        CenterSet([[1.0, 2.0], [1.0, 2.0]])


@pytest.mark.parametrize("obj,expected", [(Objective.L1, 1.0), (Objective.L2SQ, 2.0), (Objective.L2, 1.0)])
def test_leaf_center_examples(obj, expected):
    assert leaf_center([[0.0], [1.0], [5.0]], obj)[0] == pytest.approx(expected, abs=1e-6)


def test_leaf_center_empty():
    with pytest.raises(ValueError):
        leaf_center(np.empty((0, 2)), Objective.L1)


def test_lower_weighted_median():
    assert weighted_lower_median(np.array([0.0, 1.0, 2.0, 3.0])) == 1.0
    assert weighted_lower_median(np.array([0.0, 1.0]), np.array([1.0, 3.0])) == 1.0
    assert weighted_lower_median(np.array([0.0, 1.0]), np.array([1.0, 1.0])) == 0.0


def _objective(points, w, c, obj):
    from expclust.core import point_costs
    return float(np.dot(w, point_costs(points, np.broadcast_to(c, points.shape), obj)))


def test_leaf_center_l2sq_is_exact_minimizer(rng):
    for _ in range(50):
        P = rng.normal(size=(20, 3))
        w = rng.uniform(0.1, 3, size=20)
        m = leaf_center(P, Objective.L2SQ, w)
        # gradient of sum w ||x - c||^2 vanishes at the weighted mean
        np.testing.assert_allclose((w[:, None] * (P - m)).sum(axis=0), 0, atol=1e-10)


@pytest.mark.parametrize("obj", [Objective.L1, Objective.L2])
def test_leaf_center_beats_every_input_point(obj, rng):
    for _ in range(50):
        P = rng.normal(size=(15, 3))
        w = rng.uniform(0.1, 3, size=15)
        m = leaf_center(P, obj, w)
        val = _objective(P, w, m, obj)
        assert all(val <= _objective(P, w, p, obj) + 1e-9 for p in P)


@pytest.mark.parametrize("obj", [Objective.L1, Objective.L2])
def test_leaf_center_matches_grid_oracle_in_1d(obj, rng):
    for _ in range(30):
        P = rng.uniform(-5, 5, size=(9, 1))
        w = rng.uniform(0.5, 2, size=9)
        m = leaf_center(P, obj, w)
        grid = np.linspace(-5, 5, 200_001)
        vals = (w[None, :] * np.abs(grid[:, None] - P[:, 0][None, :])).sum(axis=1)
        assert _objective(P, w, m, obj) <= vals.min() + 1e-6


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 4)),
              elements=st.floats(-100, 100, allow_nan=False)))
def test_l1_center_is_coordinatewise_median(P):
    m = leaf_center(P, Objective.L1)
    for i in range(P.shape[1]):
        assert (P[:, i] < m[i]).sum() <= P.shape[0] / 2
        assert (P[:, i] > m[i]).sum() <= P.shape[0] / 2


def test_spawn_seed_is_deterministic_and_distinct():
    assert spawn_seed(7, 1) == spawn_seed(7, 1)
    assert len({spawn_seed(7, i) for i in range(100)}) == 100
    assert spawn_seed(7, 1, 0) != spawn_seed(7, 1, 1)
