"""Explainable k-medians / k-means clustering with randomized threshold trees."""

from .algo_l1 import BuildOptions, BuildState, BuildStats, build_l1, build_l1_fast, cut_distribution
from .algo_l2 import build_l2, partition_leaf
from .core import CenterSet, Dataset, Objective, clustering_cost, distance, leaf_center
from .cutspace import IntervalUnion, ThresholdCut, delta, sample_cut, separating_set
from .embed import TerminalEmbedding, build_kmeans_tree, fit_embedding, psi_apply, psi_invert_threshold
from .instances import gen_lb_kmeans, gen_lb_l2medians, gen_mixture, kmeanspp_seed, verify_lb
from .tree import ThresholdTree, deserialize, route, serialize, tree_cost

__all__ = [
    "BuildOptions", "BuildState", "BuildStats", "CenterSet", "Dataset", "IntervalUnion", "Objective",
    "TerminalEmbedding", "ThresholdCut", "ThresholdTree", "build_kmeans_tree", "build_l1",
    "build_l1_fast", "build_l2", "clustering_cost", "cut_distribution", "delta", "deserialize",
    "distance", "fit_embedding", "gen_lb_kmeans", "gen_lb_l2medians", "gen_mixture", "kmeanspp_seed",
    "leaf_center", "partition_leaf", "psi_apply", "psi_invert_threshold", "route", "sample_cut",
    "separating_set", "serialize", "tree_cost", "verify_lb",
]
