"""Acceptance gate: one pass/fail line per criterion, printed in the terminal summary."""
import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from expclust.algo_l1 import BuildStats, build_l1, build_l1_fast
from expclust.algo_l2 import build_l2, partition_leaf
from expclust.cli import RunConfig, run_bench
from expclust.core import CenterSet, Objective, spawn_seed
from expclust.cutspace import IntervalUnion, ThresholdCut, measure, sample_cut, separating_set
from expclust.embed import build_kmeans_tree, fit_embedding, psi_apply
from expclust.instances import gen_lb_kmeans, min_separation_bruteforce, min_separation_sweep, verify_lb
from expclust.tree import route_many, tree_cost, validate_tree

SEED = 20240501


def record(tag: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{tag} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{tag}: {detail}"


# --- A1 ---------------------------------------------------------------------

def test_a1_embedding_values():
    t0 = time.perf_counter()
    e = fit_embedding(np.array([[1.0], [3.0], [5.0]]))
    z = psi_apply(e, np.array([[1.0], [3.0], [5.0]]))[:, 0]
    ms = (time.perf_counter() - t0) * 1000
    record("A1", z.tolist() == [0.0, 2.0, 4.0] and ms < 1, f"psi(1,3,5)={z.tolist()} in {ms:.3f} ms")


# --- A2 ---------------------------------------------------------------------

def test_a2_distortion_sandwich():
    rng = np.random.default_rng(spawn_seed(SEED, 2))
    worst_lo = worst_hi = 0.0
    ok = True
    for _ in range(100):
        m, d = int(rng.integers(1, 51)), int(rng.integers(1, 11))
        K = rng.normal(size=(m, d)) * rng.uniform(0.1, 5)
        X = rng.normal(size=(10_000, d)) * rng.uniform(0.5, 10)
        e = fit_embedding(K)
        bound = 8 * len(K)  # |K|, counted with multiplicity
        for y in K:
            emb = e.l1_distance(X, y)
            sq = ((X - y) ** 2).sum(axis=1)
            ok &= bool(np.all(emb <= sq * (1 + 1e-9)) and np.all(sq <= bound * emb * (1 + 1e-9)))
            with np.errstate(divide="ignore", invalid="ignore"):
                worst_lo = max(worst_lo, float(np.nanmax(emb / sq)))
                worst_hi = max(worst_hi, float(np.nanmax(sq / (bound * emb))))
    record("A2", ok, f"max emb/sq={worst_lo:.6f} (<=1), max sq/(8|K| emb)={worst_hi:.6f} (<=1)")


# --- A3 ---------------------------------------------------------------------

def test_a3_isometry():
    rng = np.random.default_rng(spawn_seed(SEED, 3))
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        x, y = rng.normal(size=5), rng.normal(size=5)
        l1 = float(np.abs(x - y).sum())
        worst = max(worst, abs(measure(separating_set(x, y)) - l1) / max(l1, 1e-300))
    s = time.perf_counter() - t0
    record("A3", worst <= 1e-9 and s < 1, f"max rel err={worst:.2e} over 1e4 pairs in {s:.2f} s")


# --- A4-A6 corpus -------------------------------------------------------------

def corpus(n=200):
    rng = np.random.default_rng(spawn_seed(SEED, 4))
    out = []
    for i in range(n):
        k, d = int(rng.integers(1, 65)), int(rng.integers(1, 17))
        if i % 4 == 3:  # tie-heavy: small integer grid, made distinct by the last coordinate
            C = rng.integers(0, 3, size=(k, d)).astype(float)
            C[:, -1] += np.arange(k) * 3
        else:
            C = rng.normal(size=(k, d))
        out.append((i, CenterSet(C)))
    return out


def _kmeans_builder(C, rng, opts=None, stats=None):
    return build_kmeans_tree(C, rng, opts, stats)


BUILDERS = {"l1": build_l1, "l1-fast": build_l1_fast, "l2": build_l2, "kmeans-embed": _kmeans_builder}
_CORPUS_STATS: dict[str, list[tuple[int, BuildStats]]] = {}


def _corpus_builds(name):
    if name not in _CORPUS_STATS:
        res = []
        for i, C in corpus():
            st = BuildStats()
            t = BUILDERS[name](C, np.random.default_rng(spawn_seed(SEED, 40, i)), None, st)
            res.append((C, t, st))
        _CORPUS_STATS[name] = res
    return _CORPUS_STATS[name]


def test_a4_tree_validity():
    t0 = time.perf_counter()
    failures = []
    for name in BUILDERS:
        for C, t, _ in _corpus_builds(name):
            try:
                validate_tree(t, C)
                leaves = t.leaves()
                ok = len(leaves) == C.k and sorted(int(t.center[l]) for l in leaves) == list(range(C.k))
                ok &= bool(np.array_equal(t.center[route_many(t, C.centers)], np.arange(C.k)))
            except AssertionError:
                ok = False
            if not ok:
                failures.append((name, C.k))
    s = time.perf_counter() - t0
    record("A4", not failures, f"4 builders x 200 instances, {len(failures)} invalid trees, {s:.1f} s")


def test_a5_algorithm1_internals():
    bad = []
    n_rounds = 0
    worst = 0.0  # most negative (measure(A) - D) / D; equality cases differ only by summation order
    for C, t, st in _corpus_builds("l1"):
        Ds = [r.D for r in st.rounds]
        n_rounds += len(st.rounds)
        if any(b > a for a, b in zip(Ds, Ds[1:])):
            bad.append("D increased")
        if st.cuts_sampled > max(C.k - 1, 0):
            bad.append(f"{st.cuts_sampled} cuts for k={C.k}")
        for r in st.rounds:
            worst = min(worst, (r.measure_A - r.D) / r.D)
            if r.measure_A < r.D * (1 - 1e-12):
                bad.append("measure(A) < D")
    record("A5", not bad, f"{n_rounds} rounds checked, min (mu(A)-D)/D={worst:.1e}, "
                          f"violations: {bad[:3] or 'none'}")


def test_a6_algorithm2_halving():
    bad = []
    checks = 0
    for C, t, st in _corpus_builds("l2"):
        for n, sizes in st.part_checks:
            checks += 1
            if max(sizes) > n / 2:
                bad.append(f"part {max(sizes)} of {n}")
        if C.k > 1 and st.recursion_depth > math.ceil(math.log2(C.k)):
            bad.append(f"depth {st.recursion_depth} for k={C.k}")
    # the partition routine on its own, on fresh inputs
    rng = np.random.default_rng(spawn_seed(SEED, 6))
    for _ in range(200):
        k = int(rng.integers(2, 65))
        res = partition_leaf(rng.normal(size=(k, int(rng.integers(1, 17)))), rng)
        checks += 1
        if max(len(p) for p in res.parts) > k / 2:
            bad.append(f"direct part of {k}")
    record("A6", not bad, f"{checks} partitions checked, violations: {bad[:3] or 'none'}")


# --- A7 / A8 ----------------------------------------------------------------

def _mixture_bench(alg, obj):
    cfg = RunConfig(command="bench", objective=obj, algorithm=alg, seed=SEED, trials=100,
                    center_mode="optimal")
    t0 = time.perf_counter()
    rows = run_bench(cfg, "mixture", 20, 10, 2000, 0.05)
    return rows[:-1], rows[-1], time.perf_counter() - t0


def test_a7_competitive_ratio_l1():
    rows, summary, s = _mixture_bench("l1-fast", Objective.L1)
    ratios = [r["ratio"] for r in rows]
    ok = summary["ratio"] <= 5 and min(ratios) >= 1 - 1e-9 and s < 60
    record("A7", ok, f"mean ratio={summary['ratio']:.3f} (<=5), min={min(ratios):.3f}, {s:.1f} s")


def test_a8_kmeans_pipeline():
    rows, summary, s = _mixture_bench("kmeans-embed", Objective.L2SQ)
    rng = np.random.default_rng(spawn_seed(SEED, 8))
    C = CenterSet(rng.random((20, 10)))
    t, emb_t, e = build_kmeans_tree(C, rng, return_embedded=True)
    X = rng.random((10_000, 10)) * 1.2 - 0.1
    same = bool(np.array_equal(route_many(t, X), route_many(emb_t, e.apply(X))))
    ratios = [r["ratio"] for r in rows]
    ok = same and summary["ratio"] <= 50 and min(ratios) >= 1 - 1e-9 and s < 60
    record("A8", ok, f"routing equal={same}, mean ratio={summary['ratio']:.3f} (<=50), {s:.1f} s")


# --- A9 ---------------------------------------------------------------------

@pytest.mark.slow
def test_a9_lower_bound_instance():
    k = 6000
    for attempt in range(2):
        rng = np.random.default_rng(spawn_seed(SEED, 9, attempt))
        inst = gen_lb_kmeans(k, rng)
        rep = verify_lb(inst, 100_000, rng)
        if rep.separation_ok and rep.pairwise_ok:
            break
    props = rep.separation_ok and rep.pairwise_ok
    detail = (f"d={rep.d} eps={rep.eps:.5f} min_sep={rep.min_cut_separation} (>= {rep.eps * k / 4:.1f}), "
              f"min_sq={rep.min_pairwise_sq_dist:.1f} (>= {rep.d / 12:.1f}), attempts={attempt + 1}")
    tree = build_kmeans_tree(inst.centers, np.random.default_rng(spawn_seed(SEED, 9, 99)))
    cost = tree_cost(inst.data, inst.centers, tree, Objective.L2SQ, "reference").tree_cost
    ratio = cost / inst.known_opt
    record("A9", props and ratio >= 10, f"{detail}, ratio_vs_known_opt={ratio:.3f} (>= 10)")


# --- A10 --------------------------------------------------------------------

@pytest.mark.slow
def test_a10_fast_scaling():
    walls = {}
    for k in (100_000, 200_000):
        C = np.random.default_rng(spawn_seed(SEED, 10, k)).random((k, 16))
        t0 = time.perf_counter()
        t = build_l1_fast(C, np.random.default_rng(spawn_seed(SEED, 10, k, 1)))
        walls[k] = time.perf_counter() - t0
        assert len(t.leaves()) == k
    r = walls[200_000] / walls[100_000]
    record("A10", r <= 3 and walls[100_000] < 60,
           f"wall(1e5)={walls[100_000]:.1f} s, wall(2e5)={walls[200_000]:.1f} s, ratio={r:.2f} (<=3)")


# --- A11 --------------------------------------------------------------------

def test_a11_sampling_law():
    rng = np.random.default_rng(spawn_seed(SEED, 11))
    r = IntervalUnion.from_intervals(2, [0, 1], [0.0, 0.0], [1.0, 3.0])
    coords = np.array([sample_cut(r, rng).coord for _ in range(100_000)])
    p_chi = stats.chisquare(np.bincount(coords, minlength=2), [25_000, 75_000]).pvalue
    # k=2 in two dimensions: encode (coord, threshold) on one line for the KS test
    C = np.array([[0.0, 0.0], [1.0, 2.0]])

    def code(t):
        return t.coord[0] * 10 + t.threshold[0]

    a = [code(build_l1(C, rng)) for _ in range(10_000)]
    b = [code(build_l1_fast(C, rng)) for _ in range(10_000)]
    p_ks = stats.ks_2samp(a, b).pvalue
    record("A11", p_chi > 0.001 and p_ks > 0.001, f"chi-square p={p_chi:.4f}, KS p={p_ks:.4f} (> 0.001)")


# --- A12 --------------------------------------------------------------------

def _random_union(rng, d):
    n = int(rng.integers(0, 5))
    ends = np.sort(rng.integers(0, 101, (n, 2)) / 100, axis=1)
    return IntervalUnion.from_intervals(d, rng.integers(0, d, n), ends[:, 0], ends[:, 1])


def _members(u, d, grid):
    return np.array([[u.contains(ThresholdCut(i, x)) for x in grid] for i in range(d)])


def test_a12_oracle_equivalence():
    rng = np.random.default_rng(spawn_seed(SEED, 12))
    step = 1e-3
    grid = np.arange(-0.05, 1.05, step) + step / 2  # cell midpoints; endpoints sit on the 0.01 lattice
    bad = 0
    for _ in range(500):
        d = int(rng.integers(1, 4))
        a, b = _random_union(rng, d), _random_union(rng, d)
        ma, mb = _members(a, d, grid), _members(b, d, grid)
        for got, want in ((a | b, ma | mb), (a & b, ma & mb), (a - b, ma & ~mb)):
            if not np.array_equal(_members(got, d, grid), want) or abs(got.measure - want.sum() * step) > 1e-9:
                bad += 1
    sweep_bad = 0
    for _ in range(500):
        k = int(rng.integers(1, 51))
        col = rng.random(k) if rng.random() < 0.5 else rng.integers(0, 10, k) / 10
        eps = float(rng.choice([0.05, 0.1, rng.uniform(0.01, 0.5)]))
        sweep_bad += min_separation_sweep(col, eps)[0] != min_separation_bruteforce(col, eps)
    record("A12", bad == 0 and sweep_bad == 0,
           f"set algebra mismatches={bad}/1500, sweep mismatches={sweep_bad}/500")
