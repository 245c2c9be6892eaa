"""Command-line entry point: ``expclust fit|eval|gen|bench``.

Exit codes: 0 success, 2 usage/validation/I-O error, 3 internal invariant violation.
Machine-readable results go to stdout as JSON lines; human notes go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as fio
from .algo_l1 import BuildError, BuildOptions, BuildStats, build_l1, build_l1_fast
from .algo_l2 import build_l2
from .core import CenterSet, Dataset, Objective, leaf_center, spawn_seed
from .embed import build_kmeans_tree
from .instances import Instance, InstanceError, gen_lb_kmeans, gen_lb_l2medians, gen_mixture
from .tree import (ThresholdTree, TreeFormatError, TreeInvariantError, deserialize, safe_ratio,
                   serialize, tree_cost)

ALGORITHMS = {
    "l1": (build_l1, Objective.L1),
    "l1-fast": (build_l1_fast, Objective.L1),
    "l2": (build_l2, Objective.L2),
    "kmeans-embed": (build_kmeans_tree, Objective.L2SQ),
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    objective: Objective | None = None
    algorithm: str = "l1-fast"
    seed: int = 0
    centers: str | None = None
    data: str | None = None
    tree: str | None = None
    meta: str | None = None
    out: str | None = None
    trials: int = 1
    center_mode: str = "reference"
    allow_mismatch: bool = False

    def resolved_objective(self) -> Objective:
        natural = ALGORITHMS[self.algorithm][1]
        obj = self.objective or natural
        if obj is not natural and not self.allow_mismatch:
            raise UsageError(f"algorithm {self.algorithm} expects objective {natural.value}, "
                             f"got {obj.value} (use --allow-mismatch to override)")
        return obj


def build_tree(algorithm: str, C: CenterSet, seed: int, stats: BuildStats | None = None) -> ThresholdTree:
    builder = ALGORITHMS[algorithm][0]
    return builder(C, np.random.default_rng(seed), BuildOptions(), stats)


def _emit(obj: dict, out=None) -> None:
    line = json.dumps(obj, sort_keys=True)
    if out:
        Path(out).write_text(line + "\n")
    else:
        print(line)


def cmd_fit(cfg: RunConfig) -> int:
    if not cfg.centers or not cfg.out:
        raise UsageError("fit needs --centers and --out")
    obj = cfg.resolved_objective()
    C = fio.read_centers_csv(cfg.centers)
    stats = BuildStats()
    t0 = time.perf_counter()
    tree = build_tree(cfg.algorithm, C, cfg.seed, stats)
    wall = (time.perf_counter() - t0) * 1000
    Path(cfg.out).write_bytes(serialize(tree) + b"\n")
    info = dict(command="fit", algorithm=cfg.algorithm, objective=obj.value, k=C.k, d=C.dimension,
                seed=cfg.seed, iterations=stats.iterations, depth=tree.depth(), wall_ms=round(wall, 3))
    if cfg.algorithm == "l2":
        info["recursion_depth"] = stats.recursion_depth
    if cfg.data:
        rep = tree_cost(fio.read_points_csv(cfg.data), C, tree, obj, cfg.center_mode)
        info.update(tree_cost=rep.tree_cost, baseline_cost=rep.baseline_cost, ratio=rep.ratio)
    _emit(info)
    return 0


def _find_meta(cfg: RunConfig) -> dict | None:
    if cfg.meta:
        return fio.read_metadata(cfg.meta)
    if cfg.data:
        guess = Path(cfg.data).with_name(fio.INSTANCE_FILES["meta"])
        if guess.exists():
            return fio.read_metadata(guess)
    return None


def cmd_eval(cfg: RunConfig) -> int:
    if not (cfg.tree and cfg.data and cfg.centers):
        raise UsageError("eval needs --tree, --data and --centers")
    tree = deserialize(Path(cfg.tree).read_bytes())
    X = fio.read_points_csv(cfg.data)
    C = fio.read_centers_csv(cfg.centers)
    if tree.k != C.k or tree.dimension != C.dimension or X.dimension != C.dimension:
        raise UsageError(f"inconsistent inputs: tree (k={tree.k}, d={tree.dimension}), "
                         f"centers (k={C.k}, d={C.dimension}), data (d={X.dimension})")
    meta = _find_meta(cfg)
    obj = cfg.objective or Objective((meta or {}).get("objective", "l1"))
    rep = tree_cost(X, C, tree, obj, cfg.center_mode)
    known = (meta or {}).get("known_opt")
    out = dict(tree_cost=rep.tree_cost, reference_cost=rep.reference_cost, baseline_cost=rep.baseline_cost,
               ratio_vs_baseline=rep.ratio, objective=obj.value, center_mode=cfg.center_mode)
    if known is not None:
        out.update(known_opt=known, ratio_vs_known_opt=safe_ratio(rep.tree_cost, known))
    _emit(out, cfg.out)
    return 0


def generate(kind: str, k: int, d: int | None, n: int | None, spread: float, seed: int,
             force: bool = False, objective: Objective | None = None) -> Instance:
    rng = np.random.default_rng(seed)
    if kind == "mixture":
        if d is None or n is None:
            raise UsageError("mixture needs --d and --n")
        return gen_mixture(k, d, n, spread, rng, objective or Objective.L1)
    if kind == "lb-kmeans":
        return gen_lb_kmeans(k, rng, force=force)
    if kind == "lb-l2medians":
        return gen_lb_l2medians(k, rng)
    raise UsageError(f"unknown instance kind {kind!r}")


def cmd_gen(args) -> int:
    if args.dry_run:
        from .instances import lb_kmeans_params, lb_l2medians_params
        if args.kind == "lb-kmeans":
            d, eps = lb_kmeans_params(args.k, force=args.force)
            meta = dict(kind=args.kind, k=args.k, d=d, eps=eps, known_opt=2 * args.k * eps * eps * d,
                        objective="l2sq", seed=args.seed)
        elif args.kind == "lb-l2medians":
            d, eps = lb_l2medians_params(args.k)
            meta = dict(kind=args.kind, k=args.k, d=d, eps=eps, known_opt=2 * args.k * eps * d ** 0.5,
                        objective="l2", seed=args.seed)
        else:
            raise UsageError("--dry-run only applies to lower-bound kinds")
        _emit(meta)
        return 0
    if not args.out:
        raise UsageError("gen needs --out (a directory)")
    inst = generate(args.kind, args.k, args.d, args.n, args.spread, args.seed, args.force,
                    Objective(args.objective) if args.objective else None)
    meta = fio.write_instance(args.out, inst, seed=args.seed)
    _emit(meta)
    return 0


def fitted_centers(inst: Instance, obj: Objective) -> CenterSet:
    """Best center of every ground-truth cluster (the generating center if a cluster is empty)."""
    C = inst.centers.centers.copy()
    for c in range(inst.centers.k):
        idx = np.flatnonzero(inst.assignment == c)
        if idx.size:
            C[c] = leaf_center(inst.data.points[idx], obj, inst.data.weights[idx])
    try:
        return CenterSet(C)
    except ValueError:
        return inst.centers


BENCH_FIELDS = ["trial", "seed", "algorithm", "k", "d", "tree_cost", "baseline_cost", "ratio",
                "median_ratio", "wall_ms"]


def run_bench(cfg: RunConfig, kind: str | None, k: int | None, d: int | None, n: int | None,
              spread: float, reference: str = "fitted", timing: bool = True) -> list[dict]:
    """One row per trial plus a summary row; trial i uses seeds derived from (seed, i)."""
    if cfg.trials < 1:
        raise UsageError("--trials must be at least 1")
    obj = cfg.resolved_objective()
    fixed = None
    if cfg.centers:
        C = fio.read_centers_csv(cfg.centers)
        X = fio.read_points_csv(cfg.data) if cfg.data else Dataset(C.centers)
        fixed = (X, C)
    elif kind is None or k is None:
        raise UsageError("bench needs --centers or --kind/--k")
    rows = []
    for i in range(cfg.trials):
        if fixed is None:
            inst = generate(kind, k, d, n, spread, spawn_seed(cfg.seed, i, 0), objective=obj)
            X = inst.data
            C = fitted_centers(inst, obj) if reference == "fitted" else inst.centers
        else:
            X, C = fixed
        build_seed = spawn_seed(cfg.seed, i, 1)
        t0 = time.perf_counter()
        tree = build_tree(cfg.algorithm, C, build_seed)
        wall = (time.perf_counter() - t0) * 1000
        rep = tree_cost(X, C, tree, obj, cfg.center_mode)
        rows.append(dict(trial=i, seed=build_seed, algorithm=cfg.algorithm, k=C.k, d=C.dimension,
                         tree_cost=rep.tree_cost, baseline_cost=rep.baseline_cost, ratio=rep.ratio,
                         median_ratio=None, wall_ms=round(wall, 3) if timing else None))
    ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
    rows.append(dict(trial="summary", seed=cfg.seed, algorithm=cfg.algorithm, k=rows[-1]["k"],
                     d=rows[-1]["d"], tree_cost=None, baseline_cost=None,
                     ratio=statistics.fmean(ratios) if ratios else None,
                     median_ratio=statistics.median(ratios) if ratios else None,
                     wall_ms=round(sum(r["wall_ms"] for r in rows), 3) if timing else None))
    return rows


def bench_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({f: ("" if r[f] is None else repr(r[f]) if isinstance(r[f], float) else r[f])
                    for f in BENCH_FIELDS})
    return buf.getvalue()


def cmd_bench(cfg: RunConfig, args) -> int:
    rows = run_bench(cfg, args.kind, args.k, args.d, args.n, args.spread, args.reference,
                     timing=not args.no_timing)
    text = bench_csv(rows)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    s = rows[-1]
    print(f"bench: {cfg.trials} trials, mean ratio {s['ratio']}, median {s['median_ratio']}", file=sys.stderr)
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="expclust", description="Explainable k-medians/k-means threshold trees.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, alg=True):
        sp.add_argument("--objective", choices=[o.value for o in Objective])
        if alg:
            sp.add_argument("--alg", choices=sorted(ALGORITHMS), default="l1-fast")
            sp.add_argument("--allow-mismatch", action="store_true")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        sp.add_argument("--center-mode", choices=["reference", "optimal"], default="reference")

    fit = sub.add_parser("fit", help="build a threshold tree from reference centers")
    common(fit)
    fit.add_argument("--centers", required=True)
    fit.add_argument("--data")

    ev = sub.add_parser("eval", help="cost of a tree on a dataset")
    common(ev, alg=False)
    ev.add_argument("--tree", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--centers", required=True)
    ev.add_argument("--meta", help="instance metadata JSON (default: meta.json next to --data)")

    gen = sub.add_parser("gen", help="generate an instance directory")
    gen.add_argument("--kind", choices=["mixture", "lb-kmeans", "lb-l2medians"], required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--d", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--spread", type=float, default=0.05)
    gen.add_argument("--objective", choices=[o.value for o in Objective])
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.add_argument("--force", action="store_true")
    gen.add_argument("--dry-run", action="store_true", help="print lower-bound metadata without sampling")

    b = sub.add_parser("bench", help="repeated seeded builds with a CSV report")
    common(b)
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--centers")
    b.add_argument("--data")
    b.add_argument("--kind", choices=["mixture", "lb-kmeans", "lb-l2medians"])
    b.add_argument("--k", type=int)
    b.add_argument("--d", type=int)
    b.add_argument("--n", type=int)
    b.add_argument("--spread", type=float, default=0.05)
    b.add_argument("--reference", choices=["fitted", "generating"], default="fitted",
                   help="reference centers for generated instances")
    b.add_argument("--no-timing", action="store_true", help="leave wall_ms empty for byte-stable output")
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    cfg = RunConfig(command=args.command,
                    objective=Objective(args.objective) if getattr(args, "objective", None) else None,
                    algorithm=getattr(args, "alg", "l1-fast"), seed=args.seed,
                    centers=getattr(args, "centers", None), data=getattr(args, "data", None),
                    tree=getattr(args, "tree", None), meta=getattr(args, "meta", None),
                    out=getattr(args, "out", None), trials=getattr(args, "trials", 1),
                    center_mode=getattr(args, "center_mode", "reference"),
                    allow_mismatch=getattr(args, "allow_mismatch", False))
    try:
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "gen":
            return cmd_gen(args)
        return cmd_bench(cfg, args)
    except TreeInvariantError as e:
        print(f"expclust: internal invariant violated: {e}", file=sys.stderr)
        return 3
    except (UsageError, BuildError, InstanceError, TreeFormatError, fio.FormatError, ValueError, OSError) as e:
        print(f"expclust: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
