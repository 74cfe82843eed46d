"""Command-line interface.

Exit codes: 0 success, 1 unreadable or malformed input, 2 infeasible
configuration (bad k or f, memory budget too small, model version
mismatch), 3 internal invariant breach.
"""
import argparse
import json
import math
import sys
import time

import numpy as np

from . import bench
from .accelerator import INITS, VARIANTS, KmeansConfig, run
from .balltree import build, leaf_count_for
from .errors import (
    BudgetInfeasible,
    ContractViolation,
    DimensionMismatch,
    EmptyDataset,
    InvalidCapacity,
    InvalidK,
    ModelFormatError,
    ParseError,
)
from .estimator.gp import DEFAULT_SIGMA, GpAdjuster
from .estimator.memory import (
    estimate_total_memory,
    simplified_total_memory,
    tune_leaf_capacity,
)
from .estimator.runtime import (
    MetaFeatures,
    RuntimeModel,
    extract_meta_features,
    fit_runtime_model,
    predict_runtime,
)
from .spatial import format_rows, load_path, make_rng

STATS_SCHEMA_VERSION = 1
EXIT_PARSE, EXIT_CONFIG, EXIT_INVARIANT = 1, 2, 3


class InvariantBreach(RuntimeError):
    pass


def _out(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load(args):
    fmt = getattr(args, "format", None)
    return load_path(args.input, fmt)


def _leaf_capacity(args, n, k):
    if args.memory_budget is not None:
        return tune_leaf_capacity(n, k, args.memory_budget)
    return args.f if args.f is not None else 30


def _config(args, n):
    k = args.k
    f = _leaf_capacity(args, n, k)
    return KmeansConfig(k=k, f=f, q=args.q, tolerance=args.tolerance, seed=args.seed,
                        init=args.init, variant=args.variant)


def _check_result(res, n, k):
    a = res.assignments
    if a.shape != (n,) or a.min() < 0 or a.max() >= k:
        raise InvariantBreach("assignments out of range")
    if not np.all(np.isfinite(res.centroids)):
        raise InvariantBreach("non-finite centroid")
    if res.iterations_used != len(res.per_iteration_runtimes_ms):
        raise InvariantBreach("runtime record length differs from iteration count")


def stats_document(res, cfg):
    doc = {
        "schema_version": STATS_SCHEMA_VERSION,
        "variant": cfg.variant,
        "k": cfg.k,
        "f_used": res.f_used,
        "iterations_used": res.iterations_used,
        "converged": res.converged,
        "structural_memory_units": res.structural_memory_units,
        "build_ms": res.build_ms,
        "per_iteration_runtimes_ms": res.per_iteration_runtimes_ms,
    }
    doc.update(res.stats.as_dict())
    return doc


def _run_cluster(args, data):
    cfg = _config(args, data.n)
    init = None
    if getattr(args, "initial_centroids", None):
        init = load_path(args.initial_centroids).points
    res = run(data, cfg, initial_centroids=init)
    _check_result(res, data.n, cfg.k)
    return cfg, res


def cmd_cluster(args):
    data = _load(args)
    cfg, res = _run_cluster(args, data)
    _out(args.centroids_out, format_rows(res.centroids, "csv"))
    if args.assignments_out:
        _out(args.assignments_out, "".join(f"{int(a)}\n" for a in res.assignments))
    if args.stats_out:
        _out(args.stats_out, json.dumps(stats_document(res, cfg), indent=1) + "\n")
    if args.dump_tree:
        _out(args.dump_tree, build(data, cfg.f, cfg.fill).dump())
    return 0


def cmd_simplify(args):
    data = _load(args)
    fmt = args.format or ("xyz" if str(args.input).lower().endswith(".xyz") else "csv")
    if args.random:
        if args.k > data.n:
            raise InvalidK(f"k={args.k} exceeds the number of points n={data.n}")
        idx = make_rng(args.seed).choice(data.n, size=args.k, replace=False)
        pts = data.points[idx]
    else:
        _, res = _run_cluster(args, data)
        pts = res.centroids
    _out(args.output, format_rows(pts, fmt))
    return 0


def _print_estimate(est, n, k):
    print(f"n={n} k={k} f={est.f}")
    for key, val in est.as_dict().items():
        if key != "f":
            print(f"{key} {val}")
    print(f"simplified_total_units {simplified_total_memory(n, k, est.f):.2f}")


def cmd_estimate(args):
    n, k = _nk(args)
    if args.budget is not None:
        f = tune_leaf_capacity(n, k, args.budget)
        print(f"tuned_f {f}")
    else:
        f = args.f
    _print_estimate(estimate_total_memory(n, k, f), n, k)
    return 0


def cmd_tune(args):
    n, k = _nk(args)
    print(tune_leaf_capacity(n, k, args.budget))
    return 0


def _nk(args):
    n = args.n
    if n is None:
        if not getattr(args, "input", None):
            raise ContractViolation("give --n or --input")
        n = _load(args).n
    return int(n), int(args.k)


def cmd_train(args):
    samples = bench.load_samples(args.samples)
    train = [s for s in samples if s.split == "train" and s.recorded] or \
        [s for s in samples if s.recorded]
    model = fit_runtime_model(train, beta=args.beta, q=args.q)
    _out(args.model_out, model.to_json() + "\n")
    print(f"trained on {len(train)} tasks, beta={args.beta}, q={args.q}", file=sys.stderr)
    return 0


def _read_model(path):
    with open(path) as fh:
        return RuntimeModel.from_json(fh.read())


def _analytic_features(n, k, d, f):
    leaves = leaf_count_for(n, f)
    depth = (math.ceil(math.log2(leaves)) if leaves > 1 else 0) + 1
    return MetaFeatures(n=n, k=k, d=d, f=f, tree_depth=depth, leaf_count=leaves,
                        internal_count=leaves - 1, avg_points_per_leaf=n / leaves)


def cmd_predict(args):
    model = _read_model(args.model)
    if args.input:
        data = _load(args)
        cfg = _config(args, data.n)
        tree = build(data, cfg.f, cfg.fill)
        mf = extract_meta_features(data, cfg, tree)
    else:
        if args.n is None or args.d is None:
            raise ContractViolation("give --input, or --n and --d")
        data = None
        cfg = KmeansConfig(k=args.k, f=args.f or 30, q=args.q, seed=args.seed)
        mf = _analytic_features(args.n, args.k, args.d, cfg.f)
    pred = predict_runtime(mf, model)
    yhat = pred.masked()
    for j, v in enumerate(yhat, start=1):
        print(f"iteration {j} predicted_ms {v:.6f}")
    print(f"predicted_iterations {pred.iterations}")
    print(f"predicted_total_ms {pred.total:.6f}")
    if not args.live:
        return 0
    if data is None:
        raise ContractViolation("--live needs --input")
    adj = GpAdjuster(sigma=args.sigma)
    seen = []

    def on_iteration(it, ms, _state):
        seen.append(ms)
        if it <= len(yhat):
            adj.observe(it, yhat[it - 1], ms)
        future = list(range(it + 1, len(yhat) + 1))
        fut = np.asarray(yhat[it:], dtype=np.float64)
        adjusted = float(adj.adjust(future, fut).sum()) if future else 0.0
        print(f"live iteration {it} observed_ms {ms:.6f} "
              f"remaining_adjusted_ms {adjusted:.6f} remaining_unadjusted_ms {float(fut.sum()):.6f} "
              f"total_adjusted_ms {sum(seen) + adjusted:.6f}", flush=True)

    res = run(data, cfg, callback=on_iteration)
    _check_result(res, data.n, cfg.k)
    print(f"actual_total_ms {sum(res.per_iteration_runtimes_ms):.6f}")
    return 0


def cmd_bench(args):
    variants = [v for v in (args.variants or "").split(",") if v]
    if not variants:
        raise argparse.ArgumentTypeError("--variants must name at least one variant")
    bad = [v for v in variants if v not in VARIANTS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown variants: {','.join(bad)}")
    task = bench.TaskSample(n=args.n, d=args.d, k_true=args.k_true or args.k, seed=args.seed,
                            spread=args.spread, k=args.k, f=args.f, q=args.q)
    report = bench.EvalReport(variants=bench.compare_variants(task, variants))
    if args.tasks:
        if args.samples_in:
            samples = bench.load_samples(args.samples_in)
        else:
            specs = bench.generate_sample_set(args.tasks, tuple(args.n_range), tuple(args.k_range),
                                              seed=args.seed, q=args.q)
            samples = bench.run_all(specs, workers=args.workers)
        if args.samples_out:
            bench.save_samples(args.samples_out, samples)
        train = bench.by_split(samples, "train")
        models, times = {}, {}
        for beta in sorted({args.beta, 1}, reverse=True):
            t0 = time.perf_counter()
            models[f"beta{beta}"] = fit_runtime_model(train, beta=beta, q=args.q)
            times[f"beta{beta}"] = (time.perf_counter() - t0) * 1e3
        ev = bench.evaluate(models, bench.by_split(samples, "test"), times, sigma=args.sigma,
                            gp_model=models[f"beta{args.beta}"])
        report.models, report.gp = ev.models, ev.gp
    _out(args.out_json, report.to_json() + "\n")
    if args.out_csv:
        _out(args.out_csv, report.to_csv())
    return 0


def _cluster_options(p, need_k=True):
    p.add_argument("--input", required=True, help="CSV or XYZ point file")
    p.add_argument("--format", choices=("csv", "xyz"), default=None,
                   help="input format (default: from the file suffix)")
    p.add_argument("--k", type=int, required=need_k)
    cap = p.add_mutually_exclusive_group()
    cap.add_argument("--f", type=int, default=None, help="leaf capacity (default 30)")
    cap.add_argument("--memory-budget", type=float, default=None,
                     help="memory budget in 8-byte units; picks f")
    p.add_argument("--q", type=int, default=20, help="maximum iterations")
    p.add_argument("--tolerance", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=VARIANTS, default="daskmeans")
    p.add_argument("--init", choices=INITS, default="random_sample")
    p.add_argument("--initial-centroids", default=None,
                   help="CSV of k starting centroids (overrides --init)")


def make_parser():
    ap = argparse.ArgumentParser(prog="daskmeans", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="run k-means on a point file")
    _cluster_options(p)
    p.add_argument("--centroids-out", default="-")
    p.add_argument("--assignments-out", default=None)
    p.add_argument("--stats-out", default=None)
    p.add_argument("--dump-tree", default=None, help="write the point tree, one node per line")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("simplify", help="replace a point cloud by k representatives")
    _cluster_options(p)
    p.add_argument("--output", default="-")
    p.add_argument("--random", action="store_true", help="uniform random sample instead of centroids")
    p.set_defaults(func=cmd_simplify)

    for name, func, doc in (("estimate", cmd_estimate, "memory estimate for a run"),
                            ("tune", cmd_tune, "leaf capacity for a memory budget")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--input", default=None, help="read n from a point file")
        p.add_argument("--format", choices=("csv", "xyz"), default=None)
        p.add_argument("--k", type=int, required=True)
        if name == "estimate":
            p.add_argument("--f", type=int, default=30)
            p.add_argument("--budget", type=float, default=None)
        else:
            p.add_argument("--budget", type=float, required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("train", help="fit the runtime model on recorded tasks")
    p.add_argument("--samples", required=True, help="newline-delimited JSON task records")
    p.add_argument("--model-out", required=True)
    p.add_argument("--beta", type=int, default=4)
    p.add_argument("--q", type=int, default=20)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="forecast the runtime of a task")
    p.add_argument("--model", required=True)
    p.add_argument("--input", default=None)
    p.add_argument("--format", choices=("csv", "xyz"), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--k", type=int, required=True)
    cap = p.add_mutually_exclusive_group()
    cap.add_argument("--f", type=int, default=None)
    cap.add_argument("--memory-budget", type=float, default=None)
    p.add_argument("--q", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=VARIANTS, default="daskmeans")
    p.add_argument("--init", choices=INITS, default="random_sample")
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--live", action="store_true",
                   help="run the task and print GP-adjusted remaining time after each iteration")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="compare variants and evaluate the estimator")
    p.add_argument("--variants", required=True, help="comma-separated, e.g. lloyd,daskmeans")
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--k-true", type=int, default=None)
    p.add_argument("--spread", type=float, default=0.01)
    p.add_argument("--f", type=int, default=30)
    p.add_argument("--q", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tasks", type=int, default=0, help="also train and score the estimator on this many tasks")
    p.add_argument("--n-range", type=int, nargs=2, default=[10**4, 10**6])
    p.add_argument("--k-range", type=int, nargs=2, default=[10**2, 10**3])
    p.add_argument("--beta", type=int, default=4)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--samples-in", default=None)
    p.add_argument("--samples-out", default=None)
    p.add_argument("--out-json", default="-")
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, DimensionMismatch, EmptyDataset, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetInfeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"minimum_feasible_budget {exc.minimum_budget}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidK, InvalidCapacity, ModelFormatError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except InvariantBreach as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
