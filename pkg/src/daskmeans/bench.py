"""Task sampling, runtime recording and estimator evaluation.

A task is a synthetic blob dataset plus a clustering configuration.  Tasks
are drawn from a seeded generator, executed once each, and persisted as
newline-delimited JSON so the estimator can be retrained without
re-clustering.  Evaluation compares trained runtime models on the test
split and replays every test task iteration by iteration to score the
GP-adjusted forecast against the unadjusted one.
"""
import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .accelerator import KmeansConfig, PruneStats, run
from .errors import NoTestData
from .estimator.gp import DEFAULT_SIGMA, GpAdjuster
from .estimator.metrics import all_metrics
from .estimator.runtime import MetaFeatures, extract_meta_features, predict_runtime
from .spatial import generate_synthetic, make_rng

SPLITS = ("train", "validation", "test")
DESK_DEFAULTS = dict(count=200, n_range=(10**4, 10**6), k_range=(10**2, 10**3), d_choices=(2, 3))


@dataclass
class TaskSample:
    n: int
    d: int
    k_true: int
    seed: int
    spread: float
    k: int
    f: int
    q: int = 20
    variant: str = "daskmeans"
    split: str = "train"
    # filled by run_and_record
    per_iteration_runtimes_ms: list = None
    iterations_used: int = None
    meta_features: MetaFeatures = None
    stats: dict = None
    structural_memory_units: int = None
    build_ms: float = None

    @property
    def recorded(self):
        return self.iterations_used is not None

    @property
    def total_runtime_ms(self):
        return float(sum(self.per_iteration_runtimes_ms))

    def config(self):
        return KmeansConfig(k=self.k, f=self.f, q=self.q, seed=self.seed, variant=self.variant)

    def dataset(self):
        return generate_synthetic(self.n, self.d, self.k_true, self.seed, self.spread)

    def to_dict(self):
        doc = asdict(self)
        if self.meta_features is not None:
            doc["meta_features"] = self.meta_features.as_dict()
        return doc

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if doc.get("meta_features") is not None:
            doc["meta_features"] = MetaFeatures(**doc["meta_features"])
        return cls(**doc)


def _log_uniform_int(rng, lo, hi):
    return int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))


def split_sizes(count):
    """80/10/10 split sizes."""
    train = int(round(0.8 * count))
    val = int(round(0.1 * count))
    return train, val, count - train - val


def generate_sample_set(count, n_range=(10**4, 10**6), k_range=(10**2, 10**3), seed=0,
                        d_choices=(2, 3), f_range=(10, 200), q=20,
                        spread_range=(0.01, 0.01), blobs_per_cluster=(1.0, 1.0)):
    """``count`` task specifications, deterministic in ``seed``.

    ``n``, ``k`` and ``f`` are log-uniform in their ranges; ``k`` is capped
    at ``n``.  By default every dataset comes from the same blob family (one
    blob per requested cluster, spread 0.01), so the meta-features pin down
    a task up to its seed; widen ``spread_range`` or ``blobs_per_cluster``
    for harder, more heterogeneous sample sets.  The first 80% are tagged
    train, the next 10% validation and the rest test.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if n_range[0] > n_range[1] or k_range[0] > k_range[1] or n_range[0] < 1 or k_range[0] < 1:
        raise ValueError("ranges must be nonempty and positive")
    rng = make_rng(seed)
    train, val, _ = split_sizes(count)
    out = []
    for t in range(count):
        n = _log_uniform_int(rng, *n_range)
        k = min(n, _log_uniform_int(rng, *k_range))
        d = int(rng.choice(d_choices))
        ratio = math.exp(rng.uniform(math.log(blobs_per_cluster[0]), math.log(blobs_per_cluster[1])))
        k_true = max(1, min(n, int(round(k * ratio))))
        spread = float(math.exp(rng.uniform(math.log(spread_range[0]), math.log(spread_range[1]))))
        f = _log_uniform_int(rng, *f_range)
        split = "train" if t < train else ("validation" if t < train + val else "test")
        out.append(TaskSample(n=n, d=d, k_true=k_true, seed=int(rng.integers(2**31)),
                              spread=spread, k=k, f=f, q=q, split=split))
    return out


def run_and_record(sample):
    """Execute one task and return a copy with the recorded fields filled."""
    data = sample.dataset()
    res = run(data, sample.config())
    mf = None
    if res.tree is not None:
        mf = extract_meta_features(data, sample.config(), res.tree)
    return replace(
        sample,
        per_iteration_runtimes_ms=list(res.per_iteration_runtimes_ms),
        iterations_used=res.iterations_used,
        meta_features=mf,
        stats=res.stats.as_dict(),
        structural_memory_units=res.structural_memory_units,
        build_ms=res.build_ms,
    )


def run_all(samples, workers=1, progress=None):
    """Record every sample.  Serial by default so timings do not interfere."""
    if workers <= 1:
        out = []
        for s in samples:
            out.append(run_and_record(s))
            if progress:
                progress(len(out), len(samples))
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_and_record, samples))


def save_samples(path, samples):
    with open(path, "w") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_dict()) + "\n")


def load_samples(path):
    with open(path) as fh:
        return [TaskSample.from_dict(json.loads(line)) for line in fh if line.strip()]


def by_split(samples, split):
    return [s for s in samples if s.split == split]


@dataclass
class EvalReport:
    models: dict = field(default_factory=dict)
    gp: dict = field(default_factory=dict)
    variants: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "name", "metric", "value"])
        for name, entry in sorted(self.models.items()):
            for metric, val in sorted(entry.items()):
                w.writerow(["model", name, metric, repr(val)])
        for metric, val in sorted(self.gp.items()):
            w.writerow(["gp", "adjuster", metric, repr(val)])
        for row in self.variants:
            for metric, val in sorted(row.items()):
                if metric in ("task", "variant") or isinstance(val, list):
                    continue
                w.writerow(["variant", f"{row['task']}:{row['variant']}", metric, repr(val)])
        return buf.getvalue()


def gp_replay(model, samples, sigma=DEFAULT_SIGMA):
    """Mean absolute total-runtime error with and without GP adjustment.

    Every test task is revealed one iteration at a time; after each
    iteration except the last, both forecasts of the total are scored
    against the measured total.
    """
    gp_err, raw_err = [], []
    for s in samples:
        pred = predict_runtime(s.meta_features, model)
        yhat = pred.masked()
        y = s.per_iteration_runtimes_ms[: s.iterations_used]
        actual = float(sum(y))
        adj = GpAdjuster(sigma=sigma)
        for i in range(1, len(y)):
            if i <= len(yhat):
                adj.observe(i, yhat[i - 1], y[i - 1])
            seen = float(sum(y[:i]))
            future = list(range(i + 1, len(yhat) + 1))
            fut = np.asarray(yhat[i:], dtype=np.float64)
            adjusted = seen + (float(adj.adjust(future, fut).sum()) if future else 0.0)
            unadjusted = seen + float(fut.sum())
            gp_err.append(abs(adjusted - actual))
            raw_err.append(abs(unadjusted - actual))
    if not gp_err:
        return {"gp_mean_abs_error": 0.0, "nogp_mean_abs_error": 0.0, "points": 0}
    return {"gp_mean_abs_error": float(np.mean(gp_err)),
            "nogp_mean_abs_error": float(np.mean(raw_err)),
            "points": len(gp_err)}


def evaluate(models, test_samples, train_times=None, sigma=DEFAULT_SIGMA, gp_model=None):
    """Score ``models`` (a ``{name: RuntimeModel}`` dict) on recorded test tasks."""
    test = [s for s in test_samples if s.recorded]
    if not test:
        raise NoTestData("no recorded test samples")
    report = EvalReport()
    y = np.array([s.total_runtime_ms for s in test])
    for name, model in models.items():
        t0 = time.perf_counter()
        yhat = np.array([predict_runtime(s.meta_features, model).total for s in test])
        pred_ms = (time.perf_counter() - t0) * 1e3
        entry = all_metrics(y, yhat)
        entry["prediction_ms"] = pred_ms
        if train_times and name in train_times:
            entry["training_ms"] = train_times[name]
        report.models[name] = entry
    if gp_model is None and models:
        gp_model = next(iter(models.values()))
    if gp_model is not None:
        report.gp = gp_replay(gp_model, test, sigma)
    return report


def compare_variants(sample, variants, track_sse=True):
    """Run one task under several variants; one row per variant."""
    data = sample.dataset()
    rows = []
    for v in variants:
        cfg = replace(sample.config(), variant=v)
        t0 = time.perf_counter()
        res = run(data, cfg, track_sse=track_sse)
        total = (time.perf_counter() - t0) * 1e3
        row = {"task": f"n{sample.n}_k{sample.k}_s{sample.seed}", "variant": v,
               "total_ms": total, "iterations_used": res.iterations_used,
               "structural_memory_units": res.structural_memory_units}
        row.update(res.stats.as_dict())
        row["sse"] = list(res.sse_history)
        rows.append(row)
    return rows


__all__ = [
    "TaskSample", "EvalReport", "generate_sample_set", "run_and_record", "run_all",
    "evaluate", "gp_replay", "compare_variants", "save_samples", "load_samples",
    "split_sizes", "by_split", "PruneStats", "DESK_DEFAULTS", "SPLITS",
]
