"""The accelerated k-means engine and its baselines.

One iteration of the tree variants does four things: rebuild a Ball-tree
over the current centroids, refresh the inter bounds ``cb`` (distance from
each centroid to its nearest neighbour centroid), walk the point tree from
the root assigning whole nodes where a geometric test allows it, and move
every centroid to the mean of its sum vector.

Variants
--------
``daskmeans``  inter-bound tests plus kNN over the centroid tree
``no_knn``     inter-bound tests, linear centroid scans
``no_inb``     kNN over the centroid tree, no inter-bound tests
``lloyd``      exhaustive scan, the correctness oracle
``hamerly``    one upper and one lower bound per point

All variants break distance ties towards the lowest centroid id, keep the
previous centroid of an empty cluster (drift 0), and stop when the largest
drift is at most ``tolerance`` or after ``q`` iterations.
"""
import math
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import _kernels as K
from .balltree import FILL_MODES, BallTree, build, structural_float_count
from .errors import ContractViolation, InvalidK
from .spatial import as_points, make_rng

VARIANTS = ("daskmeans", "no_knn", "no_inb", "lloyd", "hamerly")
TREE_VARIANTS = ("daskmeans", "no_knn", "no_inb")
INITS = ("random_sample", "kmeanspp")


@dataclass(frozen=True)
class KmeansConfig:
    k: int
    f: int = 30
    q: int = 20
    tolerance: float = 0.0
    seed: int = 0
    init: str = "random_sample"
    variant: str = "daskmeans"
    fill: str = "half"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidK(f"k must be a positive integer, got {self.k}")
        if int(self.q) != self.q or self.q < 1:
            raise ContractViolation(f"q must be a positive integer, got {self.q}")
        if not self.tolerance >= 0:
            raise ContractViolation("tolerance must be nonnegative")
        if self.init not in INITS:
            raise ContractViolation(f"unknown init {self.init!r}")
        if self.variant not in VARIANTS:
            raise ContractViolation(f"unknown variant {self.variant!r}")
        if self.fill not in FILL_MODES:
            raise ContractViolation(f"unknown fill mode {self.fill!r}")

    def validate_for(self, n):
        if self.k > n:
            raise InvalidK(f"k={self.k} exceeds the number of points n={n}")


@dataclass
class PruneStats:
    """Counters accumulated over a run; see the field comments."""

    distance_computations: int = 0  # point/pivot to centroid, centroid to centroid
    batch_assigned_points: int = 0  # points settled by a whole-node test
    interbound_hits: int = 0  # node- or point-level inter-bound successes
    knn_node_prunes: int = 0  # centroid-tree nodes skipped
    knn_calls: int = 0
    point_gap_hits: int = 0  # points settled by the leaf-level gap test

    @classmethod
    def from_array(cls, arr):
        return cls(
            distance_computations=int(arr[K.DIST]),
            batch_assigned_points=int(arr[K.BATCH]),
            interbound_hits=int(arr[K.INTERBOUND]),
            knn_node_prunes=int(arr[K.KNN_PRUNE]),
            knn_calls=int(arr[K.KNN_CALLS]),
            point_gap_hits=int(arr[K.POINT_GAP]),
        )

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _counter_array():
    return np.zeros(K.N_STATS, dtype=np.int64)


@dataclass(frozen=True)
class KnnResult:
    ids: np.ndarray
    dists: np.ndarray


@dataclass
class ClusterState:
    centroids: np.ndarray
    sum_vectors: np.ndarray
    counts: np.ndarray
    assignments: np.ndarray
    inter_bounds: np.ndarray
    drifts: np.ndarray
    iteration: int = 1
    # a(N) for every point-tree node, -1 when unset or mixed
    node_labels: np.ndarray = None

    @classmethod
    def fresh(cls, centroids, n, node_count=0):
        C = np.array(centroids, dtype=np.float64, copy=True)
        k, d = C.shape
        return cls(
            centroids=C,
            sum_vectors=np.zeros((k, d)),
            counts=np.zeros(k, dtype=np.int64),
            assignments=np.full(n, -1, dtype=np.int64),
            inter_bounds=np.full(k, np.inf),
            drifts=np.zeros(k),
            node_labels=np.full(node_count, -1, dtype=np.int64),
        )


@dataclass
class KmeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    iterations_used: int
    converged: bool
    per_iteration_runtimes_ms: list
    stats: PruneStats
    per_iteration_stats: list
    f_used: int
    build_ms: float
    structural_memory_units: int
    tree: BallTree = None
    sse_history: list = field(default_factory=list)
    assignment_history: list = field(default_factory=list)
    centroid_history: list = field(default_factory=list)


def init_centroids(data, k, seed, init="random_sample"):
    """Pick ``k`` starting centroids, deterministically in ``seed``."""
    X = as_points(data)
    n = X.shape[0]
    if int(k) != k or k < 1:
        raise InvalidK(f"k must be a positive integer, got {k}")
    if k > n:
        raise InvalidK(f"k={k} exceeds the number of points n={n}")
    rng = make_rng(seed)
    if init == "random_sample":
        idx = rng.choice(n, size=k, replace=False)
        return X[idx].copy()
    if init != "kmeanspp":
        raise ContractViolation(f"unknown init {init!r}")
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = rng.choice(n, p=d2 / total)
        else:
            # every point coincides with a centroid: fall back to a uniform pick
            nxt = rng.choice(np.flatnonzero(~taken))
        chosen[j] = nxt
        taken[nxt] = True
        np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1), out=d2)
    return X[chosen].copy()


def _tree_args(tree):
    return (tree.order, tree.pivots, tree.radii, tree.left, tree.right,
            tree.start, tree.end)


def knn_search(kk, q, centroid_tree, ub=math.inf, stats=None):
    """The ``kk`` (1 or 2) centroids nearest to ``q`` among those closer than ``ub``."""
    if kk not in (1, 2):
        raise ContractViolation("kk must be 1 or 2")
    if not ub > 0:
        raise ContractViolation("ub must be positive")
    qv = np.asarray(q, dtype=np.float64)
    C = centroid_tree.data
    if qv.shape != (C.shape[1],):
        raise ContractViolation("query dimension differs from the centroids")
    ids = np.empty(2, dtype=np.int64)
    ds = np.empty(2)
    st_node = np.empty(centroid_tree.node_count + 2, dtype=np.int64)
    st_lb = np.empty(centroid_tree.node_count + 2)
    arr = _counter_array()
    K.knn(kk, qv, C, *_tree_args(centroid_tree), float(ub), ids, ds, st_node, st_lb, arr)
    _accumulate(stats, arr)
    return KnnResult(ids[:kk].copy(), ds[:kk].copy())


def _accumulate(stats, arr):
    if stats is None:
        return
    if isinstance(stats, np.ndarray):
        stats += arr
        return
    for name, val in PruneStats.from_array(arr).as_dict().items():
        setattr(stats, name, getattr(stats, name) + val)


def compute_inter_bounds(state, centroid_tree=None, use_knn=True, stats=None):
    """Refresh ``state.inter_bounds`` in place and return it.

    On the first iteration every 2-NN search starts from an infinite bound;
    later searches start from ``cb[j] + drift[j] + max(drift)``, which still
    covers the new nearest neighbour.
    """
    C = np.ascontiguousarray(state.centroids)
    arr = _counter_array()
    if C.shape[0] == 1:
        state.inter_bounds[0] = np.inf
    elif use_knn:
        if centroid_tree is None:
            raise ContractViolation("kNN inter bounds need a centroid tree")
        K.inter_bounds_knn(C, *_tree_args(centroid_tree), state.inter_bounds,
                           state.drifts, state.iteration == 1, arr)
    else:
        K.inter_bounds_scan(C, state.inter_bounds, arr)
    _accumulate(stats, arr)
    return state.inter_bounds


def assign(node, state, point_tree, centroid_tree, ub=math.inf, stats=None,
           use_inb=True, use_knn=True):
    """Assign every point under ``node`` of ``point_tree`` to its nearest centroid.

    Updates ``state`` (labels, sum vectors, counts) incrementally and leaves
    ``state.assignments`` fully materialized.
    """
    X = point_tree.data
    C = np.ascontiguousarray(state.centroids)
    if state.node_labels is None or len(state.node_labels) != point_tree.node_count:
        state.node_labels = np.full(point_tree.node_count, -1, dtype=np.int64)
    if use_knn and centroid_tree is None:
        raise ContractViolation("kNN assignment needs a centroid tree")
    ct = centroid_tree if centroid_tree is not None else build(C[:1], 2)
    arr = _counter_array()
    K.assign(X, *_tree_args(point_tree), C, *_tree_args(ct),
             state.inter_bounds, state.node_labels, state.assignments,
             state.sum_vectors, state.counts, bool(use_inb and state.iteration > 1),
             bool(use_knn), int(node), float(ub), arr)
    K.materialize(point_tree.order, point_tree.left, point_tree.right,
                  point_tree.start, point_tree.end, state.node_labels,
                  state.assignments, state.assignments)
    _accumulate(stats, arr)


def refine_centroids(state):
    """Move each non-empty centroid to its cluster mean; record drifts."""
    old = state.centroids
    new = old.copy()
    nz = state.counts > 0
    new[nz] = state.sum_vectors[nz] / state.counts[nz, None]
    state.drifts = np.sqrt(np.sum((new - old) ** 2, axis=1))
    state.centroids = new
    return new, state.drifts


def sse(data, centroids, assignments):
    """Sum of squared distances from each point to its assigned centroid."""
    return float(K.sse(as_points(data), np.ascontiguousarray(centroids, dtype=np.float64),
                       np.asarray(assignments, dtype=np.int64)))


def run(data, cfg, initial_centroids=None, callback=None, record_history=False,
        track_sse=False):
    """Cluster ``data`` with ``cfg``.

    ``callback(iteration, runtime_ms, state)`` is invoked after every
    completed iteration on the calling thread.  For the tree variants
    ``state.assignments`` is indexed in leaf order there; the returned
    result uses input order.
    """
    X = np.ascontiguousarray(as_points(data))
    n, d = X.shape
    cfg.validate_for(n)
    if initial_centroids is None:
        C0 = init_centroids(X, cfg.k, cfg.seed, cfg.init)
    else:
        C0 = np.array(initial_centroids, dtype=np.float64)
        if C0.shape != (cfg.k, d):
            raise ContractViolation(f"initial centroids must have shape {(cfg.k, d)}")

    variant = cfg.variant
    tree = None
    build_ms = 0.0
    perm = None
    work = X
    if variant in TREE_VARIANTS:
        t0 = time.perf_counter()
        tree = build(X, cfg.f, cfg.fill)
        # store the points in leaf order so every node covers a contiguous
        # block of rows; labels are mapped back through ``perm`` on output
        perm = tree.order
        work = np.ascontiguousarray(X[perm])
        work.setflags(write=False)
        ident = np.arange(n)
        ident.setflags(write=False)
        tree_w = replace(tree, data=work, order=ident)
        build_ms = (time.perf_counter() - t0) * 1e3
    state = ClusterState.fresh(C0, n, tree.node_count if tree is not None else 0)
    totals = _counter_array()
    runtimes, per_stats = [], []
    sse_hist, assign_hist, cent_hist = [], [], []
    ctree_units = 0
    upper = lower = None
    if variant == "hamerly":
        upper = np.zeros(n)
        lower = np.zeros(n)
    converged = False

    for it in range(1, cfg.q + 1):
        state.iteration = it
        arr = _counter_array()
        t0 = time.perf_counter()
        C = np.ascontiguousarray(state.centroids)
        if variant == "lloyd":
            K.lloyd_assign(X, C, state.assignments, arr)
            state.sum_vectors, state.counts = K.cluster_sums(X, state.assignments, cfg.k)
        elif variant == "hamerly":
            if it > 1:
                K.hamerly_update(state.assignments, upper, lower, state.drifts)
            K.inter_bounds_scan(C, state.inter_bounds, arr)
            K.hamerly_assign(X, C, 0.5 * state.inter_bounds, state.assignments,
                             upper, lower, it == 1, arr)
            state.sum_vectors, state.counts = K.cluster_sums(X, state.assignments, cfg.k)
        else:
            use_knn = variant != "no_knn"
            use_inb = variant != "no_inb"
            ctree = None
            if use_knn:
                ctree = build(C, cfg.f, cfg.fill)
                ctree_units = structural_float_count(ctree)
            if use_inb:
                compute_inter_bounds(state, ctree, use_knn, arr)
            assign(BallTree.root, state, tree_w, ctree, math.inf, arr, use_inb, use_knn)
        refine_centroids(state)
        elapsed = (time.perf_counter() - t0) * 1e3

        totals += arr
        runtimes.append(elapsed)
        per_stats.append(PruneStats.from_array(arr))
        if track_sse:
            sse_hist.append(sse(work, state.centroids, state.assignments))
        if record_history:
            assign_hist.append(_original_order(state.assignments, perm))
            cent_hist.append(state.centroids.copy())
        if callback is not None:
            callback(it, elapsed, state)
        if float(state.drifts.max()) <= cfg.tolerance:
            converged = True
            break

    units = 0
    if tree is not None:
        units = structural_float_count(tree) + ctree_units
    return KmeansResult(
        centroids=state.centroids,
        assignments=_original_order(state.assignments, perm),
        iterations_used=state.iteration,
        converged=converged,
        per_iteration_runtimes_ms=runtimes,
        stats=PruneStats.from_array(totals),
        per_iteration_stats=per_stats,
        f_used=int(cfg.f),
        build_ms=build_ms,
        structural_memory_units=int(units),
        tree=tree,
        sse_history=sse_hist,
        assignment_history=assign_hist,
        centroid_history=cent_hist,
    )


def _original_order(labels, perm):
    if perm is None:
        return labels.copy()
    out = np.empty_like(labels)
    out[perm] = labels
    return out


def with_variant(cfg, variant):
    return replace(cfg, variant=variant)
