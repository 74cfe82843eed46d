"""Runtime prediction from meta-features.

Two regressors work together.  The first is a plain linear model that
predicts how many iterations a task will take; its rounded and clamped
output becomes the dummy array ``u`` (ones for the iterations expected to
run).  The second predicts the runtime of one iteration from the
meta-features plus the iteration index, using every monomial of degree at
most ``beta`` in the standardized features.  The predicted total is
``sum_j u_j * yhat_j``.
"""
import json
import math
from dataclasses import asdict, dataclass, replace
from itertools import combinations_with_replacement

import numpy as np

from ..errors import ModelFormatError, ModelNotTrained, SingularDesign

MODEL_FORMAT = "daskmeans-runtime-model"
MODEL_VERSION = 1
RIDGE = 1e-8

BASE_FEATURES = ("n", "k", "d", "f", "iteration_index", "tree_depth",
                 "leaf_count", "avg_points_per_leaf")
ITERATION_FEATURES = ("n", "k", "d", "f", "tree_depth", "leaf_count",
                      "avg_points_per_leaf")


@dataclass(frozen=True)
class MetaFeatures:
    n: int
    k: int
    d: int
    f: int
    tree_depth: int
    leaf_count: int
    internal_count: int
    avg_points_per_leaf: float
    iteration_index: int = 0

    def row(self, names=BASE_FEATURES):
        return [float(getattr(self, a)) for a in names]

    def at_iteration(self, j):
        return replace(self, iteration_index=int(j))

    def as_dict(self):
        return asdict(self)


def extract_meta_features(data, cfg, tree):
    """Meta-features of a task, read off the built point tree."""
    n = tree.n
    d = tree.data.shape[1]
    return MetaFeatures(
        n=n, k=int(cfg.k), d=d, f=int(cfg.f),
        tree_depth=tree.depth, leaf_count=tree.leaves,
        internal_count=tree.internals,
        avg_points_per_leaf=n / tree.leaves,
    )


def monomial_exponents(m, beta):
    """Index tuples of all monomials of degree <= beta, graded lexicographic."""
    out = [()]
    for deg in range(1, beta + 1):
        out.extend(combinations_with_replacement(range(m), deg))
    return out


def expansion_dimension(m, beta):
    return math.comb(m + beta, beta)


def expand_matrix(Z, beta):
    """Evaluate every monomial of :func:`monomial_exponents` on the rows of ``Z``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    cols = []
    cache = {(): np.ones(Z.shape[0])}
    for mono in monomial_exponents(Z.shape[1], beta):
        if mono not in cache:
            cache[mono] = cache[mono[:-1]] * Z[:, mono[-1]]
        cols.append(cache[mono])
    return np.column_stack(cols)


@dataclass(frozen=True)
class Standardization:
    means: tuple
    scales: tuple

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=np.float64)
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        return cls(tuple(mu.tolist()), tuple(sd.tolist()))

    def apply(self, X):
        return (np.asarray(X, dtype=np.float64) - np.array(self.means)) / np.array(self.scales)


def expand_features(mf, beta, standardization=None, names=BASE_FEATURES):
    """Feature row of a MetaFeatures (or a plain vector) for degree ``beta``."""
    row = mf.row(names) if isinstance(mf, MetaFeatures) else list(mf)
    z = np.asarray(row, dtype=np.float64)
    if standardization is not None:
        z = standardization.apply(z)
    return expand_matrix(z[None, :], beta)[0]


def solve_normal_equations(A, y, ridge=RIDGE):
    """``(A^T A + ridge I) b = A^T y``."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    G = A.T @ A
    G[np.diag_indices_from(G)] += ridge
    try:
        b = np.linalg.solve(G, A.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign(str(exc)) from None
    if not np.all(np.isfinite(b)):
        raise SingularDesign("normal equations produced non-finite coefficients")
    return b


@dataclass(frozen=True)
class RuntimeModel:
    beta: int
    q: int
    standardization: Standardization
    iteration_coeffs: tuple
    periteration_coeffs: tuple
    feature_order: tuple = BASE_FEATURES
    iteration_feature_order: tuple = ITERATION_FEATURES
    # fastest iteration seen in training; forecasts never go below it
    floor_ms: float = 0.0

    def to_json(self):
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "beta": self.beta,
            "q": self.q,
            "feature_order": list(self.feature_order),
            "iteration_feature_order": list(self.iteration_feature_order),
            "standardization": {"means": list(self.standardization.means),
                                "scales": list(self.standardization.scales)},
            "iteration_coeffs": list(self.iteration_coeffs),
            "periteration_coeffs": list(self.periteration_coeffs),
            "floor_ms": self.floor_ms,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not JSON: {exc}") from None
        if doc.get("format") != MODEL_FORMAT:
            raise ModelFormatError(f"unknown model format {doc.get('format')!r}")
        if doc.get("version") != MODEL_VERSION:
            raise ModelFormatError(
                f"model version {doc.get('version')!r} is not supported "
                f"(expected {MODEL_VERSION})")
        try:
            model = cls(
                beta=int(doc["beta"]),
                q=int(doc["q"]),
                standardization=Standardization(
                    tuple(doc["standardization"]["means"]),
                    tuple(doc["standardization"]["scales"])),
                iteration_coeffs=tuple(doc["iteration_coeffs"]),
                periteration_coeffs=tuple(doc["periteration_coeffs"]),
                feature_order=tuple(doc["feature_order"]),
                iteration_feature_order=tuple(doc["iteration_feature_order"]),
                floor_ms=float(doc.get("floor_ms", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed model document: {exc}") from None
        m = len(model.feature_order)
        if len(model.periteration_coeffs) != expansion_dimension(m, model.beta):
            raise ModelFormatError("coefficient count does not match the expansion")
        if len(model.iteration_coeffs) != len(model.iteration_feature_order) + 1:
            raise ModelFormatError("iteration regressor has the wrong length")
        return model


def _require(model):
    if model is None or not isinstance(model, RuntimeModel):
        raise ModelNotTrained("no trained runtime model")
    return model


def _sample_fields(s):
    if isinstance(s, dict):
        return s["meta_features"], s["per_iteration_runtimes_ms"], s["iterations_used"]
    return s.meta_features, s.per_iteration_runtimes_ms, s.iterations_used


def fit_runtime_model(samples, beta=4, q=20):
    """Fit both regressors on recorded tasks.

    Each sample provides ``meta_features`` (a MetaFeatures), the measured
    ``per_iteration_runtimes_ms`` and ``iterations_used``; only iterations
    that actually ran contribute rows to the per-iteration fit.
    """
    if beta < 1:
        raise ValueError("beta must be >= 1")
    it_rows, it_y, rows, y = [], [], [], []
    for s in samples:
        mf, times, used = _sample_fields(s)
        it_rows.append([1.0] + mf.row(ITERATION_FEATURES))
        it_y.append(float(used))
        for j, t in enumerate(times[:used], start=1):
            if not t > 0:
                raise ValueError("runtimes must be positive")
            rows.append(mf.at_iteration(j).row(BASE_FEATURES))
            y.append(float(t))
    if not rows:
        raise SingularDesign("no training rows")
    A_it = np.asarray(it_rows)
    it_coef, *_ = np.linalg.lstsq(A_it, np.asarray(it_y), rcond=None)
    std = Standardization.fit(rows)
    design = expand_matrix(std.apply(rows), beta)
    coef = solve_normal_equations(design, y)
    return RuntimeModel(
        beta=int(beta), q=int(q), standardization=std,
        iteration_coeffs=tuple(float(c) for c in it_coef),
        periteration_coeffs=tuple(float(c) for c in coef),
        floor_ms=float(min(y)),
    )


def raw_iteration_prediction(mf, model):
    model = _require(model)
    x = np.array([1.0] + mf.row(model.iteration_feature_order))
    return float(x @ np.array(model.iteration_coeffs))


def dummy_array(count, q):
    """``count`` ones followed by zeros, length ``q``."""
    u = np.zeros(q, dtype=np.int64)
    u[:count] = 1
    return u


def iteration_count(mf, model):
    """Predicted iteration count, rounded half up and clamped to ``[1, q]``."""
    model = _require(model)
    raw = raw_iteration_prediction(mf, model)
    if not math.isfinite(raw):
        return model.q
    return int(min(model.q, max(1, math.floor(raw + 0.5))))


def predict_iteration_count(mf, model):
    """The dummy array ``u`` for ``mf``."""
    model = _require(model)
    return dummy_array(iteration_count(mf, model), model.q)


def predict_periteration(mf, model, iterations=None):
    """Per-iteration runtime forecasts for iterations ``1..q``.

    A high-degree fit can dip towards zero between training points; the
    forecast is floored at the fastest iteration seen during training.
    """
    model = _require(model)
    js = range(1, model.q + 1) if iterations is None else iterations
    rows = [mf.at_iteration(j).row(model.feature_order) for j in js]
    design = expand_matrix(model.standardization.apply(rows), model.beta)
    return np.maximum(design @ np.array(model.periteration_coeffs), max(model.floor_ms, 0.0))


@dataclass(frozen=True)
class RuntimePrediction:
    per_iteration: list
    u: list
    total: float

    @property
    def iterations(self):
        return int(sum(self.u))

    def masked(self):
        """Forecasts for the iterations expected to run."""
        return self.per_iteration[: self.iterations]


def predict_runtime(mf, model):
    """``t = sum_j u_j yhat_j``."""
    model = _require(model)
    yhat = predict_periteration(mf, model)
    u = predict_iteration_count(mf, model)
    return RuntimePrediction(yhat.tolist(), u.tolist(), float(np.dot(u, yhat)))
