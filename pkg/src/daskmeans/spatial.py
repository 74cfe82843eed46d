"""Point containers, Euclidean distance, text ingestion and synthetic data.

Points are stored as a single ``(n, d)`` float64 array.  A "spatial vector"
is simply one row of that array (or any 1-D float array of length ``d``).
"""
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DimensionMismatch, EmptyDataset, ParseError

FORMATS = ("csv", "xyz")


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of ``n`` points in ``d`` dimensions."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 0)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise EmptyDataset("a dataset needs at least one point")
        if pts.shape[1] == 0:
            raise ContractViolation("points need at least one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ContractViolation("coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def __len__(self):
        return self.n


def as_points(data):
    """Return the ``(n, d)`` float64 array behind a Dataset or array-like."""
    if isinstance(data, Dataset):
        return data.points
    return Dataset(data).points


def euclidean_distance(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractViolation(f"cannot compare vectors of shape {a.shape} and {b.shape}")
    diff = a - b
    return math.sqrt(float(np.dot(diff, diff)))


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def load_dataset(source, format="csv"):
    """Parse CSV or XYZ text into a :class:`Dataset`.

    ``source`` may be bytes, str, or a binary/text file object.  Blank lines
    are ignored; every other line must hold the same number of numeric
    columns as the first (``xyz`` always requires exactly three).  Malformed
    rows raise instead of being skipped.
    """
    if format not in FORMATS:
        raise ContractViolation(f"unknown format {format!r}")
    text = _read_text(source)
    rows = []
    width = 3 if format == "xyz" else None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",") if format == "csv" else line.split()
        try:
            row = [float(x) for x in fields]
        except ValueError:
            raise ParseError(lineno, line) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError(lineno, line)
        if width is None:
            width = len(row)
        if len(row) != width:
            raise DimensionMismatch(lineno, width, len(row))
        rows.append(row)
    if not rows:
        raise EmptyDataset("input holds no points")
    return Dataset(np.array(rows, dtype=np.float64))


def load_path(path, format=None):
    """Load a dataset from disk, guessing the format from the suffix."""
    path = str(path)
    if format is None:
        format = "xyz" if path.lower().endswith(".xyz") else "csv"
    with open(path, "rb") as fh:
        return load_dataset(fh, format)


def format_rows(points, format="csv"):
    """Serialize points with round-trip (17 significant digit) precision."""
    sep = "," if format == "csv" else " "
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = io.StringIO()
    for row in pts:
        out.write(sep.join(repr(float(v)) for v in row))
        out.write("\n")
    return out.getvalue()


def dump_dataset(data, format="csv"):
    return format_rows(as_points(data), format)


def make_rng(seed):
    """The package-wide PRNG: numpy's PCG64 bit generator, explicitly seeded."""
    return np.random.Generator(np.random.PCG64(seed))


def generate_synthetic(n, d, k_true, seed, spread, return_centers=False):
    """Gaussian blobs around centers drawn uniformly in the unit hypercube.

    Blob sizes differ by at most one (the first ``n % k_true`` blobs get the
    extra point).  The output order is shuffled.  Deterministic in ``seed``.
    """
    if n < 1 or d < 1 or k_true < 1:
        raise ContractViolation("n, d and k_true must be positive")
    if n < k_true:
        raise ContractViolation("need n >= k_true")
    if spread < 0:
        raise ContractViolation("spread must be nonnegative")
    rng = make_rng(seed)
    centers = rng.uniform(0.0, 1.0, size=(k_true, d))
    sizes = np.full(k_true, n // k_true)
    sizes[: n % k_true] += 1
    labels = np.repeat(np.arange(k_true), sizes)
    noise = rng.standard_normal((n, d))
    points = centers[labels] + spread * noise
    perm = rng.permutation(n)
    ds = Dataset(points[perm])
    if return_centers:
        return ds, centers, labels[perm]
    return ds
