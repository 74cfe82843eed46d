import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from daskmeans.errors import ContractViolation, DimensionMismatch, EmptyDataset, ParseError
from daskmeans.spatial import (
    Dataset,
    dump_dataset,
    euclidean_distance,
    generate_synthetic,
    load_dataset,
    load_path,
)


@pytest.mark.parametrize("a,b,want", [
    ((0, 0), (0, 0), 0.0),
    ((0, 0), (3, 4), 5.0),
    ((1, 2, 3), (4, 6, 3), 5.0),
])
def test_distance_examples(a, b, want):
    assert euclidean_distance(a, b) == want


def test_distance_dimension_mismatch():
    with pytest.raises(ContractViolation):
        euclidean_distance((0, 0), (0, 0, 0))


def test_triangle_inequality_random_triples(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 6))
        a, b, c = (rng.normal(size=d) * 10 ** rng.uniform(-3, 3) for _ in range(3))
        ab, bc, ac = euclidean_distance(a, b), euclidean_distance(b, c), euclidean_distance(a, c)
        assert ac <= (ab + bc) * (1 + 1e-12)
        assert euclidean_distance(a, b) == euclidean_distance(b, a)


def test_zero_only_for_equal_vectors():
    assert euclidean_distance((1.5, -2.0), (1.5, -2.0)) == 0.0
    assert euclidean_distance((1.5, -2.0), (1.5, np.nextafter(-2.0, 0))) > 0.0


def test_load_csv_two_points():
    ds = load_dataset(b"0,0\n1,1\n")
    assert (ds.n, ds.d) == (2, 2)


def test_load_xyz_single_row():
    ds = load_dataset("1 2 3\n", format="xyz")
    assert (ds.n, ds.d) == (1, 3)
    np.testing.assert_array_equal(ds.points, [[1, 2, 3]])


def test_ragged_rows_report_line():
    with pytest.raises(DimensionMismatch) as exc:
        load_dataset(b"1,2\n1,2,3\n")
    assert exc.value.line == 2


def test_xyz_needs_three_columns():
    with pytest.raises(DimensionMismatch):
        load_dataset("1 2\n", format="xyz")


def test_non_numeric_row_is_rejected_not_skipped():
    with pytest.raises(ParseError) as exc:
        load_dataset(io.BytesIO(b"1,2\nfoo,3\n4,5\n"))
    assert exc.value.line == 2


def test_empty_input():
    with pytest.raises(EmptyDataset):
        load_dataset(b"")
    with pytest.raises(EmptyDataset):
        load_dataset(b"\n\n  \n")


def test_blank_lines_ignored():
    assert load_dataset("1,2\n\n3,4\n").n == 2


def test_nan_rejected():
    with pytest.raises(ParseError):
        load_dataset("1,nan\n")
    with pytest.raises(ContractViolation):
        Dataset([[1.0, math.inf]])


def test_dataset_is_read_only():
    ds = Dataset([[1.0, 2.0]])
    with pytest.raises(ValueError):
        ds.points[0, 0] = 3.0


@given(st.lists(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64),
                         min_size=3, max_size=3), min_size=1, max_size=30),
       st.sampled_from(["csv", "xyz"]))
def test_serialize_round_trip(rows, fmt):
    ds = Dataset(rows)
    back = load_dataset(dump_dataset(ds, fmt), format=fmt)
    np.testing.assert_array_equal(back.points, ds.points)


def test_load_path_guesses_format(tmp_path):
    p = tmp_path / "cloud.xyz"
    p.write_text("1 2 3\n4 5 6\n")
    assert load_path(p).n == 2


def test_synthetic_zero_spread_collapses():
    ds = generate_synthetic(4, 2, 1, seed=7, spread=0.0)
    assert np.all(ds.points == ds.points[0])


def test_synthetic_is_deterministic():
    a = generate_synthetic(500, 3, 5, seed=42, spread=0.1)
    b = generate_synthetic(500, 3, 5, seed=42, spread=0.1)
    assert a.points.tobytes() == b.points.tobytes()
    c = generate_synthetic(500, 3, 5, seed=43, spread=0.1)
    assert a.points.tobytes() != c.points.tobytes()


def test_synthetic_blob_sizes_recovered():
    ds, centers, _ = generate_synthetic(1000, 3, 10, seed=1, spread=0.01, return_centers=True)
    d2 = ((ds.points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    sizes = np.bincount(d2.argmin(axis=1), minlength=10)
    assert sizes.tolist() == [100] * 10


def test_synthetic_uneven_sizes_differ_by_one():
    _, _, labels = generate_synthetic(103, 2, 10, seed=3, spread=0.01, return_centers=True)
    sizes = np.bincount(labels)
    assert sizes.max() - sizes.min() == 1 and sizes.sum() == 103


def test_synthetic_preconditions():
    with pytest.raises(ContractViolation):
        generate_synthetic(3, 2, 5, seed=0, spread=0.1)
