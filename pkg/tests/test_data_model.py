from __future__ import annotations

import numpy as np
import pytest

from robfit.data_model import (
    Dataset,
    GroundTruth,
    IndexSet,
    column_norms,
    hankel_regressors,
    load_dataset,
    load_matrix_csv,
    normalize_columns,
    partition_outliers,
    save_dataset,
    save_matrix_csv,
    unit_columns,
)
from robfit.errors import DataError


# ---------------------------------------------------------------------------
# Dataset / GroundTruth invariants
# ---------------------------------------------------------------------------


def test_dataset_shapes():
    d = Dataset(y=[[1.0, 2.0, 3.0]], x=[[4.0, 5.0, 6.0]])
    assert (d.m, d.n, d.n_samples) == (1, 1, 3)


def test_dataset_column_mismatch():
    with pytest.raises(DataError, match="column mismatch"):
        Dataset(y=np.ones((1, 3)), x=np.ones((2, 4)))


def test_dataset_rejects_nonfinite():
    with pytest.raises(DataError, match="non-finite"):
        Dataset(y=[[1.0, np.nan]], x=[[1.0, 2.0]])


def test_dataset_arrays_read_only():
    d = Dataset(y=[[1.0, 2.0]], x=[[3.0, 4.0]])
    with pytest.raises(ValueError):
        d.y[0, 0] = 9.0


def test_ground_truth_validate():
    x = np.array([[1.0, 2.0, 3.0]])
    a0 = np.array([[2.0]])
    e = np.zeros((1, 3))
    f = np.array([[0.0, 0.0, 5.0]])
    gt = GroundTruth(a0=a0, e=e, f=f)
    gt.validate(Dataset(y=a0 @ x + e + f, x=x))
    with pytest.raises(DataError, match="inconsistent"):
        gt.validate(Dataset(y=a0 @ x + 1.0, x=x))


# ---------------------------------------------------------------------------
# IndexSet
# ---------------------------------------------------------------------------


def test_index_set_round_trip():
    s = IndexSet.from_one_based([2, 7], universe=10)
    assert s.indices == (1, 6)
    assert s.one_based == (2, 7)
    assert len(s) == 2
    assert 1 in s and 0 not in s


def test_index_set_complement_partitions():
    s = IndexSet.from_zero_based([0, 3], universe=5)
    c = s.complement()
    assert sorted(set(s) | set(c)) == list(range(5))
    assert not set(s) & set(c)


def test_index_set_mask_round_trip():
    mask = np.array([True, False, True, True, False])
    s = IndexSet.from_mask(mask)
    assert np.array_equal(s.to_mask(), mask)


def test_index_set_rejects_out_of_range():
    with pytest.raises(DataError):
        IndexSet.from_zero_based([5], universe=5)
    with pytest.raises(DataError, match="duplicates"):
        IndexSet((1, 1), universe=4)


# ---------------------------------------------------------------------------
# hankel_regressors
# ---------------------------------------------------------------------------


def test_hankel_example():
    d = hankel_regressors([1.0, 2.0, 3.0, 4.0], [10.0, 20.0, 30.0], n_f=2)
    assert np.array_equal(d.x, [[2.0, 3.0, 4.0], [1.0, 2.0, 3.0]])
    assert np.array_equal(d.y, [[10.0, 20.0, 30.0]])


def test_hankel_single_lag():
    u = [1.0, 2.0, 3.0]
    d = hankel_regressors(u, u, n_f=1)
    assert np.array_equal(d.x, [u])


def test_hankel_lag_lookup():
    # Entry (i, t) equals the input delayed by i steps.
    rng = np.random.default_rng(0)
    u = rng.normal(size=12)
    n_f = 4
    d = hankel_regressors(u, np.zeros(12 - n_f + 1), n_f=n_f)
    for i in range(n_f):
        for t in range(d.n_samples):
            assert d.x[i, t] == u[t + n_f - 1 - i]


def test_hankel_aligned_y_trimmed():
    u = [1.0, 2.0, 3.0, 4.0]
    y = [9.0, 10.0, 20.0, 30.0]
    d = hankel_regressors(u, y, n_f=2)
    assert np.array_equal(d.y, [[10.0, 20.0, 30.0]])


def test_hankel_insufficient_samples():
    with pytest.raises(DataError, match="not enough samples"):
        hankel_regressors([1.0, 2.0], [0.0], n_f=3)


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


def test_normalize_example():
    d = Dataset(y=[[10.0]], x=[[3.0], [4.0]])
    nd = normalize_columns(d)
    assert np.allclose(nd.x.ravel(), [0.6, 0.8])
    assert np.allclose(nd.y.ravel(), [2.0])


def test_normalize_idempotent():
    rng = np.random.default_rng(1)
    d = Dataset(y=rng.normal(size=(2, 6)), x=rng.normal(size=(3, 6)))
    once = normalize_columns(d)
    twice = normalize_columns(once)
    assert np.allclose(once.x, twice.x, atol=1e-15)
    assert np.abs(column_norms(once.x) - 1.0).max() <= 1e-12


def test_normalize_zero_column_named():
    x = np.ones((2, 6))
    x[:, 4] = 0.0
    with pytest.raises(DataError, match="k=5"):
        normalize_columns(Dataset(y=np.ones((1, 6)), x=x))
    with pytest.raises(DataError, match="k=5"):
        unit_columns(x)


# ---------------------------------------------------------------------------
# partition_outliers
# ---------------------------------------------------------------------------


def test_partition_zero_matrix():
    s0, sc = partition_outliers(np.zeros((2, 4)))
    assert len(sc) == 0
    assert s0.indices == (0, 1, 2, 3)


def test_partition_named_columns():
    f = np.zeros((1, 8))
    f[0, 1] = 3.0
    f[0, 6] = -2.0
    s0, sc = partition_outliers(f, tol=0.0)
    assert sc.one_based == (2, 7)
    assert set(s0) | set(sc) == set(range(8))
    assert not set(s0) & set(sc)


def test_partition_threshold_semantics():
    f = np.array([[0.0, 1e-12, 5.0]])
    _, sc = partition_outliers(f, tol=1e-9)
    assert sc.one_based == (3,)


def test_partition_disjoint_cover_random():
    rng = np.random.default_rng(2)
    for _ in range(25):
        f = rng.normal(size=(2, 9)) * (rng.random(size=(1, 9)) > 0.5)
        s0, sc = partition_outliers(f, tol=0.0)
        assert sorted(set(s0) | set(sc)) == list(range(9))
        assert not set(s0) & set(sc)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    m = rng.normal(size=(3, 5)) * 10.0 ** rng.integers(-8, 8, size=(3, 5))
    p = save_matrix_csv(m, tmp_path / "m.csv", comments=["check"])
    back = load_matrix_csv(p)
    assert np.array_equal(back, m)


def test_load_dataset_two_block(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# outputs\n1.0,2.0,3.0\n\n4.0,5.0,6.0\n")
    d = load_dataset(p)
    assert (d.m, d.n, d.n_samples) == (1, 1, 3)
    assert np.array_equal(d.y, [[1.0, 2.0, 3.0]])
    assert np.array_equal(d.x, [[4.0, 5.0, 6.0]])


def test_load_dataset_descriptor(tmp_path):
    save_matrix_csv([[1.0, 2.0]], tmp_path / "y.csv")
    save_matrix_csv([[3.0, 4.0], [5.0, 6.0]], tmp_path / "x.csv")
    (tmp_path / "d.json").write_text('{"y": "y.csv", "x": "x.csv"}')
    d = load_dataset(tmp_path / "d.json")
    assert (d.m, d.n, d.n_samples) == (1, 2, 2)


def test_dataset_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    d = Dataset(y=rng.normal(size=(2, 7)), x=rng.normal(size=(3, 7)))
    p = save_dataset(d, tmp_path / "d.csv")
    back = load_dataset(p)
    assert np.array_equal(back.y, d.y)
    assert np.array_equal(back.x, d.x)


def test_load_dataset_column_mismatch(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1.0,2.0,3.0\n\n4.0,5.0,6.0,7.0\n")
    with pytest.raises(DataError, match="column mismatch"):
        load_dataset(p)


def test_load_dataset_parse_error(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("abc\n\n1.0\n")
    with pytest.raises(DataError, match="parse"):
        load_dataset(p)


def test_load_dataset_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_dataset(tmp_path / "missing.csv")


def test_load_matrix_ragged_row(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(DataError, match="ragged"):
        load_matrix_csv(p)
