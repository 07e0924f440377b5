"""Connectivity construction, validation, fusion, and CSV formats."""

import numpy as np
import pytest

from tgraph.connectivity import (
    ConnectivityMatrix,
    GlobalTemplate,
    TimeSeriesTable,
    augment,
    global_template,
    pearson_connectivity,
    read_matrix_csv,
    read_timeseries_csv,
    validate_connectivity,
    write_matrix_csv,
    write_timeseries_csv,
)
from tgraph.errors import (
    ConstantColumn,
    DataFormatError,
    DimensionMismatch,
    TooFewTimepoints,
)


def pearson_oracle(v):
    """Direct per-pair formula: center, dot, divide by norms."""
    t, m = v.shape
    out = np.eye(m)
    for i in range(m):
        for j in range(m):
            if i != j:
                xi = v[:, i] - v[:, i].mean()
                xj = v[:, j] - v[:, j].mean()
                out[i, j] = (xi @ xj) / np.sqrt((xi @ xi) * (xj @ xj))
    return out


def test_identical_columns_give_exactly_one():
    rng = np.random.default_rng(0)
    col = rng.normal(size=12)
    v = np.column_stack([col, col, rng.normal(size=12)])
    w = pearson_connectivity(TimeSeriesTable(v)).weights
    assert w[0, 1] == 1.0
    assert w[1, 0] == 1.0


def test_exact_anticorrelation():
    v = np.array([[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]])
    w = pearson_connectivity(TimeSeriesTable(v)).weights
    assert w[0, 1] == -1.0


def test_matches_direct_formula_oracle():
    rng = np.random.default_rng(42)
    for _ in range(20):
        t = int(rng.integers(5, 40))
        m = int(rng.integers(2, 9))
        v = rng.normal(size=(t, m))
        w = pearson_connectivity(TimeSeriesTable(v)).weights
        assert np.max(np.abs(w - pearson_oracle(v))) <= 1e-12


def test_affine_rescaling_leaves_correlations():
    rng = np.random.default_rng(3)
    v = rng.normal(size=(25, 5))
    scaled = v * rng.uniform(0.5, 4.0, size=5) + rng.normal(size=5)
    w1 = pearson_connectivity(TimeSeriesTable(v)).weights
    w2 = pearson_connectivity(TimeSeriesTable(scaled)).weights
    assert np.max(np.abs(w1 - w2)) <= 1e-10


def test_output_is_symmetric_with_unit_diagonal():
    rng = np.random.default_rng(7)
    w = pearson_connectivity(TimeSeriesTable(rng.normal(size=(30, 6)))).weights
    assert np.array_equal(w, w.T)
    assert np.all(np.diag(w) == 1.0)
    assert np.all(np.abs(w) <= 1.0)


def test_too_few_timepoints():
    with pytest.raises(TooFewTimepoints):
        pearson_connectivity(TimeSeriesTable(np.ones((2, 4)) + np.eye(2, 4)))


def test_constant_column_reports_index():
    rng = np.random.default_rng(1)
    v = rng.normal(size=(10, 5))
    v[:, 3] = 0.1
    with pytest.raises(ConstantColumn) as err:
        pearson_connectivity(TimeSeriesTable(v))
    assert err.value.column == 3


def test_roi_name_count_checked():
    with pytest.raises(DimensionMismatch):
        TimeSeriesTable(np.ones((4, 3)), roi_names=["a", "b"])


def test_validate_identity_strict_ok():
    report = validate_connectivity(ConnectivityMatrix(np.eye(4)))
    assert report.ok


def test_validate_flags_asymmetry():
    w = np.eye(2)
    w[0, 1] = 0.5
    w[1, 0] = 0.4
    report = validate_connectivity(ConnectivityMatrix(w))
    assert not report.ok
    assert report.kinds() == {"asymmetry"}
    assert report.violations[0].location == (0, 1)


def test_validate_range_only_in_strict_mode():
    w = np.eye(3)
    w[0, 1] = w[1, 0] = 1.5
    strict = validate_connectivity(ConnectivityMatrix(w), "strict_correlation")
    loose = validate_connectivity(ConnectivityMatrix(w), "symmetric_only")
    assert "range" in strict.kinds()
    assert loose.ok


def test_validate_flags_bad_diagonal():
    w = np.eye(3)
    w[2, 2] = 0.9
    report = validate_connectivity(ConnectivityMatrix(w))
    assert "diagonal" in report.kinds()
    report2 = validate_connectivity(ConnectivityMatrix(w), "symmetric_only")
    assert report2.ok


def test_validate_unknown_mode():
    with pytest.raises(ValueError):
        validate_connectivity(ConnectivityMatrix(np.eye(2)), "bogus")


def test_global_template_zero_case():
    g = global_template([np.zeros((3, 3)), np.zeros((3, 3))])
    assert np.array_equal(g.weights, np.zeros((3, 3)))


def test_global_template_sums_entries():
    a = np.zeros((2, 2))
    b = np.zeros((2, 2))
    a[0, 1] = 0.3
    b[0, 1] = 0.2
    g = global_template([a, b])
    assert g.weights[0, 1] == pytest.approx(0.5, abs=1e-15)


def test_global_template_three_way_oracle():
    rng = np.random.default_rng(11)
    mats = [rng.normal(size=(5, 5)) for _ in range(3)]
    g = global_template(mats).weights
    direct = np.zeros((5, 5))
    for t in mats:
        for i in range(5):
            for j in range(5):
                direct[i, j] += t[i, j]
    assert np.max(np.abs(g - direct)) <= 1e-12


def test_global_template_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        global_template([np.zeros((2, 2)), np.zeros((3, 3))])


def test_augment_identity_and_annihilator():
    rng = np.random.default_rng(2)
    w = rng.normal(size=(4, 4))
    assert np.array_equal(augment(w, np.ones((4, 4))), w)
    assert np.array_equal(augment(w, np.zeros((4, 4))), np.zeros((4, 4)))


def test_augment_single_entry_product():
    w = np.zeros((2, 2))
    g = np.zeros((2, 2))
    w[0, 1] = 0.8
    g[0, 1] = 0.5
    out = augment(ConnectivityMatrix(w + np.eye(2)), GlobalTemplate(g))
    assert out[0, 1] == pytest.approx(0.4, abs=1e-15)


def test_augment_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        augment(np.zeros((2, 2)), np.zeros((3, 3)))


def test_matrix_csv_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(5)
    w = rng.normal(size=(6, 6))
    path = tmp_path / "m.csv"
    write_matrix_csv(w, path)
    assert np.array_equal(read_matrix_csv(path), w)


def test_matrix_csv_rejects_bad_files(tmp_path):
    with pytest.raises(DataFormatError):
        read_matrix_csv(tmp_path / "missing.csv")
    rect = tmp_path / "rect.csv"
    rect.write_text("1,2,3\n4,5,6\n")
    with pytest.raises(DataFormatError):
        read_matrix_csv(rect)
    nan = tmp_path / "nan.csv"
    nan.write_text("1,nan\n0,1\n")
    with pytest.raises(DataFormatError):
        read_matrix_csv(nan)


def test_timeseries_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    table = TimeSeriesTable(rng.normal(size=(8, 3)), ["roi_a", "roi_b", "roi_c"])
    path = tmp_path / "ts.csv"
    write_timeseries_csv(table, path)
    back = read_timeseries_csv(path)
    assert back.roi_names == table.roi_names
    assert np.array_equal(back.values, table.values)


def test_timeseries_csv_headerless(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("1,2\n3,4\n5,6\n")
    back = read_timeseries_csv(path)
    assert back.roi_names is None
    assert back.values.shape == (3, 2)


def test_timeseries_csv_ragged_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(DataFormatError):
        read_timeseries_csv(path)
