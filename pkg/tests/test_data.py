import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from memsvm.data import (
    SYNTHETIC_KINDS,
    Dataset,
    Normalization,
    SplitSpec,
    apply_normalization,
    gen_synthetic,
    load_arem,
    load_csv,
    normalize,
    one_vs_rest,
    save_csv,
    split,
    split_indices,
)
from memsvm.errors import DataError, ParameterError, ParseError, SchemaError


def test_labels_in_first_seen_order(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("f1,f2,label\n1,2,A\n3,4,B\n5,6,A\n")
    data = load_csv(path)
    assert data.labels.tolist() == [0, 1, 0]
    assert data.label_names == ("A", "B")
    assert data.feature_names == ("f1", "f2")
    np.testing.assert_array_equal(data.features, [[1, 2], [3, 4], [5, 6]])


def test_label_column_by_name_and_index(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y;a;b\nno;1;2\nyes;3;4\n")
    by_name = load_csv(path, label_column="y", delimiter=";")
    by_index = load_csv(path, label_column=0, delimiter=";")
    assert by_name.label_names == by_index.label_names == ("no", "yes")
    np.testing.assert_array_equal(by_name.features, [[1, 2], [3, 4]])


def test_headerless_file(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("0.1,0.2,1\n0.3,0.4,2\n")
    data = load_csv(path, header=False)
    assert data.feature_names is None and data.label_names == ("1", "2")


def test_missing_rows_dropped_with_warning(tmp_path, caplog):
    path = tmp_path / "d.csv"
    path.write_text("a,b,y\n1,?,A\n2,3,B\n,4,A\n5,6,A\n")
    with caplog.at_level(logging.WARNING):
        data = load_csv(path)
    assert data.n_samples == 2
    assert "dropped 2 rows" in caplog.text


def test_non_numeric_cell_reports_position(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,y\n1,2,A\n3,oops,B\n")
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert info.value.row == 3 and info.value.column == 2


@pytest.mark.parametrize("text", ["", "a,b,y\n"])
def test_empty_files_rejected(tmp_path, text):
    path = tmp_path / "d.csv"
    path.write_text(text)
    with pytest.raises(SchemaError):
        load_csv(path)


def test_unknown_label_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,y\n1,2,A\n")
    with pytest.raises(SchemaError):
        load_csv(path, label_column="target")


def test_csv_round_trip(tmp_path):
    data = gen_synthetic("three_class_100x3", 4)
    path = tmp_path / "s.csv"
    save_csv(data, path)
    back = load_csv(path)
    np.testing.assert_array_equal(back.features, data.features)
    assert [back.label_names[k] for k in back.labels] == [data.label_names[k] for k in data.labels]


def test_normalize_example():
    data = Dataset(np.array([[2.0, 7.0], [4.0, 7.0], [6.0, 7.0]]), np.array([0, 1, 0]), ("a", "b"))
    out = normalize(data)
    assert out.features[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert out.features[:, 1].tolist() == [0.0, 0.0, 0.0]  # constant feature


def test_apply_normalization_clamps():
    norm = Normalization(np.array([0.0]), np.array([10.0]))
    data = Dataset(np.array([[-5.0], [5.0], [15.0]]), np.array([0, 1, 0]), ("a", "b"))
    assert apply_normalization(data, norm).features[:, 0].tolist() == [0.0, 0.5, 1.0]


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=60)
@given(arrays(float, st.tuples(st.integers(2, 20), st.integers(1, 5)), elements=finite))
def test_normalize_range_and_idempotence(X):
    data = Dataset(X, np.arange(X.shape[0]) % 2, ("a", "b"))
    once = normalize(data)
    assert np.all((once.features >= 0) & (once.features <= 1))
    twice = normalize(once)
    np.testing.assert_allclose(twice.features, once.features, atol=1e-12)


def test_split_sizes():
    labels = np.array([0] * 5 + [1] * 5)
    tr, te = split_indices(labels, SplitSpec(0.7, True, 0))
    assert (tr.size, te.size) == (7, 3)


def test_stratified_split_keeps_proportions():
    labels = np.array([0] * 60 + [1] * 30 + [2] * 10)
    tr, te = split_indices(labels, SplitSpec(0.7, True, 3))
    assert np.bincount(labels[tr]).tolist() == [42, 21, 7]
    assert np.bincount(labels[te]).tolist() == [18, 9, 3]


def test_single_sample_class_goes_to_train(caplog):
    labels = np.array([0] * 9 + [1])
    with caplog.at_level(logging.WARNING):
        tr, te = split_indices(labels, SplitSpec(0.5, True, 0))
    assert 9 in tr and "single sample" in caplog.text


@settings(max_examples=60)
@given(
    st.lists(st.integers(0, 3), min_size=4, max_size=80),
    st.floats(0.1, 0.9),
    st.booleans(),
    st.integers(0, 2**31),
)
def test_split_disjoint_complete_deterministic(labels, frac, stratified, seed):
    labels = np.array(labels)
    spec = SplitSpec(frac, stratified, seed)
    tr, te = split_indices(labels, spec)
    assert np.intersect1d(tr, te).size == 0
    np.testing.assert_array_equal(np.union1d(tr, te), np.arange(labels.size))
    tr2, te2 = split_indices(labels, spec)
    np.testing.assert_array_equal(tr, tr2)
    np.testing.assert_array_equal(te, te2)


def test_bad_train_fraction():
    with pytest.raises(ParameterError):
        SplitSpec(train_fraction=1.0)


@pytest.mark.parametrize("kind", sorted(SYNTHETIC_KINDS))
def test_synthetic_shapes(kind):
    n, d, c = SYNTHETIC_KINDS[kind]
    data = gen_synthetic(kind, 0)
    assert data.features.shape == (n, d) and data.n_classes == c
    counts = data.class_counts()
    assert counts.max() - counts.min() <= 1
    np.testing.assert_array_equal(gen_synthetic(kind, 0).features, data.features)
    assert not np.array_equal(gen_synthetic(kind, 1).features, data.features)


def test_unknown_synthetic_kind():
    with pytest.raises(ParameterError):
        gen_synthetic("four_class_10x4")


def _write_arem(root):
    for name, rows in {
        "bending1": ["0,1.0,2.0", "250,1.5,2.5"],
        "bending2": ["0 3.0 4.0"],
        "lying": ["# header line", "0,5.0,6.0"],
        "walking": ["0,7.0,8.0", "250,7.5,8.5"],
    }.items():
        (root / name).mkdir()
        (root / name / "dataset1.csv").write_text("\n".join(rows) + "\n")


def test_arem_directory(tmp_path):
    _write_arem(tmp_path)
    data = load_arem(tmp_path)
    assert data.label_names == ("bending", "lying", "walking")
    assert data.n_features == 2 and data.n_samples == 6
    assert data.class_counts().tolist() == [3, 1, 2]
    binary = one_vs_rest(data, "walking")
    assert binary.label_names == ("walking", "rest")
    assert binary.class_counts().tolist() == [2, 4]


def test_one_vs_rest_unknown_class(tmp_path):
    _write_arem(tmp_path)
    with pytest.raises(DataError):
        one_vs_rest(load_arem(tmp_path), "cycling")


def test_dataset_needs_two_classes():
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), np.zeros(3, dtype=int), ("only",))


def test_split_returns_datasets():
    train, test = split(gen_synthetic("two_class_100x2", 0))
    assert train.n_samples == 70 and test.n_samples == 30
