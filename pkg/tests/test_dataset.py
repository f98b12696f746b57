import numpy as np
import pytest

from app.dataset import (
    Dataset,
    ScalerParams,
    describe,
    fit_apply_minmax,
    fit_minmax,
    load_csv,
    split_classes,
    stratified_folds,
    write_csv,
)
from app.errors import (
    ConfigError,
    MissingValueError,
    NonBinaryError,
    ParseError,
    ShapeError,
    TooFewSamplesError,
)

from conftest import make_1d, uci_path


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ------------------------------------------------
# load_csv
# ------------------------------------------------
def test_load_minimal_file(tmp_path):
    d = load_csv(_write(tmp_path, "f1,f2,y\n0.1,0.2,0\n0.3,0.4,1\n"), "y")
    assert (d.n, d.m) == (2, 2)
    assert d.feature_names == ("f1", "f2")
    assert d.label_name == "y"
    assert d.name == "data"
    assert list(d.labels) == ["0", "1"]
    np.testing.assert_allclose(d.features, [[0.1, 0.2], [0.3, 0.4]])


@pytest.mark.parametrize("label", ["y", "2", -1, "-1"])
def test_label_column_by_name_or_index(tmp_path, label):
    d = load_csv(_write(tmp_path, "f1,f2,y\n1,2,a\n3,4,b\n"), label)
    assert d.label_name == "y"
    assert d.feature_names == ("f1", "f2")


def test_label_column_in_the_middle(tmp_path):
    d = load_csv(_write(tmp_path, "f1,y,f2\n1,a,2\n3,b,4\n"), 1)
    assert d.feature_names == ("f1", "f2")
    np.testing.assert_allclose(d.features, [[1, 2], [3, 4]])


def test_empty_feature_cell_is_missing(tmp_path):
    with pytest.raises(MissingValueError):
        load_csv(_write(tmp_path, "f1,f2,y\n0.1,,0\n0.3,0.4,1\n"), "y")


def test_na_token_is_missing(tmp_path):
    with pytest.raises(MissingValueError):
        load_csv(_write(tmp_path, "f1,f2,y\n0.1,NA,0\n0.3,0.4,1\n"), "y")


def test_label_tokens_kept_verbatim(tmp_path):
    d = load_csv(_write(tmp_path, "f1,y\n1,NA\n2,None\n3,NA\n"), "y")
    assert list(d.labels) == ["NA", "None", "NA"]


def test_label_whitespace_is_significant(tmp_path):
    d = load_csv(_write(tmp_path, "f1,y\n1, 1\n2,1\n3,1\n"), "y")
    assert d.class_counts() == {" 1": 1, "1": 2}


def test_empty_label_is_missing(tmp_path):
    with pytest.raises(MissingValueError, match="line 3"):
        load_csv(_write(tmp_path, "f1,y\n1,a\n2,\n3,b\n"), "y")


def test_non_numeric_reports_line(tmp_path):
    with pytest.raises(ParseError, match="line 3"):
        load_csv(_write(tmp_path, "f1,f2,y\n0.1,0.2,0\n0.3,abc,1\n"), "y")


def test_unknown_label_column(tmp_path):
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path, "f1,f2,y\n1,2,a\n3,4,b\n"), "target")


def test_three_labels_rejected(tmp_path):
    with pytest.raises(NonBinaryError):
        load_csv(_write(tmp_path, "f1,y\n1,a\n2,b\n3,c\n"), "y")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_csv(tmp_path / "nope.csv", "y")


def test_write_then_load_keeps_values(tmp_path):
    d = make_1d([0.5, 1.5, 2.5], [7.25])
    path = tmp_path / "out.csv"
    write_csv(d, path)
    back = load_csv(path, "class")
    np.testing.assert_allclose(back.features, d.features)
    assert list(back.labels) == list(d.labels)
    assert path.read_text().splitlines()[0] == "x,class"


# ------------------------------------------------
# Dataset
# ------------------------------------------------
def test_dataset_is_read_only():
    d = make_1d([0, 1, 2], [5])
    with pytest.raises(ValueError):
        d.features[0, 0] = 9.0


def test_dataset_rejects_non_finite():
    with pytest.raises(MissingValueError):
        Dataset(np.array([[1.0], [np.nan]]), np.array(["a", "b"]), ("x",))


def test_dataset_rejects_mismatched_names():
    with pytest.raises(ShapeError):
        Dataset(np.zeros((2, 2)), np.array(["a", "b"]), ("x",))


def test_subset_carries_row_ids_and_flags_partial():
    d = make_1d([0, 1, 2], [5])
    sub = d.subset([0, 3])
    assert list(sub.row_ids) == [0, 3]
    assert not sub.partial
    only_majority = d.subset([1, 2])
    assert only_majority.partial
    assert list(only_majority.row_ids) == [1, 2]


# ------------------------------------------------
# split_classes / describe
# ------------------------------------------------
def test_split_single_minority_row():
    d = Dataset(np.arange(4, dtype=float).reshape(-1, 1), np.array([0, 0, 0, 1]), ("x",))
    split = split_classes(d)
    assert list(split.minority_indices) == [3]
    assert (split.n_minority, split.n_majority) == (1, 3)
    assert split.minority_label == 1


def test_split_tie_goes_to_first_label():
    d = Dataset(np.array([[0.0], [1.0]]), np.array(["b", "a"], dtype=object), ("x",))
    split = split_classes(d)
    assert split.minority_label == "a"
    assert list(split.minority_indices) == [1]


def test_describe_ratio():
    s = describe(make_1d(range(7), range(3)))
    assert (s.m, s.n_minority, s.n_majority) == (1, 3, 7)
    assert s.ratio == 2.33


# ------------------------------------------------
# min-max scaling
# ------------------------------------------------
def test_minmax_column():
    params = fit_minmax(np.array([[0.0], [5.0], [10.0]]))
    np.testing.assert_allclose(params.apply(np.array([[0.0], [5.0], [10.0]]))[:, 0], [0.0, 0.5, 1.0])


def test_minmax_constant_column_maps_to_zero():
    X = np.array([[2.0, 1.0], [2.0, 3.0], [2.0, 5.0]])
    scaled = fit_minmax(X).apply(X)
    np.testing.assert_array_equal(scaled[:, 0], [0.0, 0.0, 0.0])


def test_minmax_does_not_clamp():
    params = ScalerParams(minimum=np.array([0.0]), maximum=np.array([10.0]))
    assert params.apply(np.array([[12.0]]))[0, 0] == pytest.approx(1.2)


def test_minmax_invert():
    X = np.array([[1.0, -4.0], [3.0, 6.0], [2.0, 0.0]])
    params = fit_minmax(X)
    np.testing.assert_allclose(params.invert(params.apply(X)), X)


def test_fit_apply_minmax_keeps_labels():
    d = make_1d([0, 4, 8], [2])
    scaled, _ = fit_apply_minmax(d)
    np.testing.assert_allclose(scaled.features[:, 0], [0.0, 0.5, 1.0, 0.25])
    assert list(scaled.labels) == list(d.labels)


# ------------------------------------------------
# stratified folds
# ------------------------------------------------
def test_folds_spread_minority():
    d = make_1d(range(8), [100, 101])
    plan = stratified_folds(d, k=5, repeats=3, seed=11)
    for r in range(plan.repeats):
        with_minority = [f for f in range(5) if np.any(plan.assignments[r, 8:] == f)]
        assert len(with_minority) == 2
        seen = np.concatenate([plan.split(r, f)[1] for f in range(5)])
        assert sorted(seen.tolist()) == list(range(10))


def test_fold_sizes_level_per_class():
    d = make_1d(range(23), range(100, 107))
    plan = stratified_folds(d, k=4, repeats=2, seed=5)
    split = split_classes(d)
    for r in range(2):
        for members in (split.minority_indices, split.majority_indices):
            sizes = np.bincount(plan.assignments[r, members], minlength=4)
            assert sizes.max() - sizes.min() <= 1
        totals = np.bincount(plan.assignments[r], minlength=4)
        assert totals.max() - totals.min() <= 1


def test_train_and_test_partition():
    d = make_1d(range(12), range(50, 55))
    plan = stratified_folds(d, k=3, repeats=1, seed=0)
    train, test = plan.split(0, 1)
    assert not set(train) & set(test)
    assert len(train) + len(test) == d.n


def test_too_few_minority_rows_for_folds():
    with pytest.raises(TooFewSamplesError):
        stratified_folds(make_1d(range(20), [1, 2, 3]), k=5, repeats=1, seed=0)


@pytest.mark.parametrize("k,repeats", [(1, 1), (5, 0)])
def test_bad_fold_config(k, repeats):
    with pytest.raises(ConfigError):
        stratified_folds(make_1d(range(20), range(10)), k=k, repeats=repeats, seed=0)


def test_folds_deterministic():
    d = make_1d(range(30), range(100, 110))
    a = stratified_folds(d, 5, 4, seed=42)
    b = stratified_folds(d, 5, 4, seed=42)
    np.testing.assert_array_equal(a.assignments, b.assignments)


def test_folds_follow_the_seed():
    d = make_1d(range(30), range(100, 110))
    a = stratified_folds(d, 5, 1, seed=0)
    b = stratified_folds(d, 5, 1, seed=1)
    assert not np.array_equal(a.assignments, b.assignments)


# ------------------------------------------------
# UCI descriptors (need RESAMPLELAB_DATA_DIR)
# ------------------------------------------------
def test_pima_descriptor():
    d = load_csv(uci_path("pima"), -1)
    s = describe(d)
    assert (d.n, d.m) == (768, 8)
    assert (s.n_minority, s.n_majority) == (268, 500)


def test_balance_split():
    split = split_classes(load_csv(uci_path("balance"), -1))
    assert (split.n_minority, split.n_majority) == (49, 576)
