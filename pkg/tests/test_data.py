import numpy as np
import pytest

from adanet.data import (
    Dataset,
    ParseError,
    apply_standardization,
    load_csv,
    make_folds,
    r_infinity,
    save_csv,
    standardize,
    subset,
    synth,
)
from adanet.kernel import InvalidInputError


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_two_row_file(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,0.5,0.25\n-1,0.0,1.0\n"))
        assert ds.m == 2
        assert ds.n_features == 2
        np.testing.assert_array_equal(ds.labels, [1.0, -1.0])
        np.testing.assert_array_equal(ds.features, [[0.5, 0.25], [0.0, 1.0]])

    def test_zero_one_remap(self, tmp_path):
        ds = load_csv(write(tmp_path, "0,1.0\n1,2.0\n"))
        np.testing.assert_array_equal(ds.labels, [-1.0, 1.0])

    def test_non_numeric_feature_names_line(self, tmp_path):
        with pytest.raises(ParseError, match="line 1"):
            load_csv(write(tmp_path, "1,abc\n"))

    def test_ragged_row(self, tmp_path):
        with pytest.raises(ParseError, match="line 2"):
            load_csv(write(tmp_path, "1,0.5,0.25\n-1,0.0\n"))

    def test_bad_label(self, tmp_path):
        with pytest.raises(ParseError, match="label"):
            load_csv(write(tmp_path, "3,0.5\n"))

    def test_header_row(self, tmp_path):
        ds = load_csv(write(tmp_path, "label,a,b\n1,0.5,0.25\n"), has_header=True)
        assert ds.column_names == ("a", "b")
        assert ds.m == 1

    def test_empty_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, ""))

    def test_round_trip(self, tmp_path):
        ds = synth("linear", 20, 0.1, 3)
        path = tmp_path / "rt.csv"
        save_csv(ds, path)
        back = load_csv(path)
        np.testing.assert_array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.labels, ds.labels)


class TestDataset:
    def test_label_validation(self):
        with pytest.raises(InvalidInputError):
            Dataset(np.ones((2, 2)), np.array([1.0, 2.0]))

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            Dataset(np.array([[np.inf]]), np.array([1.0]))

    def test_alignment(self):
        with pytest.raises(InvalidInputError):
            Dataset(np.ones((3, 2)), np.array([1.0, -1.0]))


class TestStandardize:
    def test_two_point_column(self):
        ds = Dataset(np.array([[1.0], [3.0]]), np.array([1.0, -1.0]))
        out, stats = standardize(ds)
        # mean 2, population stdev 1
        np.testing.assert_allclose(out.features, [[-1.0], [1.0]])
        assert stats.mean[0] == pytest.approx(2.0)
        assert stats.std[0] == pytest.approx(1.0)

    def test_constant_column_zeroed(self):
        ds = Dataset(np.array([[5.0], [5.0], [5.0]]), np.array([1.0, -1.0, 1.0]))
        out, _ = standardize(ds)
        np.testing.assert_array_equal(out.features, np.zeros((3, 1)))

    def test_idempotence(self):
        ds = synth("linear", 50, 0.2, 0)
        once, _ = standardize(ds)
        twice, _ = standardize(once)
        np.testing.assert_allclose(twice.features, once.features, atol=1e-12)

    def test_needs_two_examples(self):
        ds = Dataset(np.array([[1.0]]), np.array([1.0]))
        with pytest.raises(InvalidInputError):
            standardize(ds)

    def test_apply_to_held_out(self):
        ds = synth("linear", 40, 0.2, 1)
        _, stats = standardize(ds)
        other = synth("linear", 10, 0.2, 2)
        out = apply_standardization(other, stats)
        expected = (other.features - stats.mean) / stats.std
        np.testing.assert_allclose(out.features, expected)


class TestFolds:
    def test_rotation_wraps(self):
        ds = synth("linear", 30, 0.1, 0)
        fa = make_folds(ds, 9, seed=0)
        assert fa.validation_fold == 0
        train_folds = set(fa.fold_of[fa.train_indices()])
        assert train_folds == set(range(1, 9))

    def test_minimal_size_one_per_fold(self):
        ds = synth("linear", 10, 0.1, 0)
        fa = make_folds(ds, 0, seed=0)
        counts = np.bincount(fa.fold_of, minlength=10)
        np.testing.assert_array_equal(counts, np.ones(10, dtype=int))

    def test_deterministic(self):
        ds = synth("linear", 57, 0.1, 0)
        a = make_folds(ds, 3, seed=11)
        b = make_folds(ds, 3, seed=11)
        np.testing.assert_array_equal(a.fold_of, b.fold_of)

    def test_partition(self):
        ds = synth("linear", 57, 0.1, 0)
        fa = make_folds(ds, 4, seed=5)
        all_idx = np.concatenate(
            [fa.test_indices(), fa.validation_indices(), fa.train_indices()]
        )
        np.testing.assert_array_equal(np.sort(all_idx), np.arange(57))
        counts = np.bincount(fa.fold_of, minlength=10)
        assert counts.max() - counts.min() <= 1

    def test_same_partition_across_rotations(self):
        ds = synth("linear", 40, 0.1, 0)
        a = make_folds(ds, 0, seed=9)
        b = make_folds(ds, 7, seed=9)
        np.testing.assert_array_equal(a.fold_of, b.fold_of)

    def test_too_small(self):
        ds = synth("linear", 8, 0.1, 0)
        with pytest.raises(InvalidInputError):
            make_folds(ds, 0, seed=0)


class TestSynth:
    def test_linear_noiseless_is_separable(self):
        ds = synth("linear", 200, 0.0, 7)
        # least-squares direction separates two noiseless blobs
        w, *_ = np.linalg.lstsq(ds.features, ds.labels, rcond=None)
        acc = np.mean(np.sign(ds.features @ w) == ds.labels)
        assert acc == 1.0

    def test_circles_noiseless_defeats_linear(self):
        ds = synth("circles", 400, 0.0, 7)
        rng = np.random.default_rng(123)
        best = 0.0
        for _ in range(100):
            W = rng.normal(size=(100, 2))
            b = rng.normal(size=100)
            scores = ds.features @ W.T + b
            accs = np.mean(np.sign(scores) == ds.labels[:, None], axis=0)
            best = max(best, float(accs.max()))
        assert best <= 0.75

    def test_deterministic(self):
        a = synth("circles", 50, 0.1, 13)
        b = synth("circles", 50, 0.1, 13)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            synth("spirals", 100, 0.1, 0)

    def test_balanced_labels(self):
        ds = synth("circles", 100, 0.1, 0)
        assert np.sum(ds.labels == 1.0) == 50

    def test_subset(self):
        ds = synth("linear", 20, 0.1, 0)
        sub = subset(ds, np.array([0, 5, 7]))
        assert sub.m == 3
        np.testing.assert_array_equal(sub.features[1], ds.features[5])


class TestRInfinity:
    def test_max_magnitude(self):
        ds = Dataset(np.array([[0.5, -2.0], [1.0, 1.0]]), np.array([1.0, -1.0]))
        assert r_infinity(ds) == 2.0

    def test_zero_features(self):
        ds = Dataset(np.zeros((3, 2)), np.array([1.0, -1.0, 1.0]))
        assert r_infinity(ds) == 0.0

    def test_single_row(self):
        ds = Dataset(np.array([[3.0]]), np.array([1.0]))
        assert r_infinity(ds) == 3.0
