import gzip

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onlad.data import (
    Dataset, load_csv, load_features_csv, minmax_normalize, partition_by_class,
    sample_without_replacement, split, split_indices,
)
from onlad.errors import DatasetError

from conftest import dataset_path, gaussian_classes


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_small_file(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,2,a\n3,4,b\n5,6,a\n7,8,b\n"))
        assert (ds.n_samples, ds.n_features, ds.class_count) == (4, 2, 2)
        np.testing.assert_array_equal(ds.labels, [0, 1, 0, 1])
        assert ds.class_names == ("a", "b")

    def test_header_and_named_label(self, tmp_path):
        ds = load_csv(write(tmp_path, "cls,x,y\nb,1,2\na,3,4\n"), "cls")
        np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4]])
        np.testing.assert_array_equal(ds.labels, [1, 0])

    def test_numeric_labels_sorted_numerically(self, tmp_path):
        ds = load_csv(write(tmp_path, "0,10\n0,2\n0,1\n"))
        assert ds.class_names == ("1", "2", "10")

    def test_label_index(self, tmp_path):
        ds = load_csv(write(tmp_path, "7,0.5\n8,0.25\n"), 0)
        np.testing.assert_array_equal(ds.features, [[0.5], [0.25]])

    def test_gzip(self, tmp_path):
        path = tmp_path / "d.csv.gz"
        with gzip.open(path, "wt") as fh:
            fh.write("1,2,a\n3,4,b\n")
        assert load_csv(path).n_samples == 2
        assert load_csv(path).name == "d"

    def test_missing_label_column(self, tmp_path):
        with pytest.raises(DatasetError, match="not in header"):
            load_csv(write(tmp_path, "x,y\n1,2\n"), "label")

    def test_missing_label_value(self, tmp_path):
        with pytest.raises(DatasetError, match=":2: missing label"):
            load_csv(write(tmp_path, "1,2,a\n3,4,\n"))

    def test_short_row(self, tmp_path):
        with pytest.raises(DatasetError, match=":2:"):
            load_csv(write(tmp_path, "1,2,a\n3,b\n"))

    def test_non_numeric_feature(self, tmp_path):
        with pytest.raises(DatasetError, match=":3: non-numeric"):
            load_csv(write(tmp_path, "1,2,a\n3,4,b\n5,x,a\n"))

    def test_no_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_csv(tmp_path / "nope.csv")

    def test_letter_shape(self):
        ds = load_csv(dataset_path("letter"), "letter")
        assert (ds.n_samples, ds.n_features, ds.class_count) == (20_000, 16, 26)


class TestLoadFeatures:
    def test_with_header(self, tmp_path):
        np.testing.assert_array_equal(load_features_csv(write(tmp_path, "a,b\n1,2\n3,4\n")), [[1, 2], [3, 4]])

    def test_bad_value(self, tmp_path):
        with pytest.raises(DatasetError, match=":2:"):
            load_features_csv(write(tmp_path, "1,2\nz,4\n"))


class TestNormalize:
    def make(self, cols):
        x = np.array(cols, dtype=float).T
        return Dataset(x, np.zeros(len(x), dtype=int), ("a",))

    def test_column(self):
        ds, stats = minmax_normalize(self.make([[0, 1, 2]]))
        np.testing.assert_array_equal(ds.features[:, 0], [0, 0.5, 1])
        assert stats.minimum[0] == 0 and stats.maximum[0] == 2

    def test_constant_column(self):
        ds, _ = minmax_normalize(self.make([[7, 7]]))
        np.testing.assert_array_equal(ds.features[:, 0], [0, 0])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_idempotent(self, seed):
        g = np.random.default_rng(seed)
        ds = self.make(g.normal(scale=100, size=(3, 10)))
        once, _ = minmax_normalize(ds)
        twice, _ = minmax_normalize(once)
        np.testing.assert_allclose(twice.features, once.features, atol=1e-12)
        assert once.features.min() >= 0 and once.features.max() <= 1


class TestSplits:
    def test_sizes(self):
        parts = split_indices(np.arange(1000), (0.10, 0.45, 0.45), 0)
        assert [len(p) for p in parts] == [100, 450, 450]

    def test_disjoint_and_complete(self):
        parts = split_indices(np.arange(101), (0.3, 0.7), 1)
        np.testing.assert_array_equal(np.sort(np.concatenate(parts)), np.arange(101))

    def test_deterministic(self):
        a = split_indices(np.arange(50), (0.5, 0.5), 9)
        b = split_indices(np.arange(50), (0.5, 0.5), 9)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_bad_fractions(self):
        with pytest.raises(DatasetError):
            split_indices(np.arange(10), (0.8, 0.8), 0)

    def test_stratified_proportions(self, rng):
        labels = np.repeat([0, 1, 2], [500, 301, 57])
        ds = Dataset(rng.uniform(size=(len(labels), 2)), labels, ("a", "b", "c"))
        train, test = split(ds, (0.8, 0.2), 3, stratified=True)
        for c, count in enumerate([500, 301, 57]):
            assert abs((train.labels == c).sum() - 0.8 * count) <= 1
            assert (train.labels == c).sum() + (test.labels == c).sum() == count

    def test_partition(self, rng):
        ds = gaussian_classes(rng, n_per_class=10)
        parts = partition_by_class(ds)
        assert [len(p) for p in parts] == [10, 10]

    def test_sample_without_replacement(self):
        s = sample_without_replacement(np.arange(10), 10, 0)
        np.testing.assert_array_equal(np.sort(s), np.arange(10))
        with pytest.raises(DatasetError):
            sample_without_replacement(np.arange(3), 4, 0)

    def test_select_classes(self, rng):
        labels = np.array([0, 1, 2, 2, 1])
        ds = Dataset(np.zeros((5, 1)), labels, ("a", "b", "c"))
        sub = ds.select_classes([2, 0])
        np.testing.assert_array_equal(sub.labels, [1, 0, 0])
        assert sub.class_names == ("c", "a")
