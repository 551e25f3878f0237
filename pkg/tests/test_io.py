import numpy as np
import pytest

from precis.errors import DimensionMismatch
from precis.io import (
    file_digest,
    read_dataset_csv,
    read_matrix_csv,
    read_vector_csv,
    write_dataset_csv,
    write_matrix_csv,
    write_vector_csv,
)
from precis.rng import as_generator, child_seed, substream


class TestMatrixCsv:
    def test_round_trip_12_digits(self, tmp_path):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((5, 5))
        path = tmp_path / "m.csv"
        write_matrix_csv(path, m)
        back = read_matrix_csv(path)
        assert np.abs(back - m).max() < 1e-11 * np.abs(m).max()

    def test_rejects_non_square(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2,3\n4,5,6\n")
        with pytest.raises(DimensionMismatch):
            read_matrix_csv(path)

    def test_one_by_one(self, tmp_path):
        path = tmp_path / "one.csv"
        write_matrix_csv(path, np.array([[3.5]]))
        np.testing.assert_array_equal(read_matrix_csv(path), [[3.5]])


class TestDatasetCsv:
    def test_header_detected(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, np.arange(6.0).reshape(2, 3), header=["a", "b", "c"])
        data, header = read_dataset_csv(path)
        assert header == ["a", "b", "c"]
        np.testing.assert_array_equal(data, np.arange(6.0).reshape(2, 3))

    def test_headerless(self, tmp_path):
        path = tmp_path / "d.csv"
        write_dataset_csv(path, np.ones((3, 2)))
        data, header = read_dataset_csv(path)
        assert header is None
        assert data.shape == (3, 2)

    def test_ragged_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(DimensionMismatch):
            read_dataset_csv(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError):
            read_dataset_csv(path)


class TestVectorCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "v.csv"
        write_vector_csv(path, np.array([1.5, 2.5, 1e-10]))
        np.testing.assert_allclose(read_vector_csv(path), [1.5, 2.5, 1e-10])

    def test_single_value(self, tmp_path):
        path = tmp_path / "v.csv"
        write_vector_csv(path, np.array([0.25]))
        v = read_vector_csv(path)
        assert v.shape == (1,)


class TestDigest:
    def test_stable_and_sensitive(self, tmp_path):
        path = tmp_path / "f.txt"
        path.write_text("hello")
        d1 = file_digest(path)
        assert d1 == file_digest(path)
        path.write_text("hello!")
        assert file_digest(path) != d1


class TestSubstreams:
    def test_same_path_same_stream(self):
        a = substream(42, 1, 2).standard_normal(5)
        b = substream(42, 1, 2).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_different_paths_differ(self):
        a = substream(42, 1, 2).standard_normal(5)
        b = substream(42, 2, 1).standard_normal(5)
        c = substream(42, 1).standard_normal(5)
        assert np.abs(a - b).max() > 0
        assert np.abs(a - c).max() > 0

    def test_child_seed_deterministic(self):
        assert child_seed(7, 1, 2) == child_seed(7, 1, 2)
        assert child_seed(7, 1, 2) != child_seed(7, 2, 1)
        assert 0 <= child_seed(7, 1, 2) < 2**64

    def test_as_generator_passthrough(self):
        gen = np.random.default_rng(3)
        assert as_generator(gen) is gen
        np.testing.assert_array_equal(
            as_generator(3).standard_normal(4), np.random.default_rng(3).standard_normal(4)
        )
