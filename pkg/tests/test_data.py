import numpy as np
import pytest

from noisegate.data import (
    Dataset,
    ParseError,
    ScalingSpec,
    apply_scale,
    dataset_stats,
    dump_libsvm,
    min_max_scale,
    parse_csv,
    parse_libsvm,
    partition,
)


class TestParseLibsvm:
    def test_basic(self):
        ds = parse_libsvm("+1 1:0.5 3:2.0\n-1 2:1.0")
        assert (ds.n, ds.d, ds.K) == (2, 3, 2)
        dense = np.asarray(ds.features.todense())
        assert np.array_equal(dense, [[0.5, 0.0, 2.0], [0.0, 1.0, 0.0]])
        assert ds.label_names == ["+1", "-1"]
        assert list(ds.labels) == [0, 1]

    def test_empty_stream(self):
        with pytest.raises(ParseError, match="no instances"):
            parse_libsvm("")

    def test_non_increasing_indices(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_libsvm("1 2:1 1:1")

    def test_duplicate_index_rejected(self):
        with pytest.raises(ParseError, match="strictly increasing"):
            parse_libsvm("1 2:1 2:3")

    def test_non_numeric_value(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_libsvm("1 1:1\n1 1:abc")

    def test_bad_pair(self):
        with pytest.raises(ParseError):
            parse_libsvm("1 notapair")

    def test_empty_lines_skipped(self):
        ds = parse_libsvm("\n1 1:1\n\n2 1:2\n\n")
        assert ds.n == 2

    def test_label_only_line_is_zero_row(self):
        ds = parse_libsvm("a 2:1\nb")
        assert ds.n == 2
        assert ds.features[1].nnz == 0

    def test_first_appearance_label_order(self):
        ds = parse_libsvm("z 1:1\na 1:1\nz 1:1")
        assert ds.label_names == ["z", "a"]
        assert list(ds.labels) == [0, 1, 0]

    def test_file_like_stream(self, tmp_path):
        p = tmp_path / "d.svm"
        p.write_text("1 1:1\n2 2:1\n")
        with open(p) as fh:
            assert parse_libsvm(fh).n == 2


class TestRoundTrip:
    def test_parse_dump_parse_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(1, 30))
            d = int(rng.integers(1, 12))
            lines = []
            for i in range(n):
                cols = np.sort(rng.choice(d, size=rng.integers(0, d + 1), replace=False))
                pairs = " ".join(f"{c + 1}:{rng.normal():.6g}" for c in cols)
                lines.append(f"c{rng.integers(0, 3)} {pairs}".rstrip())
            ds = parse_libsvm("\n".join(lines))
            again = parse_libsvm(dump_libsvm(ds))
            assert ds.equals(again)


class TestParseCsv:
    def test_basic(self):
        ds = parse_csv("1.0,2.0,a\n3.0,4.0,b", label_column=2)
        assert (ds.n, ds.d, ds.K) == (2, 2, 2)
        assert np.array_equal(np.asarray(ds.features.todense()), [[1, 2], [3, 4]])

    def test_single_class_accepted(self):
        ds = parse_csv("1.0,a\n2.0,a", label_column=1)
        assert ds.K == 1

    def test_ragged_row(self):
        with pytest.raises(ParseError, match="ragged"):
            parse_csv("1.0,2.0\n3.0", label_column=1)

    def test_label_column_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            parse_csv("1.0,2.0,a", label_column=7)

    def test_negative_label_column_counts_from_right(self):
        ds = parse_csv("1.0,x\n2.0,y", label_column=-1)
        assert ds.label_names == ["x", "y"]

    def test_non_numeric_feature(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_csv("1.0,a\noops,a", label_column=1)


class TestScaling:
    def test_maps_to_unit_interval(self):
        ds = Dataset.from_arrays([[0.0], [5.0], [10.0]], [0, 0, 1])
        scaled, spec = min_max_scale(ds)
        assert np.allclose(np.asarray(scaled.features.todense()).ravel(), [0, 0.5, 1])
        assert spec.mins[0] == 0 and spec.maxs[0] == 10

    def test_constant_column_maps_to_zero(self):
        ds = Dataset.from_arrays([[3.0], [3.0], [3.0]], [0, 0, 0])
        scaled, _ = min_max_scale(ds)
        assert np.all(np.asarray(scaled.features.todense()) == 0)

    def test_apply_clamps_out_of_range(self):
        spec = ScalingSpec(np.array([0.0]), np.array([10.0]))
        out = apply_scale(spec, Dataset.from_arrays([[12.0], [-2.0]], [0, 0]))
        assert np.array_equal(np.asarray(out.features.todense()).ravel(), [1.0, 0.0])

    def test_idempotent_on_own_output(self):
        rng = np.random.default_rng(11)
        ds = Dataset.from_arrays(rng.normal(size=(20, 4)) * 7, rng.integers(0, 2, 20))
        scaled, _ = min_max_scale(ds)
        rescaled, spec2 = min_max_scale(scaled)
        # a spec refit on already-scaled data is the identity
        assert np.allclose(spec2.mins, 0) and np.allclose(spec2.maxs, 1)
        assert rescaled.equals(scaled)

    def test_dimension_mismatch(self):
        spec = ScalingSpec(np.zeros(3), np.ones(3))
        with pytest.raises(ValueError, match="columns"):
            apply_scale(spec, Dataset.from_arrays([[1.0]], [0]))


class TestPartition:
    def test_two_halves(self):
        ds = Dataset.from_arrays(np.zeros((10, 1)), np.zeros(10, dtype=int))
        parts = partition(ds, 2, seed=5)
        assert [p.size for p in parts] == [5, 5]
        union = np.concatenate([p.indices for p in parts])
        assert sorted(union) == list(range(10))

    def test_sizes_differ_by_at_most_one(self):
        ds = Dataset.from_arrays(np.zeros((10, 1)), np.zeros(10, dtype=int))
        assert [p.size for p in partition(ds, 3, seed=0)] == [4, 3, 3]

    def test_singletons(self):
        ds = Dataset.from_arrays(np.zeros((5, 1)), np.zeros(5, dtype=int))
        parts = partition(ds, 5, seed=1)
        assert all(p.size == 1 for p in parts)

    def test_too_many_partitions(self):
        ds = Dataset.from_arrays(np.zeros((3, 1)), np.zeros(3, dtype=int))
        with pytest.raises(ValueError):
            partition(ds, 4, seed=0)

    def test_deterministic(self):
        ds = Dataset.from_arrays(np.zeros((17, 1)), np.zeros(17, dtype=int))
        a = partition(ds, 4, seed=9)
        b = partition(ds, 4, seed=9)
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.indices, pb.indices)

    def test_disjoint_cover_property(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(1, 200))
            M = int(rng.integers(1, n + 1))
            ds = Dataset.from_arrays(np.zeros((n, 1)), np.zeros(n, dtype=int))
            parts = partition(ds, M, seed=int(rng.integers(0, 2**31)))
            union = np.concatenate([p.indices for p in parts])
            assert len(union) == n
            assert np.array_equal(np.sort(union), np.arange(n))
            sizes = [p.size for p in parts]
            assert max(sizes) - min(sizes) <= 1


def test_dataset_stats():
    ds = parse_libsvm("a 1:1\nb 1:2\na 1:3")
    assert dataset_stats(ds) == {
        "n": 3,
        "d": 1,
        "K": 2,
        "class_histogram": {"a": 2, "b": 1},
    }


def test_dataset_invariants():
    with pytest.raises(ValueError, match="duplicate"):
        Dataset.from_arrays(np.zeros((2, 1)), [0, 1], ["x", "x"])
    with pytest.raises(ValueError, match="length"):
        Dataset.from_arrays(np.zeros((2, 1)), [0], ["x"])
    with pytest.raises(ValueError, match="outside"):
        Dataset.from_arrays(np.zeros((2, 1)), [0, 5], ["x", "y"])
