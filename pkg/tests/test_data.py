import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etaudit import (
    DataError,
    GroupPair,
    SplitSpec,
    TabularDataset,
    bootstrap_indices,
    load_csv,
    save_csv,
    split_three_way,
)
from etaudit.data import _part_sizes, split_indices


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        path = write(tmp_path, "x1,x2,z,y\n1,2,a,0\n3,4,b,1\n5,6,a,1\n7,8,b,0\n")
        ds = load_csv(path, target="y", protected="z")
        assert ds.n_rows == 4
        assert ds.feature_names == ("x1", "x2")
        assert np.array_equal(ds.X[:, 0], [1, 3, 5, 7])
        assert np.array_equal(ds.y, [0, 1, 1, 0])
        assert ds.group_labels() == ["a", "b"]

    def test_duplicate_header_rejected(self, tmp_path):
        path = write(tmp_path, "x1,x1,y\n1,2,0\n")
        with pytest.raises(DataError, match="x1"):
            load_csv(path, target="y")

    def test_three_labels_three_pairs(self, tmp_path):
        rows = "\n".join(f"{i},{lab}" for i, lab in enumerate(["White", "Black", "Asian"] * 8))
        path = write(tmp_path, "x1,z\n" + rows + "\n")
        ds = load_csv(path, protected="z")
        labels = ds.group_labels()
        assert len(labels) == 3
        pairs = ds.group_pairs()
        # oracle: combinatorial enumeration C(3, 2)
        assert len(pairs) == len(list(itertools.combinations(labels, 2))) == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(str(tmp_path / "nope.csv"))

    def test_missing_named_column(self, tmp_path):
        path = write(tmp_path, "x1,y\n1,0\n")
        with pytest.raises(DataError, match="protected column 'z'"):
            load_csv(path, target="y", protected="z")

    def test_non_numeric_target_cell_names_row_and_column(self, tmp_path):
        path = write(tmp_path, "x1,y\n1,0\n2,oops\n")
        with pytest.raises(DataError, match=r"row 3, column 'y'"):
            load_csv(path, target="y")

    def test_forced_numeric_column(self, tmp_path):
        path = write(tmp_path, "x1,y\n1,0\nbad,1\n")
        with pytest.raises(DataError, match=r"row 3, column 'x1'"):
            load_csv(path, target="y", numeric=["x1"])

    def test_missing_value_is_hard_error(self, tmp_path):
        path = write(tmp_path, "x1,y\n1,0\n,1\n")
        with pytest.raises(DataError, match="missing value"):
            load_csv(path, target="y")

    def test_categorical_encoding_persisted(self, tmp_path):
        path = write(tmp_path, "color,y\nred,0\nblue,1\nred,1\n")
        ds = load_csv(path, target="y")
        assert ds.encodings["color"] == {"blue": 0, "red": 1}
        assert np.array_equal(ds.X[:, 0], [1, 0, 1])

    def test_drop_columns(self, tmp_path):
        path = write(tmp_path, "x1,junk,y\n1,9,0\n2,8,1\n")
        ds = load_csv(path, target="y", drop=["junk"])
        assert ds.feature_names == ("x1",)

    def test_round_trip_15_digits(self, tmp_path):
        rng = np.random.default_rng(3)
        ds = TabularDataset(
            feature_names=("a", "b"),
            X=rng.standard_normal((20, 2)) * 1e3,
            y=rng.standard_normal(20),
            z=np.where(rng.random(20) < 0.5, "g0", "g1"),
            target="y",
            protected="z",
        )
        out = str(tmp_path / "round.csv")
        save_csv(ds, out)
        back = load_csv(out, target="y", protected="z")
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.y, ds.y)
        assert back.z.tolist() == ds.z.tolist()

    def test_categorical_round_trip(self, tmp_path):
        path = write(tmp_path, "color,y\nred,0\nblue,1\ngreen,1\nred,0\n")
        ds = load_csv(path, target="y")
        out = str(tmp_path / "round.csv")
        save_csv(ds, out)
        again = load_csv(out, target="y")
        assert np.array_equal(again.X, ds.X)
        assert again.encodings == ds.encodings


class TestDatasetInvariants:
    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            TabularDataset(feature_names=("a",), X=np.zeros((3, 1)), y=np.zeros(2), target="y")

    def test_duplicate_names_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            TabularDataset(feature_names=("a",), X=np.zeros((2, 1)), y=np.zeros(2), target="a")

    def test_nan_rejected(self):
        with pytest.raises(DataError, match="non-finite"):
            TabularDataset(feature_names=("a",), X=np.array([[np.nan], [0.0]]))


class TestGroupPairs:
    def make(self):
        z = np.array(["b", "a", "c", "a", "b", "c", "a", "b"], dtype=object)
        return TabularDataset(
            feature_names=("x",), X=np.arange(8.0)[:, None], z=z, protected="z"
        )

    def test_filter_recode_and_order(self):
        ds = self.make()
        sub = ds.filter_pair(GroupPair("a", "b"))
        assert sub.n_rows == 6
        # original row order preserved
        assert np.array_equal(sub.X[:, 0], [0, 1, 3, 4, 6, 7])
        assert sub.z.tolist() == ["1", "0", "0", "1", "0", "1"]
        assert set(sub.z.tolist()) == {"0", "1"}

    def test_filter_is_idempotent(self):
        ds = self.make()
        once = ds.filter_pair(GroupPair("a", "b"))
        twice = once.filter_pair(GroupPair("0", "1"))
        assert np.array_equal(once.X, twice.X)
        assert once.z.tolist() == twice.z.tolist()

    def test_same_label_rejected(self):
        with pytest.raises(DataError):
            GroupPair("a", "a")

    def test_absent_label_rejected(self):
        with pytest.raises(DataError, match="not present"):
            self.make().filter_pair(GroupPair("a", "zz"))


def oracle_sizes(n, fractions):
    """Independent floor-plus-largest-remainder reimplementation."""
    raw = [n * f for f in fractions]
    base = [int(np.floor(v)) for v in raw]
    rem = n - sum(base)
    order = sorted(range(3), key=lambda i: (-(raw[i] - base[i]), i))
    for k in range(rem):
        base[order[k % 3]] += 1
    return tuple(base)


class TestSplits:
    def make(self, n):
        return TabularDataset(feature_names=("x",), X=np.arange(float(n))[:, None])

    def test_nine_rows_equal_thirds(self):
        parts = split_three_way(self.make(9), SplitSpec(seed=7))
        assert [p.n_rows for p in parts] == [3, 3, 3]
        all_vals = np.sort(np.concatenate([p.X[:, 0] for p in parts]))
        assert np.array_equal(all_vals, np.arange(9.0))

    def test_determinism(self):
        a = split_three_way(self.make(30), SplitSpec(seed=5))
        b = split_three_way(self.make(30), SplitSpec(seed=5))
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.X, pb.X)

    def test_ten_rows_remainder_to_train(self):
        parts = split_three_way(self.make(10), SplitSpec(seed=0))
        assert [p.n_rows for p in parts] == [4, 3, 3]

    @pytest.mark.parametrize("n", range(9, 21))
    def test_sizes_match_remainder_oracle(self, n):
        sizes = _part_sizes(n, (1 / 3, 1 / 3, 1 / 3))
        assert sizes == oracle_sizes(n, (1 / 3, 1 / 3, 1 / 3))
        assert sum(sizes) == n

    def test_too_small_rejected(self):
        with pytest.raises(DataError):
            split_three_way(self.make(8), SplitSpec(seed=0))

    def test_tiny_fraction_rejected(self):
        with pytest.raises(DataError, match="too small"):
            split_three_way(self.make(9), SplitSpec(fractions=(0.98, 0.01, 0.01), seed=0))

    def test_bad_fractions_rejected(self):
        with pytest.raises(DataError):
            SplitSpec(fractions=(0.5, 0.5, 0.1))
        with pytest.raises(DataError):
            SplitSpec(fractions=(0.5, 0.5, 0.0))

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(min_value=9, max_value=400),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        w=st.tuples(
            st.integers(min_value=1, max_value=8),
            st.integers(min_value=1, max_value=8),
            st.integers(min_value=1, max_value=8),
        ),
    )
    def test_partition_property(self, n, seed, w):
        total = sum(w)
        fractions = tuple(v / total for v in w)
        try:
            tr, va, te = split_indices(n, SplitSpec(fractions=fractions, seed=seed))
        except DataError:
            return  # some fraction rounds to an empty part
        combined = np.concatenate([tr, va, te])
        assert len(combined) == n
        assert np.array_equal(np.sort(combined), np.arange(n))


class TestBootstrap:
    def test_shapes_and_determinism(self):
        runs = bootstrap_indices(5, 2, seed=0)
        assert len(runs) == 2
        for perm in runs:
            assert np.array_equal(np.sort(perm), np.arange(5))
        again = bootstrap_indices(5, 2, seed=0)
        for a, b in zip(runs, again):
            assert np.array_equal(a, b)

    def test_thirty_distinct_streams(self):
        runs = bootstrap_indices(200, 30, seed=1)
        assert len(runs) == 30
        seen = {tuple(p.tolist()) for p in runs}
        assert len(seen) == 30

    def test_preconditions(self):
        with pytest.raises(DataError):
            bootstrap_indices(0, 1, 0)
        with pytest.raises(DataError):
            bootstrap_indices(5, 0, 0)
