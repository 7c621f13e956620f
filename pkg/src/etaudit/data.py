"""Tabular data handling: CSV loading, column roles, splits and resampling.

A :class:`TabularDataset` is an immutable bundle of float64 feature columns,
an optional numeric target, an optional protected-group column (kept as
string labels), and optional extra diagnostic columns that are carried
around but never fed to models.  Splitting and resampling are pure
functions of (data, seed).
"""

import csv
import itertools
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError

_FRACTION_TOL = 1e-9


@dataclass(frozen=True)
class SplitSpec:
    """Three-way split fractions (train, val, test) plus the shuffle seed."""

    fractions: tuple = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    seed: int = 0

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        if len(fr) != 3:
            raise DataError("split fractions must have exactly three entries")
        if any(f <= 0 for f in fr):
            raise DataError("split fractions must all be > 0")
        if abs(sum(fr) - 1.0) > _FRACTION_TOL:
            raise DataError(f"split fractions must sum to 1, got {sum(fr)!r}")
        object.__setattr__(self, "fractions", fr)
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class GroupPair:
    """An ordered pair of protected-group labels; group_a is coded 0, group_b 1."""

    group_a: str
    group_b: str

    def __post_init__(self):
        if self.group_a == self.group_b:
            raise DataError("group pair must name two distinct labels")


@dataclass(frozen=True, eq=False)
class TabularDataset:
    """Feature matrix with named columns, optional target and protected column.

    Invariants enforced on construction: all columns share the same length,
    all names are unique, features are finite float64.  ``extras`` carries
    diagnostic columns (e.g. latent variables of synthetic generators) that
    are written to CSV but never used as model inputs.
    """

    feature_names: tuple
    X: np.ndarray
    y: np.ndarray = None
    z: np.ndarray = None
    target: str = None
    protected: str = None
    extras: dict = field(default_factory=dict)
    encodings: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if X.shape[1] != len(self.feature_names):
            raise DataError(
                f"{len(self.feature_names)} feature names for {X.shape[1]} columns"
            )
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        n = X.shape[0]
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.float64)
            if y.shape != (n,):
                raise DataError("target length does not match feature rows")
            if not np.all(np.isfinite(y)):
                raise DataError("target contains non-finite values")
            object.__setattr__(self, "y", y)
        if self.z is not None:
            z = np.asarray([str(v) for v in self.z], dtype=object)
            if z.shape != (n,):
                raise DataError("protected column length does not match feature rows")
            object.__setattr__(self, "z", z)
        names = list(self.feature_names)
        if self.target is not None:
            names.append(self.target)
        if self.protected is not None:
            names.append(self.protected)
        names.extend(self.extras)
        dupes = {c for c in names if names.count(c) > 1}
        if dupes:
            raise DataError(f"duplicate column names: {sorted(dupes)}")
        for name, col in self.extras.items():
            if len(col) != n:
                raise DataError(f"extra column {name!r} has wrong length")

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def group_labels(self):
        """Sorted distinct labels of the protected column."""
        if self.z is None:
            raise DataError("dataset has no protected column")
        return sorted(set(self.z.tolist()))

    def group_pairs(self):
        """All unordered label pairs, as ordered GroupPairs in sorted order."""
        return [GroupPair(a, b) for a, b in itertools.combinations(self.group_labels(), 2)]

    def take(self, indices):
        """Row subset in the given index order."""
        idx = np.asarray(indices, dtype=np.intp)
        return replace(
            self,
            X=self.X[idx],
            y=None if self.y is None else self.y[idx],
            z=None if self.z is None else self.z[idx],
            extras={k: np.asarray(v)[idx] for k, v in self.extras.items()},
        )

    def filter_pair(self, pair):
        """Rows belonging to the pair, protected labels recoded to "0"/"1".

        group_a maps to "0" and group_b to "1"; row order is preserved, so
        applying the same recode twice is the identity.
        """
        if self.z is None:
            raise DataError("dataset has no protected column")
        labels = set(self.group_labels())
        for g in (pair.group_a, pair.group_b):
            if g not in labels:
                raise DataError(f"protected label {g!r} not present in data")
        mask = (self.z == pair.group_a) | (self.z == pair.group_b)
        sub = self.take(np.nonzero(mask)[0])
        recoded = np.where(sub.z == pair.group_b, "1", "0").astype(object)
        return replace(sub, z=recoded)

    def z01(self):
        """Protected labels as a 0/1 integer vector (requires recoded labels)."""
        if self.z is None:
            raise DataError("dataset has no protected column")
        if not set(self.z.tolist()) <= {"0", "1"}:
            raise DataError("protected labels are not binary; filter by a GroupPair first")
        return (self.z == "1").astype(np.int64)


def _part_sizes(n, fractions):
    """Floor each fraction, then hand out the remainder by largest fractional
    part; ties go to train, then val, then test."""
    raw = [n * f for f in fractions]
    base = [int(np.floor(r)) for r in raw]
    leftover = n - sum(base)
    order = sorted(range(3), key=lambda i: (-(raw[i] - base[i]), i))
    for i in range(leftover):
        base[order[i % 3]] += 1
    return tuple(base)


def split_indices(n, spec):
    """Shuffled (train, val, test) index arrays; disjoint and covering."""
    sizes = _part_sizes(n, spec.fractions)
    if any(s == 0 for s in sizes):
        raise DataError(
            f"dataset with {n} rows is too small for fractions {spec.fractions}"
        )
    perm = np.random.default_rng(spec.seed).permutation(n)
    return _chunk_permutation(perm, spec.fractions)


def _chunk_permutation(perm, fractions):
    n = len(perm)
    sizes = _part_sizes(n, fractions)
    if any(s == 0 for s in sizes):
        raise DataError(f"{n} rows is too small for fractions {tuple(fractions)}")
    a, b = sizes[0], sizes[0] + sizes[1]
    return perm[:a], perm[a:b], perm[b:]


def split_three_way(data, spec):
    """Deterministic three-way row partition of a dataset.

    The shuffle is driven solely by ``spec.seed``; remainder rows after
    flooring go to train, then val, then test.
    """
    if data.n_rows < 9:
        raise DataError("three-way split requires at least 9 rows")
    tr, va, te = split_indices(data.n_rows, spec)
    return data.take(tr), data.take(va), data.take(te)


def bootstrap_indices(n, runs, seed):
    """Independent reshuffle permutations of range(n), one per run.

    Run seeds are derived from the master seed, so the sequence is
    reproducible and each run is statistically independent.
    """
    if n < 1:
        raise DataError("n must be >= 1")
    if runs < 1:
        raise DataError("runs must be >= 1")
    streams = np.random.SeedSequence(int(seed)).spawn(runs)
    return [np.random.default_rng(s).permutation(n) for s in streams]


def _parse_float(cell):
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, target=None, protected=None, drop=(), numeric=()):
    """Load an RFC-4180 CSV with a header row into a TabularDataset.

    Columns whose cells all parse as floats become numeric features; other
    columns are integer-encoded in sorted label order and the label
    dictionary is kept on the dataset.  The protected column stays as raw
    labels.  Missing values and non-numeric cells in the target (or any
    column listed in ``numeric``) are hard errors that name the row and
    column.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = [row for row in reader if row]

    header = [h.strip() for h in header]
    dupes = {c for c in header if header.count(c) > 1}
    if dupes:
        raise DataError(f"{path}: duplicate header column {sorted(dupes)}")
    for role, name in (("target", target), ("protected", protected)):
        if name is not None and name not in header:
            raise DataError(f"{path}: {role} column {name!r} not in header")
    for name in list(drop) + list(numeric):
        if name not in header:
            raise DataError(f"{path}: column {name!r} not in header")

    ncol = len(header)
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {ncol}")

    columns = {}
    for j, name in enumerate(header):
        columns[name] = [rows[i][j].strip() for i in range(len(rows))]
    for name, cells in columns.items():
        for i, cell in enumerate(cells):
            if cell == "":
                raise DataError(f"{path}: missing value at row {i + 2}, column {name!r}")

    must_be_numeric = set(numeric)
    if target is not None:
        must_be_numeric.add(target)

    feature_names = []
    feature_cols = []
    encodings = {}
    y = None
    z = None
    for name in header:
        cells = columns[name]
        if name in drop:
            continue
        if name == protected:
            z = np.asarray(cells, dtype=object)
            continue
        values = [_parse_float(c) for c in cells]
        bad = next((i for i, v in enumerate(values) if v is None), None)
        if bad is not None and name in must_be_numeric:
            raise DataError(
                f"{path}: non-numeric cell {cells[bad]!r} at row {bad + 2}, column {name!r}"
            )
        if bad is None:
            col = np.asarray(values, dtype=np.float64)
        else:
            labels = sorted(set(cells))
            mapping = {lab: float(k) for k, lab in enumerate(labels)}
            encodings[name] = {lab: int(k) for k, lab in enumerate(labels)}
            col = np.asarray([mapping[c] for c in cells], dtype=np.float64)
        if name == target:
            y = col
        else:
            feature_names.append(name)
            feature_cols.append(col)

    if not feature_cols:
        raise DataError(f"{path}: no feature columns left after applying roles")
    X = np.column_stack(feature_cols)
    return TabularDataset(
        feature_names=tuple(feature_names),
        X=X,
        y=y,
        z=z,
        target=target,
        protected=protected,
        encodings=encodings,
    )


def save_csv(data, path):
    """Write a dataset back to CSV: features, extras, then target and protected.

    Float cells use 17 significant digits, so load -> save -> load round-trips
    float64 values exactly; encoded categorical features are written back as
    their original labels.
    """
    header = list(data.feature_names)
    decoders = {}
    for name, mapping in data.encodings.items():
        decoders[name] = {code: lab for lab, code in mapping.items()}
    header.extend(data.extras)
    if data.target is not None:
        header.append(data.target)
    if data.protected is not None:
        header.append(data.protected)

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n_rows):
            row = []
            for j, name in enumerate(data.feature_names):
                v = data.X[i, j]
                if name in decoders:
                    row.append(decoders[name][int(v)])
                else:
                    row.append(format(v, ".17g"))
            for name in data.extras:
                row.append(format(float(data.extras[name][i]), ".17g"))
            if data.target is not None:
                row.append(format(data.y[i], ".17g"))
            if data.protected is not None:
                row.append(data.z[i])
            writer.writerow(row)
