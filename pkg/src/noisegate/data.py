"""Dataset parsing, label encoding, min-max scaling, and partitioning."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class ParseError(ValueError):
    """Malformed input data. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled feature matrix with an integer-encoded label vocabulary.

    ``features`` is an (n, d) CSR matrix; rows are instances. ``labels``
    holds class ids in [0, K) and ``label_names[id]`` is the original token.
    Instances are immutable after construction and safe to share across
    threads.
    """

    features: sp.csr_matrix
    labels: np.ndarray
    label_names: list[str]

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("labels length does not match instance count")
        if len(set(self.label_names)) != len(self.label_names):
            raise ValueError("duplicate label names")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.K):
            raise ValueError("label id outside [0, K)")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def K(self) -> int:
        return len(self.label_names)

    @classmethod
    def from_arrays(cls, features, labels, label_names=None) -> "Dataset":
        """Build a Dataset from dense or sparse features and integer labels."""
        labels = np.asarray(labels, dtype=np.int64)
        if label_names is None:
            k = int(labels.max()) + 1 if labels.size else 0
            label_names = [str(i) for i in range(k)]
        mat = sp.csr_matrix(np.asarray(features, dtype=np.float64)
                            if not sp.issparse(features) else features,
                            dtype=np.float64)
        return cls(mat, labels, list(label_names))

    def rows(self, indices) -> np.ndarray:
        """Materialize the selected rows as a dense float array."""
        return np.asarray(self.features[np.asarray(indices, dtype=np.int64)].todense())

    def equals(self, other: "Dataset") -> bool:
        return (
            self.features.shape == other.features.shape
            and self.label_names == other.label_names
            and np.array_equal(self.labels, other.labels)
            and (self.features != other.features).nnz == 0
        )


@dataclass(frozen=True)
class Partition:
    """A slice of a parent Dataset: unique row indices plus an ordinal id."""

    indices: np.ndarray
    partition_id: int

    def __post_init__(self):
        if len(np.unique(self.indices)) != len(self.indices):
            raise ValueError("partition indices must be unique")

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class ScalingSpec:
    """Per-column (min, max) observed on training data."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        if self.mins.shape != self.maxs.shape:
            raise ValueError("mins/maxs shape mismatch")
        if (self.mins > self.maxs).any():
            raise ValueError("column min exceeds max")

    @classmethod
    def identity(cls, d: int) -> "ScalingSpec":
        return cls(np.zeros(d), np.ones(d))


def _iter_lines(text):
    if isinstance(text, str):
        return io.StringIO(text)
    return text


def parse_libsvm(text) -> Dataset:
    """Parse sparse `<label> <idx>:<val> ...` lines into a Dataset.

    Feature indices are 1-based and must be strictly increasing per line;
    labels are encoded in first-appearance order. Empty lines are skipped.
    """
    vocab: dict[str, int] = {}
    labels: list[int] = []
    row_ind: list[int] = []
    col_ind: list[int] = []
    values: list[float] = []
    d = 0
    n = 0
    for lineno, raw in enumerate(_iter_lines(text), start=1):
        parts = raw.split()
        if not parts:
            continue
        token = parts[0]
        if ":" in token:
            raise ParseError("missing label before feature pairs", lineno)
        prev = 0
        for chunk in parts[1:]:
            idx_str, sep, val_str = chunk.partition(":")
            if not sep:
                raise ParseError(f"expected index:value pair, got {chunk!r}", lineno)
            try:
                idx = int(idx_str)
            except ValueError:
                raise ParseError(f"non-integer feature index {idx_str!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"feature index must be >= 1, got {idx}", lineno)
            if idx <= prev:
                raise ParseError("feature indices not strictly increasing", lineno)
            try:
                val = float(val_str)
            except ValueError:
                raise ParseError(f"non-numeric value {val_str!r}", lineno) from None
            row_ind.append(n)
            col_ind.append(idx - 1)
            values.append(val)
            prev = idx
        labels.append(vocab.setdefault(token, len(vocab)))
        d = max(d, prev)
        n += 1
    if n == 0:
        raise ParseError("no instances")
    mat = sp.coo_matrix((values, (row_ind, col_ind)), shape=(n, d), dtype=np.float64)
    return Dataset(mat.tocsr(), np.asarray(labels, dtype=np.int64), list(vocab))


def dump_libsvm(data: Dataset) -> str:
    """Serialize a Dataset back to sparse text; inverse of parse_libsvm."""
    out = []
    mat = data.features
    for i in range(data.n):
        start, end = mat.indptr[i], mat.indptr[i + 1]
        pairs = " ".join(
            f"{j + 1}:{float(v)!r}" for j, v in zip(mat.indices[start:end], mat.data[start:end])
        )
        token = data.label_names[data.labels[i]]
        out.append(f"{token} {pairs}".rstrip())
    return "\n".join(out) + "\n"


def parse_csv(text, label_column: int) -> Dataset:
    """Parse a rectangular numeric CSV whose label column may be any token.

    ``label_column`` is 0-based; negative values index from the right
    (-1 = last column).
    """
    import csv as _csv

    vocab: dict[str, int] = {}
    labels: list[int] = []
    rows: list[list[float]] = []
    width = None
    col = label_column
    for lineno, record in enumerate(_csv.reader(_iter_lines(text)), start=1):
        if not record:
            continue
        if width is None:
            width = len(record)
            if width < 2:
                raise ParseError("need at least one feature column and a label column", lineno)
            col = label_column if label_column >= 0 else width + label_column
            if col < 0 or col >= width:
                raise ValueError(f"label column {label_column} out of range for {width} columns")
        elif len(record) != width:
            raise ParseError(f"ragged row: expected {width} fields, got {len(record)}", lineno)
        feat = []
        for j, cell in enumerate(record):
            if j == col:
                labels.append(vocab.setdefault(cell.strip(), len(vocab)))
                continue
            try:
                feat.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r} in column {j}", lineno) from None
        rows.append(feat)
    if not rows:
        raise ParseError("no instances")
    mat = sp.csr_matrix(np.asarray(rows, dtype=np.float64))
    return Dataset(mat, np.asarray(labels, dtype=np.int64), list(vocab))


def min_max_scale(train: Dataset) -> tuple[Dataset, ScalingSpec]:
    """Fit per-column [0,1] scaling on train and return the scaled copy."""
    mins = np.asarray(train.features.min(axis=0).todense()).ravel()
    maxs = np.asarray(train.features.max(axis=0).todense()).ravel()
    spec = ScalingSpec(mins, maxs)
    return apply_scale(spec, train), spec


def apply_scale(spec: ScalingSpec, data: Dataset) -> Dataset:
    """Map features through the fitted (min, max) ranges, clamping to [0,1].

    Columns that were constant at fit time map to 0.
    """
    if data.d != spec.mins.shape[0]:
        raise ValueError(f"dataset has {data.d} columns, scaling spec has {spec.mins.shape[0]}")
    dense = np.asarray(data.features.todense())
    span = spec.maxs - spec.mins
    nonconst = span > 0
    scaled = np.zeros_like(dense)
    scaled[:, nonconst] = (dense[:, nonconst] - spec.mins[nonconst]) / span[nonconst]
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return Dataset(sp.csr_matrix(scaled), data.labels, list(data.label_names))


def partition(data: Dataset, M: int, seed: int) -> list[Partition]:
    """Shuffle [0, n) with the seed and cut into M near-equal partitions.

    Sizes differ by at most one; the result is deterministic for fixed
    (seed, n, M).
    """
    if M < 1:
        raise ValueError("partition count must be >= 1")
    if M > data.n:
        raise ValueError(f"cannot cut {data.n} instances into {M} partitions")
    perm = np.random.default_rng(seed).permutation(data.n)
    return [
        Partition(np.sort(chunk), i)
        for i, chunk in enumerate(np.array_split(perm, M))
    ]


def dataset_stats(data: Dataset) -> dict:
    """Summary suitable for JSON dumping: {n, d, K, class_histogram}."""
    counts = np.bincount(data.labels, minlength=data.K)
    return {
        "n": data.n,
        "d": data.d,
        "K": data.K,
        "class_histogram": {name: int(c) for name, c in zip(data.label_names, counts)},
    }
