"""Weight-aware weak learners: decision stumps, single randomized trees,
and weighted k-nearest-neighbour voting.

All learners consume a per-instance weight vector (nonnegative, summing
to 1) and are deterministic given their inputs and seed.
"""

from __future__ import annotations

import math

import numpy as np


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def validate_weights(w, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {w.shape}")
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    return w


def _weighted_class_mass(y, w, n_classes):
    return np.bincount(y, weights=w, minlength=n_classes)


def _weighted_gini(mass: np.ndarray) -> float:
    total = mass.sum()
    if total <= 0:
        return 0.0
    p = mass / total
    return float(1.0 - p @ p)


class DecisionStump:
    """Single axis threshold; rows with x[feature] <= threshold go left."""

    kind = "stump"

    def __init__(self, feature: int, threshold: float, left: int, right: int):
        if not math.isfinite(threshold):
            raise ValueError("stump threshold must be finite")
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.where(X[:, self.feature] <= self.threshold, self.left, self.right)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionStump":
        return cls(int(doc["feature"]), float(doc["threshold"]), int(doc["left"]), int(doc["right"]))


def train_stump(X, y, w) -> DecisionStump:
    """Exhaustive search over (feature, midpoint) splits.

    Minimizes weighted misclassification with weighted-majority leaves.
    Ties keep the lowest feature index, then the lowest threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    w = validate_weights(w, n)
    n_classes = int(y.max()) + 1
    total_mass = _weighted_class_mass(y, w, n_classes)
    majority = int(np.argmax(total_mass))
    best_err = float(total_mass.sum() - total_mass.max())
    best = DecisionStump(0, 0.0, majority, majority)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    weighted = onehot * w[:, None]
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        vals = X[order, f]
        cum = np.cumsum(weighted[order], axis=0)
        cuts = np.flatnonzero(vals[:-1] < vals[1:])
        if cuts.size == 0:
            continue
        left = cum[cuts]
        right = total_mass[None, :] - left
        err = (left.sum(axis=1) - left.max(axis=1)) + (right.sum(axis=1) - right.max(axis=1))
        b = int(np.argmin(err))
        if err[b] < best_err - 1e-15:
            thr = float((vals[cuts[b]] + vals[cuts[b] + 1]) / 2.0)
            best_err = float(err[b])
            best = DecisionStump(
                f, thr, int(np.argmax(left[b])), int(np.argmax(right[b]))
            )
    return best


class RandomTree:
    """Recursive splitter with randomized (feature, threshold) candidates."""

    kind = "random_tree"

    def __init__(self, root: dict, max_depth: int):
        self.root = root
        self.max_depth = max_depth

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.empty(X.shape[0], dtype=np.int64)
        self._route(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _route(self, node, X, idx, out):
        if "leaf" in node:
            out[idx] = node["leaf"]
            return
        mask = X[idx, node["feature"]] <= node["threshold"]
        self._route(node["left"], X, idx[mask], out)
        self._route(node["right"], X, idx[~mask], out)

    def depth(self) -> int:
        def walk(node):
            if "leaf" in node:
                return 0
            return 1 + max(walk(node["left"]), walk(node["right"]))

        return walk(self.root)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "max_depth": self.max_depth, "root": self.root}

    @classmethod
    def from_dict(cls, doc: dict) -> "RandomTree":
        return cls(doc["root"], int(doc["max_depth"]))


def train_random_tree(X, y, w, max_depth: int = 4, k_candidates: int | None = None,
                      seed=0) -> RandomTree:
    """Grow a tree by drawing k random (feature, threshold) pairs per node
    and keeping the one with the lowest weighted child impurity.

    Stops on pure nodes, nodes below 2 instances, or at max_depth.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    w = validate_weights(w, n)
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if k_candidates is None:
        k_candidates = int(math.ceil(math.sqrt(d)))
    if k_candidates < 1:
        raise ValueError("k_candidates must be >= 1")
    rng = np.random.default_rng(seed)
    n_classes = int(y.max()) + 1

    def leaf(idx):
        mass = _weighted_class_mass(y[idx], w[idx], n_classes)
        return {"leaf": int(np.argmax(mass))}

    def build(idx, depth):
        if depth >= max_depth or idx.size < 2 or np.all(y[idx] == y[idx[0]]):
            return leaf(idx)
        best = None
        best_score = math.inf
        for _ in range(k_candidates):
            f = int(rng.integers(d))
            col = X[idx, f]
            lo, hi = float(col.min()), float(col.max())
            if lo == hi:
                continue
            thr = float(rng.uniform(lo, hi))
            mask = col <= thr
            if not mask.any() or mask.all():
                continue
            left_mass = _weighted_class_mass(y[idx[mask]], w[idx[mask]], n_classes)
            right_mass = _weighted_class_mass(y[idx[~mask]], w[idx[~mask]], n_classes)
            score = (left_mass.sum() * _weighted_gini(left_mass)
                     + right_mass.sum() * _weighted_gini(right_mass))
            if score < best_score:
                best_score = score
                best = (f, thr, mask)
        if best is None:
            return leaf(idx)
        f, thr, mask = best
        return {
            "feature": f,
            "threshold": thr,
            "left": build(idx[mask], depth + 1),
            "right": build(idx[~mask], depth + 1),
        }

    return RandomTree(build(np.arange(n), 0), max_depth)


class KnnHypothesis:
    """Weighted-vote k-NN over a fixed reference set."""

    kind = "knn"

    def __init__(self, refs, labels, weights, k: int):
        self.refs = np.asarray(refs, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.weights = validate_weights(weights, self.refs.shape[0])
        if not 1 <= k <= self.refs.shape[0]:
            raise ValueError(f"k must be in [1, {self.refs.shape[0]}], got {k}")
        self.k = k

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        d2 = (
            np.einsum("ij,ij->i", X, X)[:, None]
            - 2.0 * X @ self.refs.T
            + np.einsum("ij,ij->i", self.refs, self.refs)[None, :]
        )
        n_classes = int(self.labels.max()) + 1
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        votes = np.zeros((X.shape[0], n_classes))
        rows = np.repeat(np.arange(X.shape[0]), self.k)
        np.add.at(votes, (rows, self.labels[nearest].ravel()),
                  self.weights[nearest].ravel())
        return np.argmax(votes, axis=1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "refs": self.refs.tolist(),
            "labels": self.labels.tolist(),
            "weights": self.weights.tolist(),
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KnnHypothesis":
        return cls(doc["refs"], doc["labels"], doc["weights"], int(doc["k"]))


def knn_predict(refs, labels, ref_weights, x, k: int) -> int:
    """Class with the largest summed reference weight among the k nearest.

    Distance ties prefer the lower reference index; vote ties the lower
    class id.
    """
    return int(KnnHypothesis(refs, labels, ref_weights, k).predict(np.atleast_2d(x))[0])


def weighted_error(hypothesis, X, y, w) -> float:
    """Total weight on the rows the hypothesis misclassifies."""
    y = np.asarray(y, dtype=np.int64)
    w = validate_weights(w, y.shape[0])
    return float(w[hypothesis.predict(X) != y].sum())


_HYPOTHESIS_KINDS = {
    DecisionStump.kind: DecisionStump,
    RandomTree.kind: RandomTree,
    KnnHypothesis.kind: KnnHypothesis,
}


def hypothesis_from_dict(doc: dict):
    try:
        cls = _HYPOTHESIS_KINDS[doc["kind"]]
    except KeyError:
        raise ValueError(f"unknown hypothesis kind {doc.get('kind')!r}") from None
    return cls.from_dict(doc)
