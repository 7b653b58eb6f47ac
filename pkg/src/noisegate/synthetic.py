"""Generators for the synthetic constructions used in tests and demos.

All generators are deterministic for a given seed and return Dataset
objects; write them out with data.dump_libsvm when a file is needed.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset


def ring_noise_dataset(
    n: int = 100,
    noise_fraction: float = 0.1,
    n_classes: int = 2,
    radius: float = 10.0,
    seed: int = 0,
) -> Dataset:
    """Single dominant class around the origin plus far ring points whose
    labels are drawn uniformly over all classes."""
    rng = np.random.default_rng(seed)
    n_out = int(round(n * noise_fraction))
    n_in = n - n_out
    inliers = rng.normal(size=(n_in, 2))
    ang = rng.uniform(0, 2 * np.pi, size=n_out)
    outliers = radius * np.c_[np.cos(ang), np.sin(ang)]
    X = np.vstack([inliers, outliers])
    y = np.concatenate(
        [np.zeros(n_in, dtype=np.int64), rng.integers(0, n_classes, n_out)]
    )
    return Dataset.from_arrays(X, y, [str(k) for k in range(n_classes)])


def striped_ring_dataset(
    n: int = 1500,
    noise_fraction: float = 0.2,
    period: float = 0.75,
    stripe_mod: int = 4,
    gap: float = 0.04,
    radius: float = 10.0,
    seed: int = 0,
) -> Dataset:
    """Gaussian inliers with the minority class on periodic x0 stripes, plus
    far ring noise.

    The stripe pattern keeps the class mix independent of local density, so
    the impurity of any score-ranked prefix is flat and the ratio scan is
    driven by the noisy side. Half the ring labels follow the inverted
    stripe rule (systematically wrong, which corrupts boosting when kept),
    the other half are uniform (which keeps the noisy side maximally mixed).
    With noise_fraction 0 this is a clean sample from the same task.
    """
    rng = np.random.default_rng(seed)
    n_out = int(round(n * noise_fraction))
    n_in = n - n_out

    def stripe_class(x0):
        return (np.floor((x0 + 6.0) / period).astype(int) % stripe_mod == 0).astype(np.int64)

    pts: list[np.ndarray] = []
    while len(pts) < n_in:
        cand = rng.normal(size=(n_in, 2))
        offs = np.mod(cand[:, 0] + 6.0, period)
        near_boundary = (offs < gap) | (offs > period - gap)
        pts.extend(cand[~near_boundary])
    X_in = np.asarray(pts[:n_in])
    y_in = stripe_class(X_in[:, 0])
    X = [X_in]
    y = [y_in]
    if n_out:
        ang = rng.uniform(0, 2 * np.pi, size=n_out)
        noise = radius * np.c_[np.cos(ang), np.sin(ang)]
        rule = stripe_class(noise[:, 0])
        labels = np.where(rng.random(n_out) < 0.5, 1 - rule, rng.integers(0, 2, n_out))
        X.append(noise)
        y.append(labels)
    return Dataset.from_arrays(np.vstack(X), np.concatenate(y), ["0", "1"])


def separable_dataset(n: int = 200, margin: float = 0.3, seed: int = 0) -> Dataset:
    """Two classes split by the diagonal x0 + x1 = 0 with a margin band."""
    rng = np.random.default_rng(seed)
    pts: list[np.ndarray] = []
    while len(pts) < n:
        cand = rng.uniform(-1, 1, size=(n, 2))
        pts.extend(cand[np.abs(cand[:, 0] + cand[:, 1]) >= margin])
    X = np.asarray(pts[:n])
    y = (X[:, 0] + X[:, 1] > 0).astype(np.int64)
    return Dataset.from_arrays(X, y, ["0", "1"])


def uniform_multiclass_dataset(n_per_class: int = 20, n_classes: int = 26,
                               seed: int = 0) -> Dataset:
    """Balanced classes on separated 2D blobs; full-data impurity 1 - 1/K."""
    rng = np.random.default_rng(seed)
    blocks = []
    labels = []
    for k in range(n_classes):
        center = np.array([5.0 * (k % 6), 5.0 * (k // 6)])
        blocks.append(rng.normal(scale=0.5, size=(n_per_class, 2)) + center)
        labels.extend([k] * n_per_class)
    X = np.vstack(blocks)
    y = np.asarray(labels, dtype=np.int64)
    perm = rng.permutation(len(y))
    return Dataset.from_arrays(X[perm], y[perm], [str(k) for k in range(n_classes)])
