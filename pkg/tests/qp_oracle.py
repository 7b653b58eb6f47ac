"""Reference solver for the box-constrained simplex QP behind the one-class SVM.

Minimizes 0.5 * a^T K a over {0 <= a_i <= ub, sum(a) = 1} by projected
gradient descent with an exact Euclidean projection onto the feasible set.
Kept deliberately independent of the package under test: gram matrices are
computed here with scipy, not with noisegate's kernel code.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


def rbf_gram(X: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(X, X, "sqeuclidean"))


def linear_gram(X: np.ndarray) -> np.ndarray:
    return X @ X.T


def project_box_simplex(v: np.ndarray, ub: float) -> np.ndarray:
    """Project v onto {0 <= a <= ub, sum(a) = 1}.

    The projection is clip(v - tau, 0, ub) for the tau making the sum 1.
    f(tau) = sum(clip(v - tau, 0, ub)) is piecewise linear and nonincreasing
    with breakpoints at v_i and v_i - ub, so tau is found exactly by
    interpolating between the two bracketing breakpoints.
    """
    n = v.shape[0]
    if n * ub < 1.0 - 1e-12:
        raise ValueError("infeasible: n * ub < 1")
    bps = np.sort(np.concatenate([v, v - ub]))
    f = np.clip(v[None, :] - bps[:, None], 0.0, ub).sum(axis=1)
    # f is nonincreasing along bps; locate the last breakpoint with f >= 1
    k = int(np.searchsorted(-f, -1.0, side="right")) - 1
    if k < 0:
        # only reachable when n * ub == 1 up to rounding: the box is tight
        return np.full(n, ub)
    if k == len(bps) - 1:
        tau = bps[k]
    else:
        f1, f2 = f[k], f[k + 1]
        b1, b2 = bps[k], bps[k + 1]
        tau = b1 if f1 == f2 else b1 + (f1 - 1.0) * (b2 - b1) / (f1 - f2)
    return np.clip(v - tau, 0.0, ub)


def solve_qp_reference(
    K: np.ndarray,
    ub: float,
    step: float = 1e-3,
    max_iter: int = 1_000_000,
    stop_delta: float = 1e-14,
) -> np.ndarray:
    """Projected gradient descent on 0.5 a^T K a over the box-simplex."""
    n = K.shape[0]
    alpha = project_box_simplex(np.full(n, 1.0 / n), ub)
    for _ in range(max_iter):
        new = project_box_simplex(alpha - step * (K @ alpha), ub)
        if np.max(np.abs(new - alpha)) < stop_delta:
            return new
        alpha = new
    return alpha


def qp_objective(K: np.ndarray, alpha: np.ndarray) -> float:
    return 0.5 * float(alpha @ K @ alpha)


def kkt_gap(K: np.ndarray, alpha: np.ndarray, ub: float) -> float:
    """Max pairwise KKT violation of a feasible point (0 at optimality)."""
    g = K @ alpha
    low = alpha > 0
    up = alpha < ub
    if not low.any() or not up.any():
        return 0.0
    return max(0.0, float(g[low].max() - g[up].min()))


def reference_instances():
    """The fixed random QP instances behind the frozen reference objectives.

    Regenerate the frozen file with `python tests/qp_oracle.py` after any
    change here.
    """
    rng = np.random.default_rng(20260810)
    for t in range(50):
        n = int(rng.integers(4, 21))
        d = int(rng.integers(1, 6))
        nu = (0.2, 0.5, 1.0)[t % 3]
        kind = "linear" if t % 5 == 4 else "rbf"
        X = rng.normal(size=(n, d)) * rng.uniform(0.3, 3.0)
        yield t, X, nu, kind, 1.0 / d


def _freeze(out_path: str) -> None:
    import json

    objectives = []
    for t, X, nu, kind, gamma in reference_instances():
        K = rbf_gram(X, gamma) if kind == "rbf" else linear_gram(X)
        ub = 1.0 / (nu * X.shape[0])
        alpha = solve_qp_reference(K, ub, stop_delta=1e-13)
        gap = kkt_gap(K, alpha, ub)
        objectives.append(qp_objective(K, alpha))
        print(f"instance {t}: n={X.shape[0]} d={X.shape[1]} nu={nu} {kind} "
              f"obj={objectives[-1]:.10f} kkt_gap={gap:.2e}", flush=True)
    with open(out_path, "w") as fh:
        json.dump({"solver": "projected-gradient, step 1e-3", "objectives": objectives}, fh, indent=1)
    print(f"wrote {out_path}")


if __name__ == "__main__":
    import os

    here = os.path.dirname(os.path.abspath(__file__))
    os.makedirs(os.path.join(here, "data"), exist_ok=True)
    _freeze(os.path.join(here, "data", "qp_reference_objectives.json"))
