"""One-class SVM: dual QP solved by pairwise coordinate descent.

The training boundary is the minimizer of 0.5 * a^T K a over the feasible
set {0 <= a_i <= 1/(nu*n), sum(a) = 1}. Decision scores are
sum_i a_i k(x_i, x) - rho; negative scores mark anomalies.
"""

from __future__ import annotations

import json
import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

OCSVM_FORMAT = "noisegate-ocsvm"
OCSVM_VERSION = 1

_KINDS = ("rbf", "linear")


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.gamma is None or self.gamma <= 0:
                raise ValueError("rbf kernel requires gamma > 0")
        elif self.gamma is not None:
            raise ValueError("gamma is only meaningful for the rbf kernel")


def default_kernel(d: int) -> KernelSpec:
    return KernelSpec("rbf", 1.0 / max(d, 1))


def _row_dim(x) -> int:
    return x.shape[1] if sp.issparse(x) else np.asarray(x).shape[-1]


def _sq_norm(x) -> float:
    if sp.issparse(x):
        return float(x.multiply(x).sum())
    x = np.asarray(x, dtype=np.float64)
    return float(x @ x)


def _dot(x, z) -> float:
    if sp.issparse(x) or sp.issparse(z):
        xs = x if sp.issparse(x) else sp.csr_matrix(np.atleast_2d(x))
        zs = z if sp.issparse(z) else sp.csr_matrix(np.atleast_2d(z))
        return float((xs @ zs.T).toarray()[0, 0])
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    return float(x @ z)


def kernel_eval(spec: KernelSpec, x, z) -> float:
    """Evaluate k(x, z) for dense or sparse rows of equal dimension."""
    if _row_dim(x) != _row_dim(z):
        raise ValueError("kernel arguments have different dimensions")
    if spec.kind == "linear":
        return _dot(x, z)
    d2 = _sq_norm(x) + _sq_norm(z) - 2.0 * _dot(x, z)
    return float(np.exp(-spec.gamma * max(d2, 0.0)))


def _matrix_sq_norms(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.multiply(X).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", X, X)


def _cross_kernel(spec: KernelSpec, X, Z) -> np.ndarray:
    """Full kernel block k(X_i, Z_j) as a dense (n, m) array."""
    dots = X @ Z.T
    if sp.issparse(dots):
        dots = dots.toarray()
    dots = np.asarray(dots, dtype=np.float64)
    if spec.kind == "linear":
        return dots
    d2 = _matrix_sq_norms(X)[:, None] + _matrix_sq_norms(Z)[None, :] - 2.0 * dots
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-spec.gamma * d2)


class KernelRowCache:
    """LRU cache of gram-matrix rows under a byte budget."""

    def __init__(self, X, spec: KernelSpec, budget_bytes: int = 256 << 20):
        self._X = X
        self._spec = spec
        self._sqn = _matrix_sq_norms(X) if spec.kind == "rbf" else None
        self._budget = budget_bytes
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self._bytes = 0

    def row(self, i: int) -> np.ndarray:
        cached = self._rows.get(i)
        if cached is not None:
            self._rows.move_to_end(i)
            return cached
        xi = self._X[i]
        dots = self._X @ xi.T if sp.issparse(self._X) else self._X @ xi
        if sp.issparse(dots):
            dots = dots.toarray().ravel()
        dots = np.asarray(dots, dtype=np.float64).ravel()
        if self._spec.kind == "linear":
            r = dots
        else:
            d2 = self._sqn + self._sqn[i] - 2.0 * dots
            np.maximum(d2, 0.0, out=d2)
            r = np.exp(-self._spec.gamma * d2)
        self._rows[i] = r
        self._bytes += r.nbytes
        while self._bytes > self._budget and len(self._rows) > 1:
            _, old = self._rows.popitem(last=False)
            self._bytes -= old.nbytes
        return r


@dataclass
class OcSvmModel:
    """Trained boundary: dual coefficients paired with support vectors.

    Only strictly positive coefficients are retained; they sum to 1 and are
    each bounded by 1/(nu * n_train). The model is immutable in practice and
    safe for concurrent scoring.
    """

    support_vectors: np.ndarray
    alphas: np.ndarray
    rho: float
    nu: float
    kernel: KernelSpec
    support_indices: np.ndarray | None = None
    n_train: int | None = None
    converged: bool = True
    residual: float = 0.0
    n_iter: int = 0

    def validate(self) -> None:
        """Post-hoc dual feasibility check; raises on violation."""
        if self.alphas.size == 0:
            raise ValueError("no support vectors retained")
        if (self.alphas <= 0).any():
            raise ValueError("retained coefficients must be strictly positive")
        if self.n_train is not None:
            ub = 1.0 / (self.nu * self.n_train)
            if (self.alphas > ub * (1 + 1e-12)).any():
                raise ValueError("coefficient exceeds box bound")
        if abs(self.alphas.sum() - 1.0) > 1e-6:
            raise ValueError("coefficients do not sum to 1")


def train_ocsvm(
    X,
    nu: float = 0.5,
    kernel: KernelSpec | None = None,
    tol: float = 1e-3,
    max_iter: int | None = None,
    cache_bytes: int = 256 << 20,
) -> OcSvmModel:
    """Fit the boundary on unlabeled rows X.

    The solver repeatedly picks the pair of coordinates with the largest
    mutual optimality violation and solves the two-variable subproblem
    analytically, preserving the simplex constraint at every step. If the
    iteration budget runs out first, the model is returned with
    ``converged=False`` and the remaining violation in ``residual``
    alongside a warning.
    """
    n = X.shape[0]
    d = X.shape[1]
    if n < 2:
        raise ValueError("training requires at least 2 rows")
    if not 0.0 < nu <= 1.0:
        raise ValueError(f"nu must be in (0, 1], got {nu}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if kernel is None:
        kernel = default_kernel(d)
    if max_iter is None:
        max_iter = max(100_000, 10 * n * d)

    C = 1.0 / (nu * n)
    alpha = np.zeros(n)
    n_at_bound = int(np.floor(nu * n))
    alpha[:n_at_bound] = C
    if n_at_bound < n:
        alpha[n_at_bound] = (nu * n - n_at_bound) * C

    cache = KernelRowCache(X, kernel, cache_bytes)
    g = np.zeros(n)
    for j in np.flatnonzero(alpha > 0):
        g += alpha[j] * cache.row(j)

    converged = False
    residual = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        can_up = np.flatnonzero(alpha < C)
        can_down = np.flatnonzero(alpha > 0)
        if can_up.size == 0 or can_down.size == 0:
            converged = True
            break
        i = can_up[np.argmin(g[can_up])]
        j = can_down[np.argmax(g[can_down])]
        residual = g[j] - g[i]
        if residual < tol:
            converged = True
            residual = max(residual, 0.0)
            break
        ki = cache.row(i)
        kj = cache.row(j)
        curv = max(ki[i] + kj[j] - 2.0 * ki[j], 1e-12)
        t = min(residual / curv, C - alpha[i], alpha[j])
        cap_i = C - alpha[i]
        cap_j = alpha[j]
        alpha[i] += t
        alpha[j] -= t
        if t == cap_i:
            alpha[i] = C
        if t == cap_j:
            alpha[j] = 0.0
        g += t * (ki - kj)

    if not converged:
        warnings.warn(
            f"stopped after {max_iter} iterations with optimality gap "
            f"{residual:.3g} (tol {tol:.3g})",
            ConvergenceWarning,
            stacklevel=2,
        )

    free = (alpha > 0) & (alpha < C)
    at_bound = alpha == C
    at_zero = alpha == 0
    if free.any():
        rho = float(g[free].mean())
    elif at_zero.any():
        rho = float((g[at_bound].max() + g[at_zero].min()) / 2.0)
    else:
        rho = float(g[at_bound].max())

    keep = np.flatnonzero(alpha > 0)
    sv = X[keep]
    if sp.issparse(sv):
        sv = np.asarray(sv.todense())
    return OcSvmModel(
        support_vectors=np.asarray(sv, dtype=np.float64),
        alphas=alpha[keep].copy(),
        rho=rho,
        nu=nu,
        kernel=kernel,
        support_indices=keep,
        n_train=n,
        converged=converged,
        residual=float(residual),
        n_iter=it,
    )


def decision_values(model: OcSvmModel, X) -> np.ndarray:
    """Scores for a batch of rows; larger means more inlier-like."""
    if _row_dim(X) != model.support_vectors.shape[1]:
        raise ValueError("query dimension does not match support vectors")
    cross = _cross_kernel(model.kernel, X, model.support_vectors)
    return cross @ model.alphas - model.rho


def decision_value(model: OcSvmModel, x) -> float:
    row = x if sp.issparse(x) else np.atleast_2d(np.asarray(x, dtype=np.float64))
    return float(decision_values(model, row)[0])


def predict_membership(model: OcSvmModel, x) -> int:
    """+1 inlier / -1 anomaly; a score of exactly 0 counts as inlier."""
    return -1 if decision_value(model, x) < 0 else 1


def kkt_residual(model: OcSvmModel, X) -> float:
    """Maximum optimality violation of the model over its training rows.

    Requires either ``support_indices`` (set by train_ocsvm) or a model
    whose coefficients correspond 1:1 with the rows of X.
    """
    n = X.shape[0]
    alpha = np.zeros(n)
    if model.support_indices is not None:
        alpha[model.support_indices] = model.alphas
    elif model.alphas.shape[0] == n:
        alpha[:] = model.alphas
    else:
        raise ValueError("cannot align coefficients with training rows")
    C = 1.0 / (model.nu * n)
    g = decision_values(model, X) + model.rho
    box = max(0.0, float(-alpha.min()), float(alpha.max() - C))
    simplex = abs(float(alpha.sum()) - 1.0)
    can_up = alpha < C
    can_down = alpha > 0
    pair = 0.0
    if can_up.any() and can_down.any():
        pair = max(0.0, float(g[can_down].max() - g[can_up].min()))
    return max(box, simplex, pair)


def model_to_dict(model: OcSvmModel) -> dict:
    return {
        "format": OCSVM_FORMAT,
        "version": OCSVM_VERSION,
        "kernel": {"kind": model.kernel.kind, "gamma": model.kernel.gamma},
        "nu": model.nu,
        "rho": model.rho,
        "support_vectors": model.support_vectors.tolist(),
        "alphas": model.alphas.tolist(),
    }


def model_from_dict(doc: dict) -> OcSvmModel:
    if doc.get("format") != OCSVM_FORMAT:
        raise ValueError("not a one-class SVM model document")
    version = doc.get("version")
    if not isinstance(version, int) or version > OCSVM_VERSION:
        raise ValueError(
            f"model version {version!r} is newer than supported ({OCSVM_VERSION})"
        )
    kern = doc["kernel"]
    return OcSvmModel(
        support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64),
        alphas=np.asarray(doc["alphas"], dtype=np.float64),
        rho=float(doc["rho"]),
        nu=float(doc["nu"]),
        kernel=KernelSpec(kern["kind"], kern["gamma"]),
    )


def save_ocsvm(model: OcSvmModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_ocsvm(path) -> OcSvmModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
