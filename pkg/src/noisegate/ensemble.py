"""Boosted per-partition ensembles and their accuracy-weighted combination.

Each partition gets a multiclass boosting run (SAMME weighting, which
reduces to the classic two-class scheme at K=2). Partition ensembles vote
into a global model with weights equal to their measured accuracy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import ScalingSpec
from .learners import (
    KnnHypothesis,
    hypothesis_from_dict,
    train_random_tree,
    train_stump,
    uniform_weights,
    weighted_error,
)

MODEL_FORMAT = "noisegate-model"
MODEL_VERSION = 1

_ALPHA_CAP = math.log(1e10)
_EPS_FLOOR = 1e-10


class DegenerateEnsembleError(RuntimeError):
    """Every boosting round was skipped: the base learner cannot beat chance."""


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "tree"
    max_depth: int = 4
    k_candidates: int | None = None
    knn_k: int = 5

    def __post_init__(self):
        if self.kind not in ("stump", "tree", "knn"):
            raise ValueError(f"unknown learner kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "max_depth": self.max_depth,
            "k_candidates": self.k_candidates,
            "knn_k": self.knn_k,
        }


@dataclass
class BoostTrace:
    """Per-round diagnostics kept only when requested; never serialized."""

    weights: list[np.ndarray] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)


@dataclass
class PartitionEnsemble:
    members: list[tuple[float, object]]
    beta: float
    partition_id: int
    K: int
    trace: BoostTrace | None = None

    def __post_init__(self):
        if any(alpha <= 0 for alpha, _ in self.members):
            raise ValueError("member vote weights must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")


def _train_weak(base: LearnerConfig, X, y, w, rng):
    if base.kind == "stump":
        return train_stump(X, y, w)
    if base.kind == "tree":
        return train_random_tree(
            X, y, w, max_depth=base.max_depth, k_candidates=base.k_candidates, seed=rng
        )
    return KnnHypothesis(X, y, w, k=min(base.knn_k, X.shape[0]))


def adaboost_train(
    X,
    y,
    T: int,
    base: LearnerConfig,
    seed=0,
    n_classes: int | None = None,
    partition_id: int = 0,
    keep_trace: bool = False,
) -> PartitionEnsemble:
    """Boost T rounds of the base learner on (X, y).

    Rounds whose weighted error reaches 1 - 1/K contribute nothing and are
    skipped; a round with essentially zero error is appended with a capped
    vote weight and stops the loop. Raises DegenerateEnsembleError when no
    round at all survives.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = y.shape[0]
    if T < 1:
        raise ValueError("need at least one boosting round")
    if n < 2:
        raise ValueError("need at least 2 training rows")
    if np.unique(y).size < 2:
        raise ValueError("training labels are single-class")
    K = n_classes if n_classes is not None else int(y.max()) + 1
    if K < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    w = uniform_weights(n)
    members: list[tuple[float, object]] = []
    trace = BoostTrace() if keep_trace else None
    if trace is not None:
        trace.weights.append(w.copy())
    for _ in range(T):
        h = _train_weak(base, X, y, w, rng)
        eps = weighted_error(h, X, y, w)
        # the 1e-12 band keeps float noise from sneaking chance-level rounds in
        if eps >= 1.0 - 1.0 / K - 1e-12:
            continue
        if eps <= _EPS_FLOOR:
            alpha = _ALPHA_CAP
            members.append((alpha, h))
            if trace is not None:
                trace.errors.append(eps)
                trace.alphas.append(alpha)
            break
        alpha = min(math.log((1.0 - eps) / eps) + math.log(K - 1), _ALPHA_CAP)
        members.append((alpha, h))
        mistakes = h.predict(X) != y
        w = w * np.exp(alpha * mistakes)
        w /= w.sum()
        if trace is not None:
            trace.errors.append(eps)
            trace.alphas.append(alpha)
            trace.weights.append(w.copy())
    if not members:
        raise DegenerateEnsembleError(
            f"all {T} rounds were skipped on partition {partition_id}: "
            f"base learner never beat chance for K={K}"
        )
    ensemble = PartitionEnsemble(members, beta=0.0, partition_id=partition_id, K=K,
                                 trace=trace)
    ensemble.beta = compute_beta(ensemble, X, y)
    return ensemble


def ensemble_scores(E: PartitionEnsemble, X) -> np.ndarray:
    """Summed vote weight per class, shape (rows, K)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    scores = np.zeros((X.shape[0], E.K))
    rows = np.arange(X.shape[0])
    for alpha, h in E.members:
        np.add.at(scores, (rows, h.predict(X)), alpha)
    return scores


def ensemble_predict_batch(E: PartitionEnsemble, X) -> np.ndarray:
    return np.argmax(ensemble_scores(E, X), axis=1)


def ensemble_predict(E: PartitionEnsemble, x) -> int:
    """Class with the largest summed vote weight; ties take the lowest id."""
    return int(ensemble_predict_batch(E, np.atleast_2d(x))[0])


def compute_beta(E: PartitionEnsemble, holdout_X, holdout_y) -> float:
    """Accuracy of the ensemble on the holdout; stored on E as its vote weight."""
    holdout_y = np.asarray(holdout_y, dtype=np.int64)
    if holdout_y.size == 0:
        raise ValueError("holdout set is empty")
    beta = float((ensemble_predict_batch(E, holdout_X) == holdout_y).mean())
    E.beta = beta
    return beta


@dataclass
class GlobalModel:
    ensembles: list[PartitionEnsemble]
    label_names: list[str]
    scaling: ScalingSpec | None
    provenance: dict
    n_features: int

    def __post_init__(self):
        if not self.ensembles:
            raise ValueError("global model needs at least one partition ensemble")
        K = len(self.label_names)
        if any(E.K != K for E in self.ensembles):
            raise ValueError("partition ensembles disagree on the class count")

    @property
    def K(self) -> int:
        return len(self.label_names)


def global_predict_batch(G: GlobalModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    votes = np.zeros((X.shape[0], G.K))
    rows = np.arange(X.shape[0])
    for E in G.ensembles:
        np.add.at(votes, (rows, ensemble_predict_batch(E, X)), E.beta)
    return np.argmax(votes, axis=1)


def global_predict(G: GlobalModel, x) -> int:
    """Accuracy-weighted vote across partition ensembles; ties take the
    lowest class id."""
    return int(global_predict_batch(G, np.atleast_2d(x))[0])


def model_to_dict(G: GlobalModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "provenance": G.provenance,
        "n_features": G.n_features,
        "label_names": G.label_names,
        "scaling": None if G.scaling is None else {
            "mins": G.scaling.mins.tolist(),
            "maxs": G.scaling.maxs.tolist(),
        },
        "ensembles": [
            {
                "partition_id": E.partition_id,
                "beta": E.beta,
                "members": [
                    {"alpha": alpha, "hypothesis": h.to_dict()} for alpha, h in E.members
                ],
            }
            for E in G.ensembles
        ],
    }


def model_from_dict(doc: dict) -> GlobalModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not an ensemble model document")
    version = doc.get("version")
    if not isinstance(version, int) or version > MODEL_VERSION:
        raise ValueError(
            f"model version {version!r} is newer than supported ({MODEL_VERSION})"
        )
    label_names = list(doc["label_names"])
    scaling = None
    if doc.get("scaling") is not None:
        scaling = ScalingSpec(
            np.asarray(doc["scaling"]["mins"], dtype=np.float64),
            np.asarray(doc["scaling"]["maxs"], dtype=np.float64),
        )
    ensembles = []
    for e in doc["ensembles"]:
        members = [
            (float(m["alpha"]), hypothesis_from_dict(m["hypothesis"]))
            for m in e["members"]
        ]
        ensembles.append(
            PartitionEnsemble(members, float(e["beta"]), int(e["partition_id"]),
                              K=len(label_names))
        )
    return GlobalModel(ensembles, label_names, scaling, dict(doc.get("provenance", {})),
                       int(doc["n_features"]))


def save_model(G: GlobalModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(G), fh, indent=1)
        fh.write("\n")


def load_model(path) -> GlobalModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
