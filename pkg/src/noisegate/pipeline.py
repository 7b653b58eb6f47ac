"""End-to-end training pipeline: ingest, scale, partition, filter each
partition, boost each cleaned partition, combine, evaluate.

All randomness flows from the run seed through named per-stage streams, so
reports and model files are byte-identical across runs of the same config.
Wall-clock timings are collected but written to a separate side file to keep
the report itself deterministic.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import (
    Dataset,
    apply_scale,
    dataset_stats,
    min_max_scale,
    parse_csv,
    parse_libsvm,
)
from .data import partition as make_partitions
from .ensemble import (
    GlobalModel,
    LearnerConfig,
    adaboost_train,
    compute_beta,
    global_predict_batch,
    load_model,
    save_model,
)
from .noise_filter import default_grid, filter_partition, gini_impurity, scan_to_csv
from .ocsvm import KernelSpec

logger = logging.getLogger("noisegate")

# named sub-seed streams; every consumer derives independently of run order
_STREAM_PARTITION = 1
_STREAM_BOOST = 2
_STREAM_HOLDOUT = 3

_BETA_HOLDOUT_FRACTION = 0.2


class PartitionError(RuntimeError):
    """A per-partition stage failed; carries the partition id for context."""

    def __init__(self, partition_id: int, cause: BaseException):
        super().__init__(f"partition {partition_id}: {cause}")
        self.partition_id = partition_id


def derive_seed(*parts: int) -> int:
    """Stable integer sub-seed for a named stream of the run seed."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


@dataclass
class RunConfig:
    train_path: str
    output_dir: str
    test_path: str | None = None
    fmt: str = "libsvm"
    label_column: int = -1
    partitions: int = 50
    nu: float = 0.5
    kernel_kind: str = "rbf"
    gamma: float | None = None
    grid_step: float = 0.05
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    rounds: int = 50
    seed: int = 0
    filtering: bool = True
    beta_mode: str = "holdout"
    scaling: bool = True
    repetitions: int = 50
    jobs: int | None = None

    def validate(self) -> None:
        if self.fmt not in ("libsvm", "csv"):
            raise ValueError(f"unknown format {self.fmt!r}")
        if self.partitions < 1:
            raise ValueError("partition count must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.beta_mode not in ("holdout", "train"):
            raise ValueError(f"unknown beta mode {self.beta_mode!r}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")

    def snapshot(self) -> dict:
        return {
            "train_path": self.train_path,
            "test_path": self.test_path,
            "format": self.fmt,
            "label_column": self.label_column,
            "partitions": self.partitions,
            "nu": self.nu,
            "kernel": self.kernel_kind,
            "gamma": self.gamma,
            "grid_step": self.grid_step,
            "learner": self.learner.to_dict(),
            "rounds": self.rounds,
            "seed": self.seed,
            "filtering": self.filtering,
            "beta_mode": self.beta_mode,
            "scaling": self.scaling,
            "repetitions": self.repetitions,
        }


@dataclass
class PartitionSummary:
    partition_id: int
    size: int
    retained: int
    removed: int
    chosen_p: float
    gini_clean: float
    gini_noisy: float | None
    ratio: float | None
    beta: float

    def to_dict(self) -> dict:
        return {
            "partition_id": self.partition_id,
            "size": self.size,
            "retained": self.retained,
            "removed": self.removed,
            "chosen_p": self.chosen_p,
            "gini_clean": self.gini_clean,
            "gini_noisy": self.gini_noisy,
            "ratio": self.ratio,
            "beta": self.beta,
        }


@dataclass
class RepetitionResult:
    repetition: int
    seed: int
    accuracy: float | None
    partitions: list[PartitionSummary]

    def to_dict(self) -> dict:
        return {
            "repetition": self.repetition,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "partitions": [p.to_dict() for p in self.partitions],
        }


@dataclass
class EvalReport:
    config: dict
    dataset: dict
    label_names: list[str]
    repetitions: list[RepetitionResult]
    mean_accuracy: float | None
    std_accuracy: float | None
    confusion: np.ndarray | None
    unseen_label_counts: dict
    timings: dict

    def to_dict(self) -> dict:
        """Deterministic report document; timings are deliberately excluded."""
        return {
            "config": self.config,
            "dataset": self.dataset,
            "label_names": self.label_names,
            "repetitions": [r.to_dict() for r in self.repetitions],
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "confusion_matrix": None if self.confusion is None else self.confusion.tolist(),
            "unseen_test_labels": self.unseen_label_counts,
        }


def _read_text(path) -> str:
    with open(path) as fh:
        return fh.read()


def _parse(text: str, fmt: str, label_column: int) -> Dataset:
    if fmt == "csv":
        return parse_csv(text, label_column)
    return parse_libsvm(text)


def _resolve_kernel(cfg_kind: str, gamma: float | None, d: int) -> KernelSpec:
    if cfg_kind == "linear":
        return KernelSpec("linear")
    return KernelSpec("rbf", gamma if gamma is not None else 1.0 / max(d, 1))


def _prepare_eval_features(model: GlobalModel, test: Dataset) -> np.ndarray:
    if test.d > model.n_features:
        raise ValueError(
            f"test data has {test.d} features, model expects {model.n_features}"
        )
    dense = np.asarray(test.features.todense())
    if test.d < model.n_features:
        pad = np.zeros((test.n, model.n_features - test.d))
        dense = np.hstack([dense, pad])
    if model.scaling is not None:
        scaled = Dataset.from_arrays(dense, np.zeros(test.n, dtype=np.int64), ["_"])
        dense = np.asarray(apply_scale(model.scaling, scaled).features.todense())
    return dense


def evaluate_model(model: GlobalModel, test: Dataset):
    """Accuracy, summed confusion matrix, and unseen-label counts.

    Test labels never seen at training time count as always-wrong and are
    reported separately rather than raising.
    """
    features = _prepare_eval_features(model, test)
    token_to_id = {name: i for i, name in enumerate(model.label_names)}
    mapped = np.array([token_to_id.get(name, -1) for name in test.label_names])
    truth = mapped[test.labels]
    preds = global_predict_batch(model, features)
    known = truth >= 0
    accuracy = float(((preds == truth) & known).sum() / test.n)
    K = model.K
    confusion = np.zeros((K, K), dtype=np.int64)
    np.add.at(confusion, (truth[known], preds[known]), 1)
    unseen = {}
    for i, name in enumerate(test.label_names):
        if mapped[i] < 0:
            unseen[name] = int((test.labels == i).sum())
    return accuracy, confusion, unseen


def _partition_stage(pid, part, data, cfg, kernel, grid, rep_seed):
    try:
        if cfg.filtering:
            fr = filter_partition(part, data, nu=cfg.nu, kernel=kernel, grid=grid)
            clean_idx = fr.clean_indices
            pt = fr.chosen_point
            chosen_p, g_clean, g_noisy, ratio = fr.chosen_p, pt.gini_clean, pt.gini_noisy, pt.ratio
        else:
            clean_idx = part.indices
            chosen_p = 1.0
            g_clean = gini_impurity(data.labels[part.indices])
            g_noisy = None
            ratio = None

        X = data.rows(clean_idx)
        y = data.labels[clean_idx]
        n_clean = len(clean_idx)
        train_sel = np.arange(n_clean)
        holdout_sel = None
        if cfg.beta_mode == "holdout":
            n_hold = max(1, int(math.floor(_BETA_HOLDOUT_FRACTION * n_clean + 0.5)))
            if n_clean - n_hold >= 2:
                order = np.random.default_rng(
                    derive_seed(rep_seed, _STREAM_HOLDOUT, pid)
                ).permutation(n_clean)
                holdout_sel = order[:n_hold]
                train_sel = order[n_hold:]

        ensemble = adaboost_train(
            X[train_sel],
            y[train_sel],
            cfg.rounds,
            cfg.learner,
            seed=derive_seed(rep_seed, _STREAM_BOOST, pid),
            n_classes=data.K,
            partition_id=pid,
        )
        if holdout_sel is not None:
            compute_beta(ensemble, X[holdout_sel], y[holdout_sel])

        summary = PartitionSummary(
            partition_id=pid,
            size=part.size,
            retained=n_clean,
            removed=part.size - n_clean,
            chosen_p=chosen_p,
            gini_clean=g_clean,
            gini_noisy=g_noisy,
            ratio=ratio,
            beta=ensemble.beta,
        )
        return ensemble, summary
    except Exception as exc:
        raise PartitionError(pid, exc) from exc


def _run_partition_stages(parts, data, cfg, kernel, grid, rep_seed):
    jobs = cfg.jobs if cfg.jobs is not None else (os.cpu_count() or 1)
    if jobs <= 1 or len(parts) == 1:
        return [
            _partition_stage(p.partition_id, p, data, cfg, kernel, grid, rep_seed)
            for p in parts
        ]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(_partition_stage, p.partition_id, p, data, cfg, kernel, grid, rep_seed)
            for p in parts
        ]
        return [f.result() for f in futures]


def run_training(cfg: RunConfig) -> tuple[GlobalModel, EvalReport]:
    """Run the full pipeline once per repetition and write model + reports.

    The persisted model is the first repetition's (seed = cfg.seed); all
    repetitions contribute to the report. With filtering off the filter
    stage is the identity and every partition reports chosen_p = 1.0.
    """
    cfg.validate()
    timings: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    train_text = _read_text(cfg.train_path)
    test_text = _read_text(cfg.test_path) if cfg.test_path else None
    train = _parse(train_text, cfg.fmt, cfg.label_column)
    test = _parse(test_text, cfg.fmt, cfg.label_column) if test_text is not None else None
    timings["parse"] = time.perf_counter() - t0
    if train.K < 2:
        raise ValueError("training data has a single class")

    t0 = time.perf_counter()
    scaling_spec = None
    working = train
    if cfg.scaling:
        working, scaling_spec = min_max_scale(train)
    timings["scale"] = time.perf_counter() - t0

    kernel = _resolve_kernel(cfg.kernel_kind, cfg.gamma, train.d)
    grid = default_grid(cfg.grid_step)
    snapshot = cfg.snapshot()

    reps: list[RepetitionResult] = []
    accuracies: list[float] = []
    confusion = None
    unseen_totals: dict[str, int] = {}
    first_model: GlobalModel | None = None

    timings["train"] = 0.0
    timings["evaluate"] = 0.0
    for r in range(cfg.repetitions):
        rep_seed = cfg.seed + r
        t0 = time.perf_counter()
        parts = make_partitions(
            working, cfg.partitions, derive_seed(rep_seed, _STREAM_PARTITION)
        )
        staged = _run_partition_stages(parts, working, cfg, kernel, grid, rep_seed)
        ensembles = [ensemble for ensemble, _ in staged]
        summaries = [summary for _, summary in staged]
        model = GlobalModel(
            ensembles, train.label_names, scaling_spec, snapshot, n_features=train.d
        )
        timings["train"] += time.perf_counter() - t0
        if first_model is None:
            first_model = model

        accuracy = None
        if test is not None:
            t0 = time.perf_counter()
            accuracy, conf, unseen = evaluate_model(model, test)
            confusion = conf if confusion is None else confusion + conf
            for name, count in unseen.items():
                unseen_totals[name] = unseen_totals.get(name, 0) + count
            accuracies.append(accuracy)
            timings["evaluate"] += time.perf_counter() - t0
        reps.append(RepetitionResult(r, rep_seed, accuracy, summaries))
        logger.info("repetition %d/%d done (accuracy=%s)", r + 1, cfg.repetitions,
                    "n/a" if accuracy is None else f"{accuracy:.4f}")

    timings["total"] = time.perf_counter() - t_total
    report = EvalReport(
        config=snapshot,
        dataset=dataset_stats(train),
        label_names=train.label_names,
        repetitions=reps,
        mean_accuracy=float(np.mean(accuracies)) if accuracies else None,
        std_accuracy=float(np.std(accuracies)) if accuracies else None,
        confusion=confusion,
        unseen_label_counts=unseen_totals,
        timings=timings,
    )

    os.makedirs(cfg.output_dir, exist_ok=True)
    save_model(first_model, os.path.join(cfg.output_dir, "model.json"))
    with open(os.path.join(cfg.output_dir, "report.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    with open(os.path.join(cfg.output_dir, "timings.json"), "w") as fh:
        json.dump(timings, fh, indent=1)
        fh.write("\n")
    for name, took in timings.items():
        logger.info("stage %s: %.3fs", name, took)
    return first_model, report


def evaluate(model_path, test_path, fmt: str = "libsvm", label_column: int = -1) -> dict:
    """Score a saved model against a test file."""
    model = load_model(model_path)
    test = _parse(_read_text(test_path), fmt, label_column)
    accuracy, confusion, unseen = evaluate_model(model, test)
    return {
        "accuracy": accuracy,
        "n_test": test.n,
        "label_names": model.label_names,
        "confusion_matrix": confusion.tolist(),
        "unseen_test_labels": unseen,
    }


def predict_labels(model_path, data_path, fmt: str = "libsvm", label_column: int = -1) -> list[str]:
    """Predicted label tokens, one per input row."""
    model = load_model(model_path)
    ds = _parse(_read_text(data_path), fmt, label_column)
    features = _prepare_eval_features(model, ds)
    return [model.label_names[p] for p in global_predict_batch(model, features)]


def gini_scan(
    train_path,
    output_dir,
    fmt: str = "libsvm",
    label_column: int = -1,
    nu: float = 0.5,
    kernel_kind: str = "rbf",
    gamma: float | None = None,
    grid_step: float = 0.05,
    M: int = 50,
    seed: int = 0,
    scaling: bool = True,
) -> dict:
    """Write per-partition impurity scans plus a cross-partition aggregate.

    Prints each partition's best retained fraction and the modal best across
    partitions. Returns a summary with the chosen fractions and file paths.
    """
    train = _parse(_read_text(train_path), fmt, label_column)
    working = min_max_scale(train)[0] if scaling else train
    kernel = _resolve_kernel(kernel_kind, gamma, train.d)
    grid = default_grid(grid_step)
    parts = make_partitions(working, M, derive_seed(seed, _STREAM_PARTITION))

    os.makedirs(output_dir, exist_ok=True)
    best_ps = []
    scans = []
    full_ginis = []
    paths = []
    for part in parts:
        try:
            fr = filter_partition(part, working, nu=nu, kernel=kernel, grid=grid)
        except Exception as exc:
            raise PartitionError(part.partition_id, exc) from exc
        best_ps.append(fr.chosen_p)
        scans.append(fr.scan)
        full_ginis.append(gini_impurity(working.labels[part.indices]))
        path = os.path.join(output_dir, f"gini_partition_{part.partition_id:03d}.csv")
        with open(path, "w") as fh:
            fh.write(scan_to_csv(fr.scan))
        paths.append(path)
        print(f"partition {part.partition_id}: best retained fraction p={fr.chosen_p:g} "
              f"(removed fraction {1 - fr.chosen_p:g})")

    agg_path = os.path.join(output_dir, "gini_aggregate.csv")
    mean_full = float(np.mean(full_ginis))
    with open(agg_path, "w") as fh:
        fh.write("p,gini_clean,gini_noisy,ratio,gini_full\n")
        for gi, p in enumerate(grid):
            gc = float(np.mean([s[gi].gini_clean for s in scans]))
            gn = float(np.mean([s[gi].gini_noisy for s in scans]))
            ratio = float(np.mean([s[gi].ratio for s in scans]))
            fh.write(f"{p:g},{gc:.12g},{gn:.12g},{ratio:.12g},{mean_full:.12g}\n")

    values, counts = np.unique(best_ps, return_counts=True)
    modal = float(values[counts == counts.max()].max())  # tie -> larger p
    print(f"modal best retained fraction across {M} partitions: p={modal:g}")
    return {
        "best_p_per_partition": best_ps,
        "modal_best_p": modal,
        "partition_csvs": paths,
        "aggregate_csv": agg_path,
        "mean_full_gini": mean_full,
    }
