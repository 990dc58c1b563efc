"""Desk-scale evaluation harness: split, reference classifier, metrics, sweep.

The classifier is multinomial logistic regression over the instance
embeddings, trained by seeded mini-batch gradient descent from a zero
initialization; with fixed seeds the whole pipeline is deterministic. At
the end of every epoch the probability the model assigns to each training
instance's majority label is recorded; the mean of those snapshots is the
instance's training-dynamics confidence.

A sweep runs strategy x fraction x seed grid cells independently:
filter, re-derive majority labels, split 70/30, train, and score macro-F1
and accuracy on the held-out side. Cells that end up too small or
single-class are marked degenerate instead of failing the grid.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .aggregate import majority_labels
from .entropy import audit_entropy
from .filtering import STRATEGIES, apply_filter
from .ingest import EmbeddingStore, validate_alignment
from .model import Dataset, LabelSet, SchemaError
from .rng import RandomStream, derive_seed
from .silhouette import audit_silhouette
from .util import resolve_threads, scaled_count

CONFIDENCE_BINS = 20

SWEEP_CSV_COLUMNS = (
    "strategy",
    "fraction",
    "seed",
    "macro_f1",
    "accuracy",
    "mean_confidence",
    "n_train",
    "n_test",
    "degenerate",
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    learning_rate: float = 0.01
    batch_size: int = 50
    seed: int = 0
    l2_penalty: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.l2_penalty < 0:
            raise ValueError(f"l2_penalty must be >= 0, got {self.l2_penalty}")


@dataclass
class ClassifierModel:
    weights: np.ndarray  # (K, D)
    bias: np.ndarray     # (K,)
    label_set: LabelSet


@dataclass(frozen=True)
class ConfidenceRecord:
    instance_id: str
    per_epoch: tuple[float, ...]
    confidence: float

    @classmethod
    def build(cls, instance_id: str, per_epoch: Sequence[float]) -> "ConfidenceRecord":
        per_epoch = tuple(float(p) for p in per_epoch)
        return cls(instance_id, per_epoch, math.fsum(per_epoch) / len(per_epoch))


@dataclass
class EvalResult:
    strategy: str
    fraction: float
    seed: int
    macro_f1: Optional[float]
    accuracy: Optional[float]
    mean_confidence: Optional[float]
    confidence_hist: Optional[list[int]]
    n_train: int
    n_test: int
    degenerate: bool = False
    note: str = ""


def split(
    dataset: Dataset, train_ratio: float = 0.7, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Instance-level partition by seeded shuffle of the canonical order.

    The train side gets floor(train_ratio * M) instances; both sides keep
    the canonical instance order of the parent dataset.
    """
    if dataset.n_instances == 0:
        raise ValueError("cannot split an empty dataset")
    ids = list(dataset.instance_ids)
    RandomStream(derive_seed(seed, "split")).shuffle(ids)
    n_train = scaled_count(train_ratio, len(ids))
    train_ids = set(ids[:n_train])
    train_ds = dataset.subset_instances(
        iid for iid in dataset.instance_ids if iid in train_ids
    )
    test_ds = dataset.subset_instances(
        iid for iid in dataset.instance_ids if iid not in train_ids
    )
    return train_ds, test_ds


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by the row maximum."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def cross_entropy_loss(
    weights: np.ndarray,
    bias: np.ndarray,
    features: np.ndarray,
    targets: np.ndarray,
    l2_penalty: float = 0.0,
) -> float:
    probs = softmax(features @ weights.T + bias)
    picked = probs[np.arange(len(targets)), targets]
    loss = -float(np.mean(np.log(picked)))
    if l2_penalty:
        loss += 0.5 * l2_penalty * float(np.sum(weights * weights))
    return loss


def cross_entropy_gradients(
    weights: np.ndarray,
    bias: np.ndarray,
    features: np.ndarray,
    targets: np.ndarray,
    l2_penalty: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of the mean cross-entropy w.r.t. weights and bias."""
    probs = softmax(features @ weights.T + bias)
    probs[np.arange(len(targets)), targets] -= 1.0
    probs /= len(targets)
    grad_w = probs.T @ features
    if l2_penalty:
        grad_w += l2_penalty * weights
    grad_b = probs.sum(axis=0)
    return grad_w, grad_b


def train(
    features: np.ndarray,
    targets: Sequence[int],
    config: TrainConfig,
    label_set: LabelSet,
    instance_ids: Optional[Sequence[str]] = None,
) -> tuple[ClassifierModel, list[ConfidenceRecord]]:
    """Mini-batch gradient descent from zero weights, for exactly E epochs.

    targets are label-set indices (the majority labels). Each epoch
    reshuffles the batch order from the seeded train stream; the epoch-end
    probability of each instance's target label is recorded for the
    confidence records.
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    n = len(features)
    if n == 0 or len(targets) != n:
        raise ValueError("features and targets must be non-empty and aligned")
    if len(np.unique(targets)) < 2:
        raise ValueError("training set has a single class")
    if instance_ids is None:
        instance_ids = [str(i) for i in range(n)]

    n_labels = len(label_set)
    dim = features.shape[1]
    weights = np.zeros((n_labels, dim), dtype=np.float64)
    bias = np.zeros(n_labels, dtype=np.float64)
    stream = RandomStream(derive_seed(config.seed, "train"))

    per_epoch = np.empty((config.epochs, n), dtype=np.float64)
    # divergence surfaces as an explicit error via the epoch-end finite
    # check, so numpy's intermediate overflow warnings are suppressed
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            order = list(range(n))
            stream.shuffle(order)
            for lo in range(0, n, config.batch_size):
                batch = order[lo : lo + config.batch_size]
                grad_w, grad_b = cross_entropy_gradients(
                    weights, bias, features[batch], targets[batch], config.l2_penalty
                )
                weights -= config.learning_rate * grad_w
                bias -= config.learning_rate * grad_b
            probs = softmax(features @ weights.T + bias)
            if not np.isfinite(weights).all() or not np.isfinite(probs).all():
                raise RuntimeError(
                    f"training diverged at epoch {epoch + 1}: non-finite parameters "
                    f"(learning_rate={config.learning_rate})"
                )
            per_epoch[epoch] = probs[np.arange(n), targets]

    records = [
        ConfidenceRecord.build(instance_ids[i], per_epoch[:, i]) for i in range(n)
    ]
    return ClassifierModel(weights, bias, label_set), records


def predict(
    model: ClassifierModel, features: np.ndarray
) -> tuple[list[str], np.ndarray]:
    """Argmax labels and probability rows; ties go to the lowest label index."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.weights.shape[1]:
        raise ValueError(
            f"feature dim {features.shape} does not match model dim "
            f"{model.weights.shape[1]}"
        )
    probs = softmax(features @ model.weights.T + model.bias)
    labels = [model.label_set[i] for i in np.argmax(probs, axis=1)]
    return labels, probs


def macro_f1_detail(
    true_labels: Sequence[str],
    predicted_labels: Sequence[str],
    label_set: LabelSet,
) -> tuple[float, dict[str, float], list[str]]:
    """Macro F1, per-label F1, and the labels absent from truth and prediction.

    Per-label F1 is 0 when precision + recall is 0; absent labels contribute
    0 to the unweighted mean over the full vocabulary.
    """
    if len(true_labels) != len(predicted_labels):
        raise ValueError(
            f"length mismatch: {len(true_labels)} true vs {len(predicted_labels)} predicted"
        )
    per_label: dict[str, float] = {}
    absent: list[str] = []
    for name in label_set:
        tp = fp = fn = 0
        for t, p in zip(true_labels, predicted_labels):
            if p == name and t == name:
                tp += 1
            elif p == name:
                fp += 1
            elif t == name:
                fn += 1
        if tp + fp + fn == 0:
            absent.append(name)
            per_label[name] = 0.0
            continue
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_label[name] = (
            2 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    value = math.fsum(per_label.values()) / len(label_set)
    return value, per_label, absent


def macro_f1(
    true_labels: Sequence[str],
    predicted_labels: Sequence[str],
    label_set: LabelSet,
) -> float:
    return macro_f1_detail(true_labels, predicted_labels, label_set)[0]


def accuracy(true_labels: Sequence[str], predicted_labels: Sequence[str]) -> float:
    if len(true_labels) != len(predicted_labels):
        raise ValueError(
            f"length mismatch: {len(true_labels)} true vs {len(predicted_labels)} predicted"
        )
    if not true_labels:
        raise ValueError("accuracy undefined for empty sequences")
    hits = sum(1 for t, p in zip(true_labels, predicted_labels) if t == p)
    return hits / len(true_labels)


def confidence_histogram(confidences: Sequence[float]) -> list[int]:
    """Counts over 20 uniform bins of [0, 1]; 1.0 lands in the last bin."""
    hist, _ = np.histogram(
        np.asarray(confidences, dtype=np.float64), bins=CONFIDENCE_BINS, range=(0.0, 1.0)
    )
    return [int(c) for c in hist]


def _evaluate_cell(
    train_ds: Dataset,
    test_ds: Dataset,
    store: EmbeddingStore,
    cell_seed: int,
    config: TrainConfig,
    result: EvalResult,
) -> EvalResult:
    result.n_train = train_ds.n_instances
    result.n_test = test_ds.n_instances
    if train_ds.n_instances == 0 or test_ds.n_instances == 0:
        result.degenerate = True
        result.note = "split produced an empty side"
        return result

    majority_train = majority_labels(train_ds, cell_seed)
    majority_test = majority_labels(test_ds, cell_seed)
    label_set = train_ds.label_set
    y_train = [label_set.index[majority_train[iid].label] for iid in train_ds.instance_ids]
    if len(set(y_train)) < 2:
        result.degenerate = True
        result.note = "single-class training set"
        return result

    x_train = store.matrix(train_ds.instance_ids).astype(np.float64)
    x_test = store.matrix(test_ds.instance_ids).astype(np.float64)
    model, records = train(
        x_train,
        y_train,
        replace(config, seed=cell_seed),
        label_set,
        train_ds.instance_ids,
    )
    predicted, _ = predict(model, x_test)
    true_test = [majority_test[iid].label for iid in test_ds.instance_ids]

    confidences = [r.confidence for r in records]
    result.macro_f1 = macro_f1(true_test, predicted, label_set)
    result.accuracy = accuracy(true_test, predicted)
    result.mean_confidence = math.fsum(confidences) / len(confidences)
    result.confidence_hist = confidence_histogram(confidences)
    return result


def sweep(
    dataset: Dataset,
    store: EmbeddingStore,
    strategies: Sequence[str],
    fractions: Sequence[float],
    n_seeds: int,
    config: Optional[TrainConfig] = None,
    master_seed: int = 0,
    threads: Optional[int] = None,
    clean_test: bool = False,
) -> list[EvalResult]:
    """Full strategy x fraction x seed grid of filter-train-evaluate runs.

    Every cell derives its own streams from the master seed, so the grid is
    deterministic and cells can run in any order. Majority/split/train
    streams depend only on (fraction, seed index), which keeps fraction-0
    rows identical across strategies at equal seed.
    """
    for strategy in strategies:
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
    for fraction in fractions:
        if not 0.0 <= fraction <= 1.0:
            raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    alignment = validate_alignment(dataset, store)
    if not alignment.ok:
        raise SchemaError(
            f"embeddings missing for instances: {alignment.missing_embeddings[:5]!r}"
        )
    config = config or TrainConfig()
    threads = resolve_threads(threads)

    entropy_scores = audit_entropy(dataset) if "entropy" in strategies else None
    judgment_scores = (
        audit_silhouette(dataset, store, threads)
        if "silhouette" in strategies
        else None
    )

    cells = []
    for strategy in strategies:
        for fraction in fractions:
            for seed_idx in range(n_seeds):
                cells.append((strategy, float(fraction), seed_idx))

    def run_cell(cell: tuple[str, float, int]) -> EvalResult:
        strategy, fraction, seed_idx = cell
        cell_seed = derive_seed(master_seed, "cell", repr(fraction), seed_idx)
        filter_seed = derive_seed(
            master_seed, "filter", strategy, repr(fraction), seed_idx
        )
        result = EvalResult(
            strategy=strategy,
            fraction=fraction,
            seed=seed_idx,
            macro_f1=None,
            accuracy=None,
            mean_confidence=None,
            confidence_hist=None,
            n_train=0,
            n_test=0,
        )
        try:
            if clean_test:
                # deviation mode: split first, filter only the train side,
                # keep the test side unfiltered
                train_full, test_ds = split(dataset, seed=cell_seed)
                train_ds, _ = apply_filter(
                    train_full,
                    strategy,
                    fraction,
                    seed=filter_seed,
                    entropy_scores=entropy_scores,
                    judgment_scores=judgment_scores,
                )
            else:
                filtered, _ = apply_filter(
                    dataset,
                    strategy,
                    fraction,
                    seed=filter_seed,
                    entropy_scores=entropy_scores,
                    judgment_scores=judgment_scores,
                )
                if filtered.n_instances == 0:
                    result.degenerate = True
                    result.note = "empty dataset after filtering"
                    return result
                train_ds, test_ds = split(filtered, seed=cell_seed)
            return _evaluate_cell(
                train_ds, test_ds, store, cell_seed, config, result
            )
        except (ValueError, RuntimeError) as exc:
            result.degenerate = True
            result.note = str(exc)
            return result

    if threads <= 1:
        return [run_cell(cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_cell, cells))


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_sweep_csv(results: Sequence[EvalResult], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_CSV_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.strategy,
                    _csv_value(r.fraction),
                    r.seed,
                    _csv_value(r.macro_f1),
                    _csv_value(r.accuracy),
                    _csv_value(r.mean_confidence),
                    r.n_train,
                    r.n_test,
                    _csv_value(r.degenerate),
                ]
            )


def write_sweep_json(results: Sequence[EvalResult], path, meta: Optional[dict] = None) -> None:
    payload = {
        "meta": meta or {},
        "confidence_bins": CONFIDENCE_BINS,
        "results": [
            {
                "strategy": r.strategy,
                "fraction": r.fraction,
                "seed": r.seed,
                "macro_f1": r.macro_f1,
                "accuracy": r.accuracy,
                "mean_confidence": r.mean_confidence,
                "confidence_hist": r.confidence_hist,
                "n_train": r.n_train,
                "n_test": r.n_test,
                "degenerate": r.degenerate,
                "note": r.note,
            }
            for r in results
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
