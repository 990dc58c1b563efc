"""Independent reference implementations used as oracles by the tests.

These deliberately avoid the package's optimized code paths: the silhouette
reference walks points one at a time with direct coordinate differences
(no norm expansion, no blocking), and the entropy reference is a plain
left-to-right summation of the defining formula.
"""

from __future__ import annotations

import math

import numpy as np

from annoaudit import AnnotationRecord, Dataset, EmbeddingStore, LabelSet


def brute_entropy(counts) -> float:
    total = sum(counts)
    acc = 0.0
    for c in counts:
        if c:
            p = c / total
            acc += p * math.log(p)
    return -acc


def naive_silhouette(X: np.ndarray, cluster_ids) -> list[float]:
    """O(P^2) double-loop silhouette over Euclidean distances.

    One direct-difference distance row per point (no norm expansion, no
    blocking, numpy pairwise-sum means), so it shares no arithmetic with
    the optimized kernel it checks.
    """
    X = np.asarray(X, dtype=np.float64)
    cluster_ids = np.asarray(cluster_ids)
    members = {
        int(cid): np.flatnonzero(cluster_ids == cid)
        for cid in sorted(set(int(c) for c in cluster_ids))
    }
    scores = []
    for i in range(len(X)):
        row = np.sqrt(((X - X[i]) ** 2).sum(axis=1))
        own = int(cluster_ids[i])
        b = math.inf
        for cid, idx in members.items():
            if cid != own:
                b = min(b, float(row[idx].mean()))
        own_others = members[own][members[own] != i]
        if own_others.size == 0:
            scores.append(0.0)
            continue
        a = float(row[own_others].mean())
        denom = max(a, b)
        scores.append(0.0 if denom == 0.0 else (b - a) / denom)
    return scores


def points_dataset(X, cluster_ids, labels=None):
    """One single-judgment instance per row, labeled by its cluster id."""
    X = np.asarray(X, dtype=np.float32)
    if X.ndim == 1:
        X = X[:, None]
    n_clusters = int(max(cluster_ids)) + 1
    if labels is None:
        labels = [f"c{k}" for k in range(n_clusters)]
    records = []
    vectors = {}
    for i, cid in enumerate(cluster_ids):
        iid = f"p{i:04d}"
        records.append(AnnotationRecord(iid, "a0", (labels[int(cid)],)))
        vectors[iid] = X[i]
    dataset = Dataset.from_records(records, label_set=LabelSet(labels))
    store = EmbeddingStore(X.shape[1], vectors)
    return dataset, store


def judgments_multiset(dataset: Dataset):
    return sorted(j.key for j in dataset.judgments)
