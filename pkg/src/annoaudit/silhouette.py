"""Judgment-level noise scoring: silhouette coefficients over label clusters.

Every unique (instance, label) pair with at least one judgment is a point;
the points sharing a label form a cluster in embedding space. For a point x:

    a(x)  mean Euclidean distance to the other points of its own cluster
    b(x)  minimum over other non-empty clusters of the mean distance to
          all points of that cluster
    score (b - a) / max(a, b), or 0 for singleton clusters

A judgment whose text sits far from other same-label texts but close to a
different label's texts scores low; duplicated judgments of the same
(instance, label) pair share the point's score.

The kernel streams fixed-size row blocks of the pairwise distance matrix
(never materializing all P x P distances), computes in float64 from float32
inputs, and reduces over cluster-sorted columns in a fixed order, so
results are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ingest import EmbeddingStore
from .model import Dataset, Judgment, SchemaError, label_counts
from .util import resolve_threads

_BLOCK_ROWS = 512


@dataclass(frozen=True)
class SilhouetteScore:
    instance_id: str
    label: str
    score: float
    a: Optional[float]  # None for singleton clusters
    b: float


class ClusterPointSet:
    """Deduplicated (instance, label) points with their cluster assignment."""

    __slots__ = ("pairs", "matrix", "cluster_ids", "label_set")

    def __init__(self, pairs, matrix, cluster_ids, label_set):
        self.pairs: list[tuple[str, str]] = pairs
        self.matrix: np.ndarray = matrix          # (P, D) float64
        self.cluster_ids: np.ndarray = cluster_ids  # (P,) label indices
        self.label_set = label_set

    def __len__(self) -> int:
        return len(self.pairs)

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.cluster_ids, minlength=len(self.label_set))


def build_points(dataset: Dataset, store: EmbeddingStore) -> ClusterPointSet:
    """Collect the unique (instance, label) points of a dataset.

    Point order is canonical: instance order, then label-set order within
    an instance. Requires an embedding for every instance and at least two
    non-empty label clusters.
    """
    pairs: list[tuple[str, str]] = []
    cluster_ids: list[int] = []
    for iid in dataset.instance_ids:
        if iid not in store:
            raise SchemaError(f"no embedding for instance {iid!r}")
        counts = label_counts(dataset, iid)
        for idx, count in enumerate(counts.counts):
            if count:
                pairs.append((iid, dataset.label_set[idx]))
                cluster_ids.append(idx)
    if len(set(cluster_ids)) < 2:
        raise ValueError(
            "silhouette undefined: need at least 2 non-empty label clusters"
        )
    matrix = np.empty((len(pairs), store.dim), dtype=np.float64)
    for row, (iid, _) in enumerate(pairs):
        matrix[row] = store.vector(iid)
    return ClusterPointSet(
        pairs, matrix, np.asarray(cluster_ids, dtype=np.int64), dataset.label_set
    )


def _cluster_distance_sums(points: ClusterPointSet, threads: int) -> np.ndarray:
    """(P, K) sums of Euclidean distances from each point to each cluster.

    Self-distances are excluded by pinning the diagonal to exact zero,
    which also removes the sqrt round-off of the norm expansion there.
    """
    X = points.matrix
    n_points = len(points)
    n_clusters = len(points.label_set)

    order = np.argsort(points.cluster_ids, kind="stable")
    x_sorted = np.ascontiguousarray(X[order])
    cids_sorted = points.cluster_ids[order]
    present, starts = np.unique(cids_sorted, return_index=True)

    norms = np.einsum("ij,ij->i", X, X)
    norms_sorted = norms[order]
    col_of = np.empty(n_points, dtype=np.int64)
    col_of[order] = np.arange(n_points)

    sums = np.zeros((n_points, n_clusters), dtype=np.float64)
    xt_sorted = x_sorted.T

    def run_block(row0: int) -> None:
        row1 = min(row0 + _BLOCK_ROWS, n_points)
        dist = X[row0:row1] @ xt_sorted
        dist *= -2.0
        dist += norms[row0:row1, None]
        dist += norms_sorted[None, :]
        np.maximum(dist, 0.0, out=dist)
        np.sqrt(dist, out=dist)
        dist[np.arange(row1 - row0), col_of[row0:row1]] = 0.0
        sums[row0:row1, present] = np.add.reduceat(dist, starts, axis=1)

    blocks = range(0, n_points, _BLOCK_ROWS)
    if threads <= 1:
        for row0 in blocks:
            run_block(row0)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_block, blocks))
    return sums


def silhouette_scores(
    points: ClusterPointSet, threads: Optional[int] = None
) -> list[SilhouetteScore]:
    """Silhouette coefficient per point, in point order."""
    threads = resolve_threads(threads)
    sums = _cluster_distance_sums(points, threads)
    sizes = points.cluster_sizes()
    nonempty = np.flatnonzero(sizes)

    out: list[SilhouetteScore] = []
    for row, (iid, label) in enumerate(points.pairs):
        own = points.cluster_ids[row]
        other = nonempty[nonempty != own]
        b = float(np.min(sums[row, other] / sizes[other]))
        if sizes[own] < 2:
            out.append(SilhouetteScore(iid, label, 0.0, None, b))
            continue
        a = float(sums[row, own] / (sizes[own] - 1))
        denom = max(a, b)
        score = 0.0 if denom == 0.0 else (b - a) / denom
        out.append(SilhouetteScore(iid, label, score, a, b))
    return out


def audit_silhouette(
    dataset: Dataset, store: EmbeddingStore, threads: Optional[int] = None
) -> dict[Judgment, float]:
    """Silhouette score per judgment.

    Judgments sharing an (instance, label) pair share the pair's score.
    """
    points = build_points(dataset, store)
    scores = silhouette_scores(points, threads)
    by_pair = {(s.instance_id, s.label): s.score for s in scores}
    return {j: by_pair[(j.instance_id, j.label)] for j in dataset.judgments}
