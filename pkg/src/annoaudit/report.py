"""Audit report assembly: per-instance entropy, per-judgment silhouette,
summaries, and per-majority-label histograms in plot-ready form.

Histogram grouping uses a deterministic majority rule (first maximum in
label-set order) so that audit reports never depend on a seed; the seeded
tie-break contract applies to training-label aggregation, not reporting.
"""

from __future__ import annotations

import math
import statistics
from typing import Mapping, Optional, Sequence

import numpy as np

from .entropy import EntropyScore, max_entropy
from .model import Dataset, Judgment, label_counts

HISTOGRAM_BINS = 20


def _deterministic_majority(dataset: Dataset) -> dict[str, str]:
    out = {}
    for iid in dataset.instance_ids:
        counts = label_counts(dataset, iid).counts
        out[iid] = dataset.label_set[counts.index(max(counts))]
    return out


def _summary(values: Sequence[float]) -> dict:
    return {
        "mean": math.fsum(values) / len(values),
        "median": float(statistics.median(values)),
        "min": min(values),
        "max": max(values),
    }


def _histograms_by_label(
    dataset: Dataset,
    grouped_values: Mapping[str, list[float]],
    lo: float,
    hi: float,
) -> dict:
    edges = np.linspace(lo, hi, HISTOGRAM_BINS + 1)
    histograms = {}
    for name in dataset.label_set:
        values = grouped_values.get(name, [])
        hist, _ = np.histogram(values, bins=edges) if values else (np.zeros(HISTOGRAM_BINS, dtype=int), None)
        histograms[name] = [int(c) for c in hist]
    return {"bin_edges": [float(e) for e in edges], "counts": histograms}


def build_audit_report(
    dataset: Dataset,
    entropy_scores: Optional[Sequence[EntropyScore]] = None,
    silhouette_by_judgment: Optional[Mapping[Judgment, float]] = None,
) -> dict:
    report = {
        "dataset": {
            "n_instances": dataset.n_instances,
            "n_judgments": dataset.n_judgments,
            "n_labels": len(dataset.label_set),
            "labels": list(dataset.label_set),
        },
        "majority_rule": "first_max_in_label_order",
    }
    majority = _deterministic_majority(dataset)

    if entropy_scores is not None:
        values = [s.entropy for s in entropy_scores]
        grouped: dict[str, list[float]] = {}
        for s in entropy_scores:
            grouped.setdefault(majority[s.instance_id], []).append(s.entropy)
        report["entropy"] = {
            "max_entropy": max_entropy(len(dataset.label_set)),
            "scores": [
                {
                    "instance_id": s.instance_id,
                    "entropy": s.entropy,
                    "total_judgments": s.total_judgments,
                }
                for s in entropy_scores
            ],
            "summary": _summary(values),
            "histograms": _histograms_by_label(
                dataset, grouped, 0.0, max_entropy(len(dataset.label_set))
            ),
        }

    if silhouette_by_judgment is not None:
        rows = [
            {
                "instance_id": j.instance_id,
                "label": j.label,
                "annotator_id": j.annotator_id,
                "score": silhouette_by_judgment[j],
            }
            for j in dataset.judgments
        ]
        values = [r["score"] for r in rows]
        grouped = {}
        for j in dataset.judgments:
            grouped.setdefault(majority[j.instance_id], []).append(
                silhouette_by_judgment[j]
            )
        report["silhouette"] = {
            "scores": rows,
            "summary": _summary(values),
            "histograms": _histograms_by_label(dataset, grouped, -1.0, 1.0),
        }
    return report
