"""Majority-vote training label per instance, with seeded tie-breaking.

Ties consume exactly one draw from the tie-break stream; untied instances
consume none, so adding or removing untied instances leaves every other
tie-break unchanged. Instances are processed in canonical order, which is
part of the reproducibility contract.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import CountVector, Dataset, label_counts
from .rng import RandomStream, derive_seed


@dataclass(frozen=True)
class MajorityLabel:
    instance_id: str
    label: str
    count: int
    tied: bool


def majority_label(
    counts: CountVector, stream: RandomStream, instance_id: str = ""
) -> MajorityLabel:
    """Argmax label of a count vector; tied maxima resolved by one draw."""
    if counts.total < 1:
        raise ValueError("majority undefined for all-zero counts")
    top = max(counts.counts)
    winners = [i for i, c in enumerate(counts.counts) if c == top]
    tied = len(winners) > 1
    idx = winners[stream.pick(len(winners))] if tied else winners[0]
    return MajorityLabel(instance_id, counts.labels[idx], top, tied)


def majority_labels(dataset: Dataset, seed: int) -> dict[str, MajorityLabel]:
    """Majority label per instance, keyed by id in canonical order."""
    stream = RandomStream(derive_seed(seed, "tiebreak"))
    return {
        iid: majority_label(label_counts(dataset, iid), stream, iid)
        for iid in dataset.instance_ids
    }
