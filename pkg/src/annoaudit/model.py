"""Core domain types: label vocabularies, judgments, and datasets.

All types are immutable after construction and safe to share across
threads. The atomic unit of annotation is a Judgment: one
(instance, label, annotator) triple. Multi-label annotation records are
expanded into judgments before any metric is computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence


class SchemaError(ValueError):
    """Input records or files violate the annotation schema."""


@dataclass(frozen=True)
class Judgment:
    """One label assigned to one instance by one annotator."""

    instance_id: str
    label: str
    annotator_id: str

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.instance_id, self.label, self.annotator_id)


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's full (possibly multi-label) annotation of one instance."""

    instance_id: str
    annotator_id: str
    labels: tuple[str, ...]


class LabelSet:
    """Ordered, duplicate-free label vocabulary.

    Order is significant: count vectors, histograms, and classifier outputs
    all align to it. Vocabularies inferred from data are ordered
    lexicographically; explicitly declared vocabularies keep their order.
    """

    __slots__ = ("labels", "index")

    def __init__(self, labels: Iterable[str]):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            seen, dupes = set(), []
            for name in labels:
                if name in seen and name not in dupes:
                    dupes.append(name)
                seen.add(name)
            raise SchemaError(f"duplicate labels in label set: {dupes}")
        if len(labels) < 2:
            raise SchemaError(
                f"label set needs at least 2 labels, got {len(labels)}"
            )
        if not all(isinstance(name, str) and name for name in labels):
            raise SchemaError("labels must be non-empty strings")
        self.labels = labels
        self.index = {name: i for i, name in enumerate(labels)}

    @classmethod
    def from_observed(cls, labels: Iterable[str]) -> "LabelSet":
        """Vocabulary inferred from data: lexicographic order."""
        return cls(sorted(set(labels)))

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.index

    def __getitem__(self, i: int) -> str:
        return self.labels[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LabelSet) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def __repr__(self) -> str:
        return f"LabelSet({list(self.labels)!r})"


@dataclass(frozen=True)
class CountVector:
    """Per-label annotator counts for one instance, aligned to LabelSet order."""

    labels: LabelSet
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != len(self.labels):
            raise ValueError(
                f"count vector length {len(self.counts)} != label set size {len(self.labels)}"
            )
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict[str, int]:
        return {name: c for name, c in zip(self.labels.labels, self.counts) if c}


def expand_judgments(
    records: Sequence[AnnotationRecord],
    label_set: Optional[LabelSet] = None,
) -> list[Judgment]:
    """Expand multi-label records into unit judgments.

    Emits one Judgment per (record, label) pair, preserving record order and
    the label order within each record. Rejects duplicate
    (instance, annotator) records, duplicate labels within a record, and
    (when a vocabulary is given) unknown labels.
    """
    seen_pairs: set[tuple[str, str]] = set()
    out: list[Judgment] = []
    for rec in records:
        pair = (rec.instance_id, rec.annotator_id)
        if pair in seen_pairs:
            raise SchemaError(
                f"duplicate record for instance/annotator pair {pair!r}"
            )
        seen_pairs.add(pair)
        if not rec.labels:
            raise SchemaError(f"record {pair!r} has no labels")
        seen_labels: set[str] = set()
        for label in rec.labels:
            if label in seen_labels:
                raise SchemaError(
                    f"duplicate label {label!r} within record {pair!r}"
                )
            seen_labels.add(label)
            if label_set is not None and label not in label_set:
                raise SchemaError(
                    f"unknown label {label!r} in record {pair!r}"
                )
            out.append(Judgment(rec.instance_id, label, rec.annotator_id))
    return out


class Dataset:
    """Instances, their optional texts, and all judgments on them.

    Canonical instance order is the insertion order of `instances`;
    every downstream iteration, RNG stream, and report follows it.
    Instances referenced by no judgment are dropped at construction.
    """

    __slots__ = ("label_set", "instances", "judgments", "_by_instance")

    def __init__(
        self,
        label_set: LabelSet,
        instances: Mapping[str, Optional[str]],
        judgments: Sequence[Judgment],
    ):
        by_instance: dict[str, list[Judgment]] = {}
        seen_triples: set[tuple[str, str, str]] = set()
        for j in judgments:
            if j.label not in label_set:
                raise SchemaError(
                    f"judgment label {j.label!r} not in label set"
                )
            if j.instance_id not in instances:
                raise SchemaError(
                    f"judgment references unknown instance {j.instance_id!r}"
                )
            if j.key in seen_triples:
                raise SchemaError(f"duplicate judgment {j.key!r}")
            seen_triples.add(j.key)
            by_instance.setdefault(j.instance_id, []).append(j)

        self.label_set = label_set
        # zero-judgment instances are dropped; canonical order preserved
        self.instances: dict[str, Optional[str]] = {
            iid: text for iid, text in instances.items() if iid in by_instance
        }
        self.judgments: tuple[Judgment, ...] = tuple(judgments)
        self._by_instance = {iid: tuple(js) for iid, js in by_instance.items()}

    @classmethod
    def from_records(
        cls,
        records: Sequence[AnnotationRecord],
        label_set: Optional[LabelSet] = None,
        texts: Optional[Mapping[str, str]] = None,
    ) -> "Dataset":
        """Build a dataset from annotation records.

        When no vocabulary is given it is inferred from the observed labels
        in lexicographic order.
        """
        judgments = expand_judgments(records, label_set)
        if label_set is None:
            label_set = LabelSet.from_observed(j.label for j in judgments)
        instances: dict[str, Optional[str]] = {}
        for rec in records:
            if rec.instance_id not in instances:
                instances[rec.instance_id] = (
                    texts.get(rec.instance_id) if texts else None
                )
        return cls(label_set, instances, judgments)

    @property
    def instance_ids(self) -> tuple[str, ...]:
        return tuple(self.instances.keys())

    @property
    def n_instances(self) -> int:
        return len(self.instances)

    @property
    def n_judgments(self) -> int:
        return len(self.judgments)

    def text(self, instance_id: str) -> Optional[str]:
        return self.instances[instance_id]

    def judgments_for(self, instance_id: str) -> tuple[Judgment, ...]:
        if instance_id not in self._by_instance:
            raise KeyError(f"unknown instance {instance_id!r}")
        return self._by_instance[instance_id]

    def subset_instances(self, keep: Iterable[str]) -> "Dataset":
        """Dataset restricted to the given instances, canonical order kept."""
        keep = set(keep)
        instances = {
            iid: text for iid, text in self.instances.items() if iid in keep
        }
        judgments = [j for j in self.judgments if j.instance_id in keep]
        return Dataset(self.label_set, instances, judgments)

    def without_judgments(self, removed: Iterable[Judgment]) -> "Dataset":
        """Dataset with the given judgments removed.

        Instances losing their last judgment are dropped by construction.
        """
        removed = {j.key for j in removed}
        kept = [j for j in self.judgments if j.key not in removed]
        return Dataset(self.label_set, self.instances, kept)

    def __repr__(self) -> str:
        return (
            f"Dataset(instances={self.n_instances}, judgments={self.n_judgments}, "
            f"labels={len(self.label_set)})"
        )


def label_counts(dataset: Dataset, instance_id: str) -> CountVector:
    """Per-label judgment counts for one instance."""
    counts = [0] * len(dataset.label_set)
    for j in dataset.judgments_for(instance_id):
        counts[dataset.label_set.index[j.label]] += 1
    return CountVector(dataset.label_set, tuple(counts))
