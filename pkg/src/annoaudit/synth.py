"""Synthetic annotated datasets with planted clusters and known noise.

Each instance gets a true latent label and an embedding drawn from an
isotropic unit Gaussian around that label's centroid (centroids sit at
separation * e_k on the coordinate axes, so the dim must be >= the label
count). Each simulated annotator then reports:

  the true label                      with probability 1 - mislabel - subjective
  a uniform wrong label               with probability mislabel      (flag: mislabeled)
  one of the two confusable labels    with probability subjective    (flag: subjective)

Confusable pairs are (k, k+1) for even k; the last label of an odd-sized
vocabulary pairs backward. A subjective draw picks uniformly between the
true label and its partner, modeling systematic disagreement rather than
error, and keeps the subjective flag even when it lands on the true label.

Generation consumes a single documented stream in instance order:
1 integer draw for the true label, 2*dim draws for the embedding, then per
annotator 1 uniform for the branch plus 1 integer draw inside the
mislabeled/subjective branches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
import numpy as np

from .ingest import EmbeddingStore
from .model import AnnotationRecord, Dataset, LabelSet
from .rng import RandomStream, derive_seed

CLEAN = "clean"
MISLABELED = "mislabeled"
SUBJECTIVE = "subjective"


@dataclass(frozen=True)
class SynthConfig:
    n_labels: int
    dim: int
    n_instances: int
    annotators_per_instance: int
    mislabel_rate: float
    subjective_rate: float = 0.0
    cluster_separation: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.n_labels < 2:
            raise ValueError(f"n_labels must be >= 2, got {self.n_labels}")
        if self.dim < self.n_labels:
            raise ValueError(
                f"dim must be >= n_labels for axis centroids, got {self.dim} < {self.n_labels}"
            )
        if self.n_instances < 1:
            raise ValueError(f"n_instances must be >= 1, got {self.n_instances}")
        if self.annotators_per_instance < 1:
            raise ValueError(
                f"annotators_per_instance must be >= 1, got {self.annotators_per_instance}"
            )
        if self.mislabel_rate < 0 or self.subjective_rate < 0:
            raise ValueError("noise rates must be non-negative")
        if self.mislabel_rate + self.subjective_rate > 1:
            raise ValueError(
                f"mislabel_rate + subjective_rate must be <= 1, got "
                f"{self.mislabel_rate} + {self.subjective_rate}"
            )
        if self.cluster_separation < 0:
            raise ValueError("cluster_separation must be non-negative")


@dataclass
class NoiseMask:
    """Ground truth of the generator: latent labels and per-judgment flags."""

    true_labels: dict[str, str]
    flags: dict[tuple[str, str, str], str] = field(default_factory=dict)

    def flagged(self, flag: str) -> set[tuple[str, str, str]]:
        return {key for key, value in self.flags.items() if value == flag}

    def to_json_dict(self) -> dict:
        return {
            "true_labels": self.true_labels,
            "flags": [
                {
                    "instance_id": iid,
                    "label": label,
                    "annotator_id": aid,
                    "flag": flag,
                }
                for (iid, label, aid), flag in self.flags.items()
            ],
        }


def confusable_partner(label_idx: int, n_labels: int) -> int:
    """Designated confusion partner: (k, k+1) pairs, last odd label backward."""
    partner = label_idx ^ 1
    return partner if partner < n_labels else label_idx - 1


def generate(config: SynthConfig) -> tuple[Dataset, EmbeddingStore, NoiseMask]:
    """Deterministically generate (dataset, embeddings, noise mask)."""
    k = config.n_labels
    labels = [f"L{i:03d}" for i in range(k)]
    label_set = LabelSet(labels)
    stream = RandomStream(derive_seed(config.seed, "synth"))

    clean_rate = 1.0 - config.mislabel_rate - config.subjective_rate
    id_width = max(5, len(str(config.n_instances - 1)))

    records: list[AnnotationRecord] = []
    vectors: dict[str, np.ndarray] = {}
    true_labels: dict[str, str] = {}
    flags: dict[tuple[str, str, str], str] = {}

    for i in range(config.n_instances):
        iid = f"t{i:0{id_width}d}"
        true_idx = stream.randbelow(k)
        true_labels[iid] = labels[true_idx]

        vec = stream.normals(config.dim)
        vec[true_idx] += config.cluster_separation
        vectors[iid] = vec.astype(np.float32)

        for a in range(config.annotators_per_instance):
            aid = f"a{a:02d}"
            u = stream.uniform()
            if u < clean_rate:
                label_idx, flag = true_idx, CLEAN
            elif u < clean_rate + config.mislabel_rate:
                wrong = stream.randbelow(k - 1)
                label_idx = wrong if wrong < true_idx else wrong + 1
                flag = MISLABELED
            else:
                partner = confusable_partner(true_idx, k)
                label_idx = true_idx if stream.randbelow(2) == 0 else partner
                flag = SUBJECTIVE
            label = labels[label_idx]
            records.append(AnnotationRecord(iid, aid, (label,)))
            flags[(iid, label, aid)] = flag

    dataset = Dataset.from_records(records, label_set=label_set)
    store = EmbeddingStore(config.dim, vectors)
    return dataset, store, NoiseMask(true_labels, flags)


def write_mask(mask: NoiseMask, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mask.to_json_dict(), fh, indent=2)
        fh.write("\n")


def load_mask(path) -> NoiseMask:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    flags = {
        (row["instance_id"], row["label"], row["annotator_id"]): row["flag"]
        for row in obj["flags"]
    }
    return NoiseMask(obj["true_labels"], flags)
