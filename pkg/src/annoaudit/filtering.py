"""Dataset refinement: remove noisy instances or judgments, or random baselines.

Four strategies share one contract: remove exactly floor(fraction * N) items
of the strategy's granularity, under a fixed total order, so removal sets
nest as the fraction grows.

  entropy           whole instances, highest entropy first; equal entropies
                    removed in ascending instance_id order
  silhouette        individual judgments, lowest score first; equal scores
                    removed in ascending (instance_id, label, annotator_id)
                    order
  random_instances  seeded uniform sample of instances
  random_judgments  seeded uniform sample of judgments

Instances that lose every judgment are dropped from the refined dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .entropy import EntropyScore
from .model import Dataset, Judgment
from .rng import RandomStream, derive_seed
from .util import scaled_count

STRATEGIES = ("entropy", "silhouette", "random_instances", "random_judgments")
_GRANULARITY = {
    "entropy": "instances",
    "silhouette": "judgments",
    "random_instances": "instances",
    "random_judgments": "judgments",
}


@dataclass(frozen=True)
class FilterPlan:
    strategy: str
    fraction: float
    seed: Optional[int] = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}"
            )
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must be in [0, 1], got {self.fraction}")
        if self.strategy.startswith("random") and self.seed is None:
            raise ValueError(f"strategy {self.strategy!r} requires a seed")


@dataclass
class RemovalLog:
    """What a filter removed, in removal order, plus what survived."""

    strategy: str
    fraction: float
    granularity: str
    seed: Optional[int] = None
    removed_instances: list[str] = field(default_factory=list)
    removed_judgments: list[Judgment] = field(default_factory=list)
    kept_instances: int = 0
    kept_judgments: int = 0

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "fraction": self.fraction,
            "granularity": self.granularity,
            "seed": self.seed,
            "removed_count": (
                len(self.removed_instances)
                if self.granularity == "instances"
                else len(self.removed_judgments)
            ),
            "kept_instances": self.kept_instances,
            "kept_judgments": self.kept_judgments,
            "removed_instances": self.removed_instances,
            "removed_judgments": [
                {
                    "instance_id": j.instance_id,
                    "label": j.label,
                    "annotator_id": j.annotator_id,
                }
                for j in self.removed_judgments
            ],
        }


def _check_fraction(fraction: float) -> None:
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")


def _finish_instance_removal(
    dataset: Dataset, removed_ids: list[str], log: RemovalLog
) -> tuple[Dataset, RemovalLog]:
    removed = set(removed_ids)
    filtered = dataset.subset_instances(
        iid for iid in dataset.instance_ids if iid not in removed
    )
    log.removed_instances = removed_ids
    log.removed_judgments = [j for j in dataset.judgments if j.instance_id in removed]
    log.kept_instances = filtered.n_instances
    log.kept_judgments = filtered.n_judgments
    return filtered, log


def filter_entropy(
    dataset: Dataset, scores: Sequence[EntropyScore], fraction: float
) -> tuple[Dataset, RemovalLog]:
    """Remove the floor(fraction * M) highest-entropy instances."""
    _check_fraction(fraction)
    by_id = {s.instance_id: s.entropy for s in scores}
    missing = [iid for iid in dataset.instance_ids if iid not in by_id]
    if missing:
        raise ValueError(f"entropy scores missing for instances: {missing[:5]!r}")
    k = scaled_count(fraction, dataset.n_instances)
    ranked = sorted(dataset.instance_ids, key=lambda iid: (-by_id[iid], iid))
    log = RemovalLog("entropy", fraction, "instances")
    return _finish_instance_removal(dataset, ranked[:k], log)


def filter_silhouette(
    dataset: Dataset, judgment_scores: Mapping[Judgment, float], fraction: float
) -> tuple[Dataset, RemovalLog]:
    """Remove the floor(fraction * J) lowest-silhouette judgments.

    An instance survives as long as at least one of its judgments does.
    """
    _check_fraction(fraction)
    missing = [j for j in dataset.judgments if j not in judgment_scores]
    if missing:
        raise ValueError(
            f"silhouette scores missing for judgments: {[j.key for j in missing[:5]]!r}"
        )
    k = scaled_count(fraction, dataset.n_judgments)
    ranked = sorted(
        dataset.judgments,
        key=lambda j: (judgment_scores[j], j.instance_id, j.label, j.annotator_id),
    )
    removed = ranked[:k]
    filtered = dataset.without_judgments(removed)
    surviving = set(filtered.instance_ids)
    log = RemovalLog("silhouette", fraction, "judgments")
    log.removed_judgments = removed
    log.removed_instances = [
        iid for iid in dataset.instance_ids if iid not in surviving
    ]
    log.kept_instances = filtered.n_instances
    log.kept_judgments = filtered.n_judgments
    return filtered, log


def filter_random(
    dataset: Dataset, fraction: float, seed: int, granularity: str = "instances"
) -> tuple[Dataset, RemovalLog]:
    """Remove a seeded uniform sample at the given granularity."""
    _check_fraction(fraction)
    if granularity not in ("instances", "judgments"):
        raise ValueError(
            f"granularity must be 'instances' or 'judgments', got {granularity!r}"
        )
    stream = RandomStream(derive_seed(seed, "filter", granularity))
    if granularity == "instances":
        k = scaled_count(fraction, dataset.n_instances)
        picks = stream.sample_indices(dataset.n_instances, k)
        ids = dataset.instance_ids
        log = RemovalLog("random_instances", fraction, "instances", seed=seed)
        return _finish_instance_removal(dataset, [ids[i] for i in picks], log)

    k = scaled_count(fraction, dataset.n_judgments)
    picks = stream.sample_indices(dataset.n_judgments, k)
    removed = [dataset.judgments[i] for i in picks]
    filtered = dataset.without_judgments(removed)
    surviving = set(filtered.instance_ids)
    log = RemovalLog("random_judgments", fraction, "judgments", seed=seed)
    log.removed_judgments = removed
    log.removed_instances = [
        iid for iid in dataset.instance_ids if iid not in surviving
    ]
    log.kept_instances = filtered.n_instances
    log.kept_judgments = filtered.n_judgments
    return filtered, log


def apply_filter(
    dataset: Dataset,
    strategy: str,
    fraction: float,
    seed: Optional[int] = None,
    entropy_scores: Optional[Sequence[EntropyScore]] = None,
    judgment_scores: Optional[Mapping[Judgment, float]] = None,
) -> tuple[Dataset, RemovalLog]:
    """Dispatch a FilterPlan-shaped request to the right strategy."""
    plan = FilterPlan(strategy, fraction, seed)
    if plan.strategy == "entropy":
        if entropy_scores is None:
            raise ValueError("entropy strategy requires entropy scores")
        return filter_entropy(dataset, entropy_scores, plan.fraction)
    if plan.strategy == "silhouette":
        if judgment_scores is None:
            raise ValueError("silhouette strategy requires judgment scores")
        return filter_silhouette(dataset, judgment_scores, plan.fraction)
    return filter_random(
        dataset, plan.fraction, plan.seed, _GRANULARITY[plan.strategy]
    )
