"""Instance-level disagreement scoring via entropy of annotator label counts.

The annotation distribution of an instance is the per-label count of
annotators who assigned that label, normalized to probabilities. Unanimous
instances score 0; an instance whose annotators all chose different labels
scores the maximum ln(N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Dataset, label_counts


@dataclass(frozen=True)
class EntropyScore:
    instance_id: str
    entropy: float
    total_judgments: int


def entropy(counts) -> float:
    """Shannon entropy (natural log) of a label count vector.

    Accepts a CountVector or any sequence of non-negative integers. Zero
    counts contribute 0 (the 0*log 0 = 0 convention); all-zero counts are a
    domain error. Terms are summed exactly with math.fsum, and equal-count
    inputs short-circuit to ln(k), so unanimous and uniform inputs hit the
    0 and ln(N) boundaries exactly.
    """
    values = getattr(counts, "counts", counts)
    if any(c < 0 for c in values):
        raise ValueError("counts must be non-negative")
    total = sum(values)
    if total < 1:
        raise ValueError("entropy undefined for all-zero counts")
    nonzero = [c for c in values if c]
    if len(set(nonzero)) == 1:
        # equal counts: ln(k) computed directly so the unanimous (0) and
        # uniform (ln N) boundaries are exact even when 1/k is not
        return 0.0 if len(nonzero) == 1 else math.log(len(nonzero))
    return -math.fsum((c / total) * math.log(c / total) for c in nonzero)


def max_entropy(n_labels: int) -> float:
    """Upper bound ln(N) for a vocabulary of N labels."""
    return math.log(n_labels)


def audit_entropy(dataset: Dataset) -> list[EntropyScore]:
    """Entropy score per instance, in canonical instance order."""
    out = []
    for iid in dataset.instance_ids:
        counts = label_counts(dataset, iid)
        out.append(EntropyScore(iid, entropy(counts), counts.total))
    return out
