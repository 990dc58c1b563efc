import statistics

import pytest

from annoaudit import (
    AnnotationRecord,
    Dataset,
    EntropyScore,
    Judgment,
    LabelSet,
    audit_silhouette,
    filter_entropy,
    filter_random,
    filter_silhouette,
)
from annoaudit.synth import SynthConfig, generate
from annoaudit.util import scaled_count
from helpers import judgments_multiset


def single_label_dataset(n, label_of=lambda i: "a"):
    ls = LabelSet(["a", "b"])
    records = [
        AnnotationRecord(f"t{i:02d}", "x", (label_of(i),)) for i in range(n)
    ]
    return Dataset.from_records(records, label_set=ls)


def entropy_scores(dataset, values):
    return [
        EntropyScore(iid, values[i], 1)
        for i, iid in enumerate(dataset.instance_ids)
    ]


class TestScaledCount:
    @pytest.mark.parametrize(
        "fraction,population,expected",
        [
            (0.2, 10, 2),
            (0.0, 10, 0),
            (1.0, 10, 10),
            (0.5, 7, 3),      # floor(3.5)
            (0.25, 100, 25),
            (0.3, 10, 3),     # decimal-exact despite binary float 0.3
            (0.1, 2000 * 3, 600),
        ],
    )
    def test_exact_floor(self, fraction, population, expected):
        assert scaled_count(fraction, population) == expected

    def test_range_checked(self):
        with pytest.raises(ValueError):
            scaled_count(1.5, 10)


class TestFilterEntropy:
    def test_removes_top_k_distinct(self):
        ds = single_label_dataset(10)
        scores = entropy_scores(ds, [i / 10 for i in range(10)])
        filtered, log = filter_entropy(ds, scores, 0.2)
        assert log.removed_instances == ["t09", "t08"]
        assert filtered.n_instances == 8
        assert log.kept_instances == 8

    def test_fraction_zero_is_identity(self):
        ds = single_label_dataset(10)
        scores = entropy_scores(ds, [i / 10 for i in range(10)])
        filtered, log = filter_entropy(ds, scores, 0.0)
        assert judgments_multiset(filtered) == judgments_multiset(ds)
        assert log.removed_instances == []

    def test_all_equal_entropies_tie_break_by_id(self):
        ds = single_label_dataset(10)
        scores = entropy_scores(ds, [0.0] * 10)
        filtered, log = filter_entropy(ds, scores, 0.1)
        assert log.removed_instances == ["t00"]
        assert filtered.n_instances == 9

    def test_bad_fraction_rejected(self):
        ds = single_label_dataset(3)
        with pytest.raises(ValueError):
            filter_entropy(ds, entropy_scores(ds, [0, 0, 0]), 1.5)

    def test_missing_scores_rejected(self):
        ds = single_label_dataset(3)
        with pytest.raises(ValueError, match="missing"):
            filter_entropy(ds, [], 0.5)

    def test_monotone_nesting(self):
        ds = single_label_dataset(12)
        scores = entropy_scores(ds, [0.1, 0.5, 0.5, 0.3, 0.0, 0.9,
                                     0.5, 0.2, 0.9, 0.0, 0.4, 0.5])
        removed_prev: set = set()
        for fraction in (0.0, 0.25, 0.5, 0.75, 1.0):
            _, log = filter_entropy(ds, scores, fraction)
            removed = set(log.removed_instances)
            assert removed_prev <= removed
            removed_prev = removed


class TestFilterSilhouette:
    def two_judgment_instance(self):
        ls = LabelSet(["a", "b"])
        records = [
            AnnotationRecord("t1", "x", ("a",)),
            AnnotationRecord("t1", "y", ("b",)),
            AnnotationRecord("t2", "x", ("a",)),
            AnnotationRecord("t3", "x", ("b",)),
        ]
        return Dataset.from_records(records, label_set=ls)

    def test_low_scoring_judgment_removed_instance_preserved(self):
        ds = self.two_judgment_instance()
        scores = {
            Judgment("t1", "a", "x"): -0.5,
            Judgment("t1", "b", "y"): 0.6,
            Judgment("t2", "a", "x"): 0.7,
            Judgment("t3", "b", "x"): 0.8,
        }
        filtered, log = filter_silhouette(ds, scores, 0.25)
        assert [j.key for j in log.removed_judgments] == [("t1", "a", "x")]
        assert "t1" in filtered.instance_ids
        assert len(filtered.judgments_for("t1")) == 1
        assert log.removed_instances == []

    def test_fraction_one_empties_dataset(self):
        ds = self.two_judgment_instance()
        scores = {j: 0.1 for j in ds.judgments}
        filtered, log = filter_silhouette(ds, scores, 1.0)
        assert filtered.n_instances == 0
        assert len(log.removed_judgments) == 4
        assert log.removed_instances == ["t1", "t2", "t3"]

    def test_floor_rule_seven_judgments(self):
        ls = LabelSet(["a", "b"])
        records = [
            AnnotationRecord(f"t{i}", "x", ("a" if i % 2 else "b",))
            for i in range(7)
        ]
        ds = Dataset.from_records(records, label_set=ls)
        scores = {j: i / 10 for i, j in enumerate(ds.judgments)}
        _, log = filter_silhouette(ds, scores, 0.5)
        assert len(log.removed_judgments) == 3

    def test_ties_break_by_triple_ascending(self):
        ls = LabelSet(["a", "b"])
        records = [
            AnnotationRecord("t2", "y", ("b",)),
            AnnotationRecord("t2", "x", ("a",)),
            AnnotationRecord("t1", "x", ("b",)),
        ]
        ds = Dataset.from_records(records, label_set=ls)
        scores = {j: 0.5 for j in ds.judgments}
        _, log = filter_silhouette(ds, scores, 0.67)
        assert [j.key for j in log.removed_judgments] == [
            ("t1", "b", "x"),
            ("t2", "a", "x"),
        ]

    def test_subset_property(self):
        ds = self.two_judgment_instance()
        scores = {j: i / 10 for i, j in enumerate(ds.judgments)}
        filtered, _ = filter_silhouette(ds, scores, 0.5)
        assert set(judgments_multiset(filtered)) <= set(judgments_multiset(ds))


class TestFilterRandom:
    def test_same_seed_identical(self):
        ds = single_label_dataset(30)
        a, log_a = filter_random(ds, 0.4, seed=7, granularity="instances")
        b, log_b = filter_random(ds, 0.4, seed=7, granularity="instances")
        assert judgments_multiset(a) == judgments_multiset(b)
        assert log_a.removed_instances == log_b.removed_instances

    def test_fraction_zero_identity(self):
        ds = single_label_dataset(5)
        filtered, _ = filter_random(ds, 0.0, seed=3, granularity="instances")
        assert judgments_multiset(filtered) == judgments_multiset(ds)

    def test_exact_count_100_quarter(self):
        ds = single_label_dataset(100)
        _, log = filter_random(ds, 0.25, seed=1, granularity="instances")
        assert len(log.removed_instances) == 25
        assert log.kept_instances == 75

    def test_judgment_granularity(self):
        ds = single_label_dataset(20)
        filtered, log = filter_random(ds, 0.5, seed=2, granularity="judgments")
        assert len(log.removed_judgments) == 10
        assert filtered.n_judgments == 10

    def test_different_seeds_differ(self):
        ds = single_label_dataset(40)
        _, log_a = filter_random(ds, 0.5, seed=1, granularity="instances")
        _, log_b = filter_random(ds, 0.5, seed=2, granularity="instances")
        assert log_a.removed_instances != log_b.removed_instances

    def test_bad_granularity(self):
        ds = single_label_dataset(5)
        with pytest.raises(ValueError, match="granularity"):
            filter_random(ds, 0.5, seed=1, granularity="labels")


def test_reaudit_mean_silhouette_improves_on_planted_noise():
    # removing the lowest-scoring judgments must not lower the recomputed
    # mean silhouette of the survivors, on data with known mislabels
    improvements = []
    for seed in range(5):
        config = SynthConfig(
            n_labels=3, dim=8, n_instances=150, annotators_per_instance=3,
            mislabel_rate=0.25, cluster_separation=8.0, seed=seed,
        )
        dataset, store, _ = generate(config)
        before = audit_silhouette(dataset, store, threads=1)
        filtered, _ = filter_silhouette(dataset, before, 0.2)
        after = audit_silhouette(filtered, store, threads=1)
        improvements.append(
            statistics.mean(after.values()) - statistics.mean(before.values())
        )
    assert all(delta > 0 for delta in improvements)
