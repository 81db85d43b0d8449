"""Featurization and seeded clustering of (location class, task type) pairs."""

from __future__ import annotations

import numpy as np
import pytest

from mobicrowd.errors import NoDataError, TooFewPointsError
from mobicrowd.geolearn import (
    ClusterResult,
    LocationFeature,
    OutcomeSample,
    SeedLabel,
    Verdict,
    featurize,
    label_efficiency,
    seeded_cluster,
)


def samples_for(cid, tt, n, answered_frac=1.0, correct_frac=1.0, prs=0.8):
    n_ans = int(round(answered_frac * n))
    n_cor = int(round(correct_frac * n_ans))
    rows = []
    for i in range(n):
        answered = i < n_ans
        rows.append(
            OutcomeSample(
                location_class=cid,
                task_type=tt,
                answered=answered,
                correct=answered and i < n_cor,
                prs=prs if answered else 0.0,
            )
        )
    return rows


def feature(cid, tt, acc, prs, rate=1.0, n=50):
    return LocationFeature(
        class_id=cid,
        task_type=tt,
        mean_accuracy=acc,
        mean_prs=prs,
        response_rate=rate,
        sample_count=n,
    )


class TestFeaturize:
    def test_means_over_answered_only(self):
        rows = samples_for(1, 0, 10, answered_frac=0.8, correct_frac=0.75, prs=0.6)
        (f,) = featurize(rows, min_samples=5)
        assert f.class_id == 1 and f.task_type == 0
        assert f.response_rate == pytest.approx(0.8)
        assert f.mean_accuracy == pytest.approx(0.75)
        assert f.mean_prs == pytest.approx(0.6)
        assert f.sample_count == 10

    def test_small_groups_are_dropped(self):
        rows = samples_for(1, 0, 30) + samples_for(2, 0, 5)
        feats = featurize(rows, min_samples=20)
        assert [(f.class_id, f.task_type) for f in feats] == [(1, 0)]

    def test_all_groups_small_gives_empty_tuple(self):
        assert featurize(samples_for(1, 0, 3), min_samples=20) == ()

    def test_zero_samples_rejected(self):
        with pytest.raises(NoDataError):
            featurize([])

    def test_pairs_come_out_sorted(self):
        rows = (
            samples_for(3, 1, 10)
            + samples_for(1, 2, 10)
            + samples_for(1, 0, 10)
        )
        feats = featurize(rows, min_samples=5)
        assert [(f.class_id, f.task_type) for f in feats] == [(1, 0), (1, 2), (3, 1)]

    def test_unanswered_group_scores_zero(self):
        rows = samples_for(4, 0, 10, answered_frac=0.0)
        (f,) = featurize(rows, min_samples=5)
        assert f.mean_accuracy == 0.0 and f.mean_prs == 0.0 and f.response_rate == 0.0


class TestSeededCluster:
    def _separable(self):
        good = [feature(c, 0, 0.9 + 0.01 * c, 0.9, 0.95) for c in range(1, 5)]
        bad = [feature(c, 1, 0.35 + 0.01 * c, 0.2, 0.5) for c in range(1, 5)]
        return good + bad

    def test_separable_data_splits_cleanly(self):
        feats = self._separable()
        result = seeded_cluster(feats, k=2, seed=0)
        labels = result.labels
        assert len(set(labels[:4])) == 1
        assert len(set(labels[4:])) == 1
        assert labels[0] != labels[4]
        assert result.converged and not result.degenerate

    def test_seeds_pin_cluster_identity(self):
        feats = self._separable()
        seeds = (
            SeedLabel(1, 0, Verdict.EFFICIENT),
            SeedLabel(1, 1, Verdict.INEFFICIENT),
        )
        result = seeded_cluster(feats, seeds=seeds, k=2, seed=0)
        # seeded rows stay put and drag their lookalikes with them
        assert result.labels[:4] == (0, 0, 0, 0)
        assert result.labels[4:] == (1, 1, 1, 1)
        assert set(result.pinned) == {0, 4}

    def test_seed_for_unknown_pair_is_ignored(self):
        feats = self._separable()
        result = seeded_cluster(
            feats, seeds=(SeedLabel(99, 99, Verdict.EFFICIENT),), k=2, seed=0
        )
        assert result.pinned == ()

    def test_same_seed_same_result(self):
        feats = self._separable()
        a = seeded_cluster(feats, k=2, seed=7)
        b = seeded_cluster(feats, k=2, seed=7)
        assert a.labels == b.labels
        np.testing.assert_array_equal(a.centroids, b.centroids)

    def test_identical_rows_short_circuit(self):
        feats = [feature(c, 0, 0.5, 0.5, 0.5) for c in range(4)]
        result = seeded_cluster(feats, k=2, seed=0)
        assert result.degenerate
        assert result.labels == (0, 0, 0, 0)
        np.testing.assert_allclose(result.centroids_raw[0], [0.5, 0.5, 0.5])

    def test_raw_centroids_undo_standardization(self):
        feats = self._separable()
        result = seeded_cluster(
            feats,
            seeds=(SeedLabel(1, 0, Verdict.EFFICIENT),
                   SeedLabel(1, 1, Verdict.INEFFICIENT)),
            k=2,
            seed=0,
        )
        raw = np.array(
            [[f.mean_accuracy, f.mean_prs, f.response_rate] for f in feats]
        )
        for c in range(2):
            members = [i for i, lab in enumerate(result.labels) if lab == c]
            np.testing.assert_allclose(
                result.centroids_raw[c], raw[members].mean(axis=0), atol=1e-9
            )

    def test_too_few_rows_rejected(self):
        with pytest.raises(TooFewPointsError):
            seeded_cluster([feature(1, 0, 0.9, 0.9)], k=2)


class TestLabelEfficiency:
    def _clustered(self):
        feats = [
            feature(1, 0, 0.92, 0.85),
            feature(2, 0, 0.88, 0.80),
            feature(1, 1, 0.40, 0.30),
            feature(2, 1, 0.45, 0.25),
        ]
        seeds = (
            SeedLabel(1, 0, Verdict.EFFICIENT),
            SeedLabel(1, 1, Verdict.INEFFICIENT),
        )
        return feats, seeded_cluster(feats, seeds=seeds, k=2, seed=0)

    def test_verdicts_follow_raw_centroid_thresholds(self):
        feats, clusters = self._clustered()
        pairs = label_efficiency(clusters, feats, acc_threshold=0.7, prs_threshold=0.5)
        by_pair = {(p.class_id, p.task_type): p.verdict for p in pairs}
        assert by_pair[(1, 0)] is Verdict.EFFICIENT
        assert by_pair[(2, 0)] is Verdict.EFFICIENT
        assert by_pair[(1, 1)] is Verdict.INEFFICIENT
        assert by_pair[(2, 1)] is Verdict.INEFFICIENT

    def test_accuracy_alone_is_not_enough(self):
        # accurate but far too slow: the prs leg of the AND fails
        feats = [
            feature(1, 0, 0.95, 0.1),
            feature(2, 0, 0.93, 0.12),
            feature(1, 1, 0.2, 0.1),
            feature(2, 1, 0.25, 0.08),
        ]
        clusters = seeded_cluster(feats, k=2, seed=0)
        pairs = label_efficiency(clusters, feats, acc_threshold=0.7, prs_threshold=0.5)
        assert all(p.verdict is Verdict.INEFFICIENT for p in pairs)

    def test_confidence_is_own_margin_clipped(self):
        feats, clusters = self._clustered()
        pairs = {
            (p.class_id, p.task_type): p
            for p in label_efficiency(
                clusters, feats, acc_threshold=0.7, prs_threshold=0.5
            )
        }
        strong = pairs[(1, 0)]
        # min(0.92 - 0.7, (0.85 - 0.5) / 0.5) = 0.22
        assert strong.confidence == pytest.approx(0.22)
        weak = pairs[(2, 0)]
        assert weak.confidence == pytest.approx(0.18)
        bad = pairs[(1, 1)]
        # worse margin wins: -min(0.40 - 0.70, (0.30 - 0.50) / 0.5) = 0.40
        assert bad.confidence == pytest.approx(0.40)

    def test_straddling_pair_reads_uncertain(self):
        feats = [
            feature(1, 0, 0.71, 0.51),  # barely over both bars
            feature(2, 0, 0.95, 0.95),
            feature(1, 1, 0.2, 0.1),
            feature(2, 1, 0.25, 0.15),
        ]
        clusters = seeded_cluster(feats, k=2, seed=0)
        pairs = {
            (p.class_id, p.task_type): p
            for p in label_efficiency(clusters, feats)
        }
        assert pairs[(1, 0)].confidence < 0.05
        assert pairs[(2, 0)].confidence > 0.2

    def test_length_mismatch_rejected(self):
        feats, clusters = self._clustered()
        with pytest.raises(ValueError):
            label_efficiency(clusters, feats[:-1])

    def test_sample_counts_carry_through(self):
        feats, clusters = self._clustered()
        pairs = label_efficiency(clusters, feats)
        assert all(p.sample_count == 50 for p in pairs)
