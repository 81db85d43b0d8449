"""Learning which (location class, task type) pairs work well.

Outcome samples are grouped per pair, featurized, standardized and
clustered with a handful of expert-labeled pairs pinned to their cluster.
Cluster verdicts come from thresholds on the unstandardized centroids, so
"efficient" keeps its plain meaning: accurate enough and fast enough.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import NoDataError, TooFewPointsError


class Verdict(Enum):
    EFFICIENT = "efficient"
    INEFFICIENT = "inefficient"


@dataclass(frozen=True)
class OutcomeSample:
    """One delivered assignment's outcome at a (class, type) pair."""

    location_class: int
    task_type: int
    answered: bool
    correct: bool = False
    prs: float = 0.0


@dataclass(frozen=True)
class LocationFeature:
    """Aggregated behavior of one (location class, task type) pair."""

    class_id: int
    task_type: int
    mean_accuracy: float
    mean_prs: float
    response_rate: float
    sample_count: int


@dataclass(frozen=True)
class SeedLabel:
    """An expert-provided verdict that pins a pair to its cluster."""

    class_id: int
    task_type: int
    verdict: Verdict


@dataclass(frozen=True)
class EfficiencyPair:
    class_id: int
    task_type: int
    verdict: Verdict
    confidence: float
    sample_count: int


def featurize(
    samples: Iterable[OutcomeSample], min_samples: int = 20
) -> tuple[LocationFeature, ...]:
    """Group samples by (class, type) into per-pair feature rows.

    mean_accuracy and mean_prs average over answered samples only;
    response_rate is answered over offered. Pairs with fewer than
    min_samples observations are dropped as noise. Zero samples overall is
    an error, an empty result after filtering is not.
    """
    groups: dict[tuple[int, int], list[OutcomeSample]] = {}
    total = 0
    for s in samples:
        total += 1
        groups.setdefault((s.location_class, s.task_type), []).append(s)
    if total == 0:
        raise NoDataError("no outcome samples to featurize")
    out = []
    for (cid, tt) in sorted(groups):
        rows = groups[(cid, tt)]
        if len(rows) < min_samples:
            continue
        answered = [r for r in rows if r.answered]
        n_ans = len(answered)
        mean_acc = (
            sum(1 for r in answered if r.correct) / n_ans if n_ans else 0.0
        )
        mean_prs = (
            sum(r.prs for r in answered) / n_ans if n_ans else 0.0
        )
        out.append(
            LocationFeature(
                class_id=cid,
                task_type=tt,
                mean_accuracy=mean_acc,
                mean_prs=mean_prs,
                response_rate=n_ans / len(rows),
                sample_count=len(rows),
            )
        )
    return tuple(out)


@dataclass(frozen=True, eq=False)
class ClusterResult:
    """Clustering output in both standardized and raw coordinates."""

    labels: tuple[int, ...]
    centroids: np.ndarray
    centroids_raw: np.ndarray
    pinned: tuple[int, ...]
    iterations: int
    converged: bool
    degenerate: bool


def _feature_matrix(features: Sequence[LocationFeature]) -> np.ndarray:
    return np.array(
        [[f.mean_accuracy, f.mean_prs, f.response_rate] for f in features]
    )


def _farthest_point(x: np.ndarray, chosen: list[np.ndarray]) -> np.ndarray:
    """Point maximizing the distance to its nearest chosen centroid."""
    d = np.full(len(x), np.inf)
    for c in chosen:
        d = np.minimum(d, ((x - c) ** 2).sum(axis=1))
    return x[int(d.argmax())].copy()


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    cents = [x[int(rng.integers(len(x)))].copy()]
    while len(cents) < k:
        d = np.full(len(x), np.inf)
        for c in cents:
            d = np.minimum(d, ((x - c) ** 2).sum(axis=1))
        total = d.sum()
        if total <= 0.0:
            cents.append(x[int(rng.integers(len(x)))].copy())
            continue
        cents.append(x[int(rng.choice(len(x), p=d / total))].copy())
    return np.array(cents)


def seeded_cluster(
    features: Sequence[LocationFeature],
    seeds: Sequence[SeedLabel] = (),
    k: int = 2,
    max_iters: int = 300,
    tol: float = 1e-9,
    seed: int = 0,
) -> ClusterResult:
    """Cluster feature rows with expert seeds pinned in place.

    Rows are standardized per dimension before clustering. Cluster 0 is
    initialized at the mean of the efficient seeds and cluster 1 at the
    mean of the inefficient ones; clusters without seeds start at
    farthest-point picks. With no seeds at all the start is k-means++ from
    the given seed, so the result is deterministic either way. A matrix of
    identical rows short-circuits to the degenerate single-cluster answer.
    """
    if len(features) < k:
        raise TooFewPointsError(
            f"need at least {k} feature rows, got {len(features)}"
        )
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    raw = _feature_matrix(features)
    mu = raw.mean(axis=0)
    sigma = raw.std(axis=0)
    sigma = np.where(sigma > 0.0, sigma, 1.0)
    x = (raw - mu) / sigma

    if bool((raw == raw[0]).all()):
        cents = np.tile(x[0], (k, 1))
        return ClusterResult(
            labels=(0,) * len(features),
            centroids=cents,
            centroids_raw=cents * sigma + mu,
            pinned=(),
            iterations=0,
            converged=True,
            degenerate=True,
        )

    by_pair = {(f.class_id, f.task_type): i for i, f in enumerate(features)}
    pinned = np.full(len(features), -1, dtype=np.int64)
    eff_rows: list[int] = []
    ineff_rows: list[int] = []
    for s in seeds:
        i = by_pair.get((s.class_id, s.task_type))
        if i is None:
            continue
        cluster = 0 if s.verdict is Verdict.EFFICIENT else 1
        if cluster >= k:
            continue
        pinned[i] = cluster
        (eff_rows if cluster == 0 else ineff_rows).append(i)

    if eff_rows or ineff_rows:
        chosen: list[np.ndarray] = []
        init = np.empty((k, x.shape[1]))
        for c in range(k):
            rows = eff_rows if c == 0 else ineff_rows if c == 1 else []
            if rows:
                init[c] = x[rows].mean(axis=0)
            elif chosen:
                init[c] = _farthest_point(x, chosen)
            else:
                init[c] = x[0]
            chosen.append(init[c])
    else:
        init = _kmeanspp(x, k, np.random.default_rng([seed, 11]))

    labels, cents, iters = kernels.kmeans_lloyd(x, init, pinned, max_iters, tol)
    return ClusterResult(
        labels=tuple(int(v) for v in labels),
        centroids=cents,
        centroids_raw=cents * sigma + mu,
        pinned=tuple(int(i) for i in np.flatnonzero(pinned >= 0)),
        iterations=iters,
        converged=iters < max_iters,
        degenerate=False,
    )


def label_efficiency(
    clusters: ClusterResult,
    features: Sequence[LocationFeature],
    acc_threshold: float = 0.7,
    prs_threshold: float = 0.5,
) -> tuple[EfficiencyPair, ...]:
    """Turn cluster membership into one verdict per (class, type) pair.

    A cluster is efficient when its raw centroid clears both thresholds.
    Per-pair confidence is the pair's own margin against the thresholds,
    clipped to [0, 1], so a pair that straddles the bar inside a confident
    cluster still reads as uncertain.
    """
    if len(clusters.labels) != len(features):
        raise ValueError("cluster labels and features disagree in length")
    verdicts = []
    for c in range(clusters.centroids_raw.shape[0]):
        acc, prs = clusters.centroids_raw[c, 0], clusters.centroids_raw[c, 1]
        verdicts.append(
            Verdict.EFFICIENT
            if (acc >= acc_threshold and prs >= prs_threshold)
            else Verdict.INEFFICIENT
        )
    prs_scale = max(prs_threshold, 1e-9)
    out = []
    for f, lab in zip(features, clusters.labels):
        verdict = verdicts[lab]
        margin = min(
            f.mean_accuracy - acc_threshold,
            (f.mean_prs - prs_threshold) / prs_scale,
        )
        if verdict is Verdict.INEFFICIENT:
            margin = -margin
        out.append(
            EfficiencyPair(
                class_id=f.class_id,
                task_type=f.task_type,
                verdict=verdict,
                confidence=float(np.clip(margin, 0.0, 1.0)),
                sample_count=f.sample_count,
            )
        )
    return tuple(out)
