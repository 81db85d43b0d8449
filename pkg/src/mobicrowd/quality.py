"""Answer quality: response-time scores, label aggregation, credibility.

The response-time score rewards answering near a target budget: a worker
who answers in exactly the budgeted time scores 1.0, slower answers score
proportionally less, and a floor on the measured time keeps accidental
instant taps from scoring arbitrarily high.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import (
    EmptyInputError,
    EmptyMatrixError,
    KeyMismatchError,
    MissingWeightError,
    NoAnswersError,
    NonPositiveTimeError,
)

if TYPE_CHECKING:
    from .world import ActivityRecord, WorkerProfile


@dataclass(frozen=True)
class Answer:
    """One worker's response to one question."""

    assignment_id: int
    worker_id: int
    question_id: int
    labels: frozenset[int]
    read_at: float
    sent_at: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", frozenset(self.labels))

    @property
    def response_time_s(self) -> float:
        return self.sent_at - self.read_at


@dataclass(frozen=True)
class PrsParams:
    """Budget and floor for the personal response score.

    beta is the budgeted answer time in seconds; t_min clamps the measured
    time from below so a sub-second answer cannot score beta/epsilon.
    """

    beta: float = 30.0
    t_min: float = 1.0

    def __post_init__(self) -> None:
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.t_min > 0.0:
            raise ValueError(f"t_min must be positive, got {self.t_min}")


def personal_response_time(t_s: float, p: PrsParams = PrsParams()) -> float:
    """Score beta / max(t, t_min) for an answer that took t seconds."""
    if t_s <= 0.0:
        raise NonPositiveTimeError(f"response time must be positive, got {t_s}")
    return p.beta / max(t_s, p.t_min)


def delta_to_beta(t_s: float, p: PrsParams = PrsParams()) -> float:
    """Absolute gap between the measured time and the budget.

    Logged alongside the score for diagnostics; nothing downstream consumes
    it.
    """
    if t_s <= 0.0:
        raise NonPositiveTimeError(f"response time must be positive, got {t_s}")
    return abs(p.beta - t_s)


@dataclass(frozen=True)
class ResponseTimeSummary:
    total_s: float
    mean_s: float
    max_s: float
    count: int


def aggregated_response_time(times_s: Sequence[float]) -> ResponseTimeSummary:
    """Sum, mean and max of a batch of response times."""
    if not times_s:
        raise NoAnswersError("cannot aggregate zero response times")
    for t in times_s:
        if t <= 0.0:
            raise NonPositiveTimeError(f"response time must be positive, got {t}")
    total = float(sum(times_s))
    return ResponseTimeSummary(
        total_s=total,
        mean_s=total / len(times_s),
        max_s=float(max(times_s)),
        count=len(times_s),
    )


def majority_vote(answers: Sequence[Answer]) -> int:
    """Most frequent label; ties go to the smallest label id."""
    if not answers:
        raise NoAnswersError("majority vote over zero answers")
    counts: Counter[int] = Counter()
    for a in answers:
        counts.update(a.labels)
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0]


def weighted_majority(
    answers: Sequence[Answer], weights: Mapping[int, float]
) -> int:
    """Label with the largest summed worker weight; ties to the smallest id.

    With all weights equal this reduces exactly to majority_vote.
    """
    if not answers:
        raise NoAnswersError("weighted vote over zero answers")
    totals: dict[int, float] = {}
    for a in answers:
        try:
            w = weights[a.worker_id]
        except KeyError:
            raise MissingWeightError(
                f"no weight for worker {a.worker_id}"
            ) from None
        for lab in a.labels:
            totals[lab] = totals.get(lab, 0.0) + w
    best = max(totals.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0]


@dataclass(frozen=True, eq=False)
class EmResult:
    """Output of confusion-matrix aggregation.

    labels maps question id to the maximum-posterior label. confusions maps
    worker id to an (n_labels, n_labels) row-stochastic matrix indexed
    [true, given]. label_ids gives the column order of every array.
    """

    labels: Mapping[int, int]
    confusions: Mapping[int, np.ndarray]
    priors: np.ndarray
    posteriors: np.ndarray
    question_ids: tuple[int, ...]
    label_ids: tuple[int, ...]
    iterations: int


def em_aggregate(
    answers_by_question: Mapping[int, Sequence[Answer]],
    *,
    max_iters: int = 100,
    tol: float = 1e-6,
    alpha: float = 1.0,
) -> EmResult:
    """Jointly estimate labels and per-worker confusion matrices.

    Starts each question's posterior at its vote proportions, then
    alternates: re-estimate Laplace-smoothed confusion matrices and label
    priors from the posteriors, then recompute posteriors in log space.
    Stops when the largest posterior change drops below tol. Single-label
    answers only; a question with no answers is an error.
    """
    if not answers_by_question:
        raise EmptyMatrixError("no questions to aggregate")
    question_ids = tuple(sorted(answers_by_question))
    q_index = {q: i for i, q in enumerate(question_ids)}
    worker_set: set[int] = set()
    label_set: set[int] = set()
    n_answers = 0
    for qid in question_ids:
        rows = answers_by_question[qid]
        if not rows:
            raise EmptyMatrixError(f"question {qid} has no answers")
        for a in rows:
            if len(a.labels) != 1:
                raise EmptyMatrixError(
                    f"question {qid} has a non-single-label answer"
                )
            worker_set.add(a.worker_id)
            label_set.update(a.labels)
            n_answers += 1
    worker_ids = tuple(sorted(worker_set))
    label_ids = tuple(sorted(label_set))
    w_index = {w: i for i, w in enumerate(worker_ids)}
    l_index = {l: i for i, l in enumerate(label_ids)}
    q_idx = np.empty(n_answers, dtype=np.int64)
    w_idx = np.empty(n_answers, dtype=np.int64)
    lab_idx = np.empty(n_answers, dtype=np.int64)
    pos = 0
    for qid in question_ids:
        for a in answers_by_question[qid]:
            q_idx[pos] = q_index[qid]
            w_idx[pos] = w_index[a.worker_id]
            (lab,) = a.labels
            lab_idx[pos] = l_index[lab]
            pos += 1
    posts, confusion, priors, iters = kernels.em_fit(
        q_idx,
        w_idx,
        lab_idx,
        len(question_ids),
        len(worker_ids),
        len(label_ids),
        max_iters=max_iters,
        tol=tol,
        alpha=alpha,
    )
    # argmax takes the first maximum, which is the smallest label id
    winners = posts.argmax(axis=1)
    labels = {qid: label_ids[winners[i]] for i, qid in enumerate(question_ids)}
    confusions = {wid: confusion[i] for i, wid in enumerate(worker_ids)}
    return EmResult(
        labels=labels,
        confusions=confusions,
        priors=priors,
        posteriors=posts,
        question_ids=question_ids,
        label_ids=label_ids,
        iterations=iters,
    )


def multilabel_aggregate(
    answers: Sequence[Answer], threshold: float = 0.5
) -> frozenset[int]:
    """Labels named by at least a threshold fraction of answers.

    threshold lies in (0, 1]; at 1.0 only unanimous labels survive. The
    result can be empty when no label clears the bar.
    """
    if not answers:
        raise NoAnswersError("multilabel aggregation over zero answers")
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    counts: Counter[int] = Counter()
    for a in answers:
        counts.update(a.labels)
    bar = threshold * len(answers)
    return frozenset(lab for lab, c in counts.items() if c >= bar)


def _as_label_set(value) -> frozenset[int]:
    if isinstance(value, (set, frozenset)):
        return frozenset(value)
    return frozenset((value,))


def accuracy(
    estimated: Mapping[int, object], truth: Mapping[int, object]
) -> float:
    """Fraction of questions whose estimated label set matches exactly.

    Scalars and one-element sets compare equal; a multi-label estimate is
    correct only when it equals the full true set.
    """
    if not estimated:
        raise EmptyInputError("no estimated labels")
    if set(estimated) != set(truth):
        raise KeyMismatchError(
            "estimated labels and ground truth cover different questions"
        )
    hits = sum(
        1
        for qid, est in estimated.items()
        if _as_label_set(est) == _as_label_set(truth[qid])
    )
    return hits / len(estimated)


@dataclass(frozen=True)
class CredibilityWeight:
    worker_id: int
    weight: float


def credibility_weight(
    worker_id: int,
    profile: "WorkerProfile",
    task_class: int,
    w_min: float = 0.1,
) -> CredibilityWeight:
    """Vote weight from how much time a worker spends in the task's class.

    Interpolates between w_min (never there) and 1.0 (always there) using
    the profile's class affinity, so familiar surroundings earn a louder
    vote without ever silencing anyone.
    """
    if not (0.0 <= w_min <= 1.0):
        raise ValueError(f"w_min must be in [0, 1], got {w_min}")
    affinity = profile.affinity_for(task_class)
    return CredibilityWeight(
        worker_id=worker_id, weight=w_min + (1.0 - w_min) * affinity
    )


@dataclass(frozen=True)
class GamificationScore:
    worker_id: int
    score: float
    rank: int


def gamification_score(
    history: Iterable["ActivityRecord"],
    p: PrsParams,
    half_life_s: float,
    w_acc: float,
    w_eff: float,
    now: float,
) -> float:
    """Decayed engagement score over a worker's answered records.

    Each answered record contributes
    2 ** (-(now - timestamp) / half_life_s) * (w_acc * correct
    + w_eff * min(prs, 1)); the speed term is capped at 1 so racing
    through answers cannot outweigh being right. Weights must sum to 1.
    """
    if not half_life_s > 0.0:
        raise ValueError(f"half_life_s must be positive, got {half_life_s}")
    if w_acc < 0.0 or w_eff < 0.0 or abs(w_acc + w_eff - 1.0) > 1e-9:
        raise ValueError("w_acc and w_eff must be nonnegative and sum to 1")
    score = 0.0
    for record in history:
        if not record.answered or record.response_time_s is None:
            continue
        age = now - record.timestamp_s
        decay = 2.0 ** (-age / half_life_s)
        eff = min(personal_response_time(record.response_time_s, p), 1.0)
        score += decay * (w_acc * (1.0 if record.correct else 0.0) + w_eff * eff)
    return score


def rank_scores(scores: Mapping[int, float]) -> tuple[GamificationScore, ...]:
    """Leaderboard order: descending score, ties to the smaller worker id."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(
        GamificationScore(worker_id=wid, score=s, rank=i + 1)
        for i, (wid, s) in enumerate(ordered)
    )
