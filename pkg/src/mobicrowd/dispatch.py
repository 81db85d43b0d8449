"""Task-to-worker matching and the simulated delivery network.

Ranking uses a weighted context distance: how far the worker is from the
task geofence, whether their current location class suits the task, and
how skilled their profile says they are on this task type. Lower is
better. Delivery then flips two coins per assignment, availability first,
delivery failure second, mirroring a push network where an offline device
never even sees the message.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .domain import Task, TaskKind
from .errors import NoEventsError, NotEmergencyError, NoWorkersError
from .world import Worker, World

OUTCOME_DELIVERED = "delivered"
OUTCOME_FAILED = "failed"
OUTCOME_UNREACHABLE = "unreachable"


@dataclass(frozen=True)
class ContextWeights:
    """Nonnegative weights for the three context distance terms."""

    w_geo: float = 1.0
    w_class: float = 1.0
    w_skill: float = 1.0

    def __post_init__(self) -> None:
        for name in ("w_geo", "w_class", "w_skill"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if self.w_geo + self.w_class + self.w_skill <= 0.0:
            raise ValueError("at least one context weight must be positive")


@dataclass(frozen=True)
class NetworkModel:
    """Bernoulli reachability and delivery failure, plus message overhead."""

    availability_prob: float = 1.0
    delivery_failure_prob: float = 0.0
    per_message_overhead_bytes: int = 64

    def __post_init__(self) -> None:
        if not (0.0 <= self.availability_prob <= 1.0):
            raise ValueError("availability_prob must be in [0, 1]")
        if not (0.0 <= self.delivery_failure_prob <= 1.0):
            raise ValueError("delivery_failure_prob must be in [0, 1]")
        if self.per_message_overhead_bytes < 0:
            raise ValueError("per_message_overhead_bytes must be nonnegative")


@dataclass(frozen=True)
class Assignment:
    id: int
    task_id: int
    question_id: int
    worker_id: int
    dispatched_at: float


@dataclass(frozen=True)
class DeliveryEvent:
    assignment_id: int
    task_id: int
    question_id: int
    worker_id: int
    outcome: str
    payload_bytes: int
    timestamp_s: float
    worker_class: int
    task_type: int


@dataclass(frozen=True)
class DispatchResult:
    assignments: tuple[Assignment, ...]
    events: tuple[DeliveryEvent, ...]

    def delivered_assignments(self) -> tuple[Assignment, ...]:
        ok = {
            e.assignment_id
            for e in self.events
            if e.outcome == OUTCOME_DELIVERED
        }
        return tuple(a for a in self.assignments if a.id in ok)


@dataclass(frozen=True)
class RankingPrior:
    """Learned penalty on (location class, task type) pairs.

    Pairs judged inefficient by past outcomes get their context distance
    bumped, which demotes rather than excludes those workers.
    """

    inefficient_pairs: frozenset[tuple[int, int]] = frozenset()
    penalty: float = 0.25

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "inefficient_pairs",
            frozenset((int(c), int(t)) for c, t in self.inefficient_pairs),
        )
        if self.penalty < 0.0:
            raise ValueError("penalty must be nonnegative")


def context_distance(
    task: Task,
    worker: Worker,
    weights: ContextWeights,
    prior: RankingPrior | None = None,
) -> float:
    """Weighted mismatch between a task's context and one worker; lower is better.

    The geographic term is the distance to the geofence center as a
    fraction of its radius, capped at 1 so far is far, no matter how far.
    The class term is binary; an empty admissible set admits everyone.
    The skill term is 1 minus the profiled skill for this task type, with
    unprofiled workers at the 0.5 prior.
    """
    geo_m = float(
        kernels.haversine_many(
            worker.location.point.lat,
            worker.location.point.lon,
            np.array([task.context.center.lat]),
            np.array([task.context.center.lon]),
        )[0]
    )
    geo_term = min(1.0, geo_m / task.context.radius_m)
    admissible = task.context.admissible_classes
    class_term = 0.0 if not admissible else float(
        worker.location.class_id not in admissible
    )
    skill = (
        worker.profile.skill_for(task.task_type)
        if worker.profile is not None
        else 0.5
    )
    skill_term = 1.0 - skill
    d = (
        weights.w_geo * geo_term
        + weights.w_class * class_term
        + weights.w_skill * skill_term
    )
    if prior is not None and (
        (worker.location.class_id, task.task_type) in prior.inefficient_pairs
    ):
        d += prior.penalty
    return d


def rank_candidates(
    task: Task,
    workers: Sequence[Worker],
    weights: ContextWeights,
    limit: int | None = None,
    prior: RankingPrior | None = None,
) -> tuple[Worker, ...]:
    """Workers by ascending context distance, ties to the smaller id."""
    if not workers:
        raise NoWorkersError("ranking over an empty worker pool")
    lats = np.array([w.location.point.lat for w in workers])
    lons = np.array([w.location.point.lon for w in workers])
    geo = kernels.haversine_many(
        task.context.center.lat, task.context.center.lon, lats, lons
    )
    geo_term = np.minimum(1.0, geo / task.context.radius_m)
    admissible = task.context.admissible_classes
    if admissible:
        class_term = np.array(
            [float(w.location.class_id not in admissible) for w in workers]
        )
    else:
        class_term = np.zeros(len(workers))
    skill = np.array(
        [
            w.profile.skill_for(task.task_type) if w.profile is not None else 0.5
            for w in workers
        ]
    )
    d = (
        weights.w_geo * geo_term
        + weights.w_class * class_term
        + weights.w_skill * (1.0 - skill)
    )
    if prior is not None and prior.inefficient_pairs:
        bump = np.array(
            [
                float(
                    (w.location.class_id, task.task_type)
                    in prior.inefficient_pairs
                )
                for w in workers
            ]
        )
        d = d + prior.penalty * bump
    ids = np.array([w.id for w in workers])
    order = np.lexsort((ids, d))
    if limit is not None:
        order = order[: max(0, limit)]
    return tuple(workers[i] for i in order)


def _deliver(
    task: Task,
    targets: Sequence[Worker],
    world: World,
    network: NetworkModel,
    rng: np.random.Generator,
    first_assignment_id: int,
) -> DispatchResult:
    """Draw per-assignment outcomes for every (question, target) pair."""
    nq = len(task.questions)
    k = len(targets)
    u_avail = rng.random((nq, k))
    u_fail = rng.random((nq, k))
    payload = task.payload_bytes + network.per_message_overhead_bytes
    assignments = []
    events = []
    next_id = first_assignment_id
    for qi, q in enumerate(task.questions):
        for wi, worker in enumerate(targets):
            if u_avail[qi, wi] >= network.availability_prob:
                outcome = OUTCOME_UNREACHABLE
            elif u_fail[qi, wi] < network.delivery_failure_prob:
                outcome = OUTCOME_FAILED
            else:
                outcome = OUTCOME_DELIVERED
            assignments.append(
                Assignment(
                    id=next_id,
                    task_id=task.id,
                    question_id=q.id,
                    worker_id=worker.id,
                    dispatched_at=world.clock_s,
                )
            )
            events.append(
                DeliveryEvent(
                    assignment_id=next_id,
                    task_id=task.id,
                    question_id=q.id,
                    worker_id=worker.id,
                    outcome=outcome,
                    payload_bytes=payload,
                    timestamp_s=world.clock_s,
                    worker_class=worker.location.class_id,
                    task_type=task.task_type,
                )
            )
            next_id += 1
    return DispatchResult(assignments=tuple(assignments), events=tuple(events))


def dispatch_task(
    task: Task,
    world: World,
    weights: ContextWeights,
    network: NetworkModel,
    fanout: int,
    rng: np.random.Generator,
    policy: str = "ranked",
    prior: RankingPrior | None = None,
    first_assignment_id: int = 0,
) -> DispatchResult:
    """Send every question of a task to fanout workers.

    policy "ranked" takes the best fanout workers by context distance;
    "random" draws them uniformly without replacement. Each assignment
    then faces independent availability and delivery-failure draws.
    """
    if fanout <= 0:
        raise ValueError(f"fanout must be positive, got {fanout}")
    if policy == "ranked":
        targets = rank_candidates(task, world.workers, weights, limit=fanout,
                                  prior=prior)
    elif policy == "random":
        n = len(world.workers)
        picks = rng.permutation(n)[: min(fanout, n)]
        targets = tuple(world.workers[i] for i in picks)
    else:
        raise ValueError(f"unknown dispatch policy {policy!r}")
    return _deliver(task, targets, world, network, rng, first_assignment_id)


def emergency_broadcast(
    task: Task,
    world: World,
    network: NetworkModel,
    rng: np.random.Generator,
    first_assignment_id: int = 0,
) -> DispatchResult:
    """Send an emergency task to every worker inside its geofence.

    Unlike ranked dispatch there is no fanout cap and no ordering: the
    geofence is the only filter. Raises unless the task is an emergency.
    """
    if task.kind is not TaskKind.EMERGENCY:
        raise NotEmergencyError(f"task {task.id} is not an emergency")
    lats = np.array([w.location.point.lat for w in world.workers])
    lons = np.array([w.location.point.lon for w in world.workers])
    d = kernels.haversine_many(
        task.context.center.lat, task.context.center.lon, lats, lons
    )
    inside = d <= task.context.radius_m
    targets = tuple(w for w, hit in zip(world.workers, inside) if hit)
    return _deliver(task, targets, world, network, rng, first_assignment_id)


@dataclass(frozen=True)
class NetworkMetrics:
    """Counts and rates over a batch of delivery events.

    availability is the fraction of attempts that reached a powered-on
    device. failure_rate counts both outright delivery failures and
    unreachable targets, so it is the complement of useful deliveries.
    failure_given_reachable isolates the delivery coin from the
    availability coin. throughput is mean delivered payload bytes.
    """

    attempted: int
    delivered: int
    failed: int
    unreachable: int
    availability: float
    failure_rate: float
    failure_given_reachable: float
    throughput_bytes: float


def network_metrics(events: Sequence[DeliveryEvent]) -> NetworkMetrics:
    if not events:
        raise NoEventsError("no delivery events to summarize")
    attempted = len(events)
    delivered = sum(1 for e in events if e.outcome == OUTCOME_DELIVERED)
    failed = sum(1 for e in events if e.outcome == OUTCOME_FAILED)
    unreachable = attempted - delivered - failed
    reachable = attempted - unreachable
    delivered_bytes = sum(
        e.payload_bytes for e in events if e.outcome == OUTCOME_DELIVERED
    )
    return NetworkMetrics(
        attempted=attempted,
        delivered=delivered,
        failed=failed,
        unreachable=unreachable,
        availability=reachable / attempted,
        failure_rate=(failed + unreachable) / attempted,
        failure_given_reachable=failed / reachable if reachable else 0.0,
        throughput_bytes=delivered_bytes / delivered if delivered else 0.0,
    )
