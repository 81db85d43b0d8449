"""Workers, their daily movement, and profile building.

A world is an immutable snapshot: advancing time produces a new world with
workers relocated along their schedules. Worker behavior is a small closed
set of strategies; everything stochastic downstream draws from generators
seeded per purpose, so a (config, seed) pair always produces the same
world.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from typing import Mapping, Union

import numpy as np

from .domain import (
    GeoPoint,
    LocationIndex,
    Place,
    Taxonomy,
    WorkerLocation,
    classify_location,
    default_taxonomy,
)
from .errors import (
    ClockRegressionError,
    EmptyWorldError,
    InvalidConfigError,
    OutOfOrderError,
)
from .quality import PrsParams, personal_response_time


@dataclass(frozen=True)
class Honest:
    """Answers correctly with the worker's reliability, promptly."""


@dataclass(frozen=True)
class UniformSpammer:
    """Picks a uniformly random label regardless of the question."""


@dataclass(frozen=True)
class FixedAnswerSpammer:
    """Always picks the candidate label at one fixed position."""

    label_position: int = 0

    def __post_init__(self) -> None:
        if self.label_position < 0:
            raise ValueError("label_position must be nonnegative")


@dataclass(frozen=True)
class Sloth:
    """Answers honestly but stretches every response time."""

    multiplier: float = 3.0

    def __post_init__(self) -> None:
        if not self.multiplier >= 1.0:
            raise ValueError(
                f"sloth multiplier must be at least 1, got {self.multiplier}"
            )


Strategy = Union[Honest, UniformSpammer, FixedAnswerSpammer, Sloth]


@dataclass(frozen=True)
class Segment:
    """One stretch of the day spent at a single place."""

    start_s: float
    place_id: int
    class_id: int


@dataclass(frozen=True)
class MobilitySchedule:
    """A worker's day as ordered segments, repeated every day_length_s.

    The first segment must start at 0 and starts must increase strictly.
    Queries at any nonnegative time wrap into the day, so the schedule
    repeats indefinitely.
    """

    segments: tuple[Segment, ...]
    day_length_s: float = 86_400.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise InvalidConfigError("schedule needs at least one segment")
        if not self.day_length_s > 0.0:
            raise InvalidConfigError("day length must be positive")
        starts = [s.start_s for s in self.segments]
        if starts[0] != 0.0:
            raise InvalidConfigError("first segment must start at 0")
        for a, b in zip(starts, starts[1:]):
            if not b > a:
                raise InvalidConfigError("segment starts must strictly increase")
        if starts[-1] >= self.day_length_s:
            raise InvalidConfigError("segment starts must lie inside the day")

    def segment_at(self, t_s: float) -> Segment:
        """The segment active at time t_s (wrapping into the day)."""
        if t_s < 0.0:
            raise ValueError(f"time must be nonnegative, got {t_s}")
        t = t_s % self.day_length_s
        starts = [s.start_s for s in self.segments]
        i = bisect.bisect_right(starts, t) - 1
        return self.segments[i]

    def dwell_fractions(self) -> dict[int, float]:
        """Fraction of the day spent in each location class."""
        out: dict[int, float] = {}
        for i, seg in enumerate(self.segments):
            end = (
                self.segments[i + 1].start_s
                if i + 1 < len(self.segments)
                else self.day_length_s
            )
            out[seg.class_id] = out.get(seg.class_id, 0.0) + (
                (end - seg.start_s) / self.day_length_s
            )
        return out


@dataclass(frozen=True)
class ActivityRecord:
    """One offered assignment: whether it was answered, and how."""

    timestamp_s: float
    task_type: int
    location_class: int
    answered: bool
    correct: bool = False
    response_time_s: float | None = None
    multi_label: bool = False


@dataclass(frozen=True)
class ActivityHistory:
    records: tuple[ActivityRecord, ...] = ()


def record_activity(history: ActivityHistory, record: ActivityRecord) -> ActivityHistory:
    """Append a record, enforcing nondecreasing timestamps."""
    if history.records and record.timestamp_s < history.records[-1].timestamp_s:
        raise OutOfOrderError(
            f"record at {record.timestamp_s} precedes last at "
            f"{history.records[-1].timestamp_s}"
        )
    return ActivityHistory(records=history.records + (record,))


@dataclass(frozen=True)
class WorkerProfile:
    """Summary of a worker's past behavior used for targeting and weighting.

    skill holds per-task-type accuracy estimates as (type, value) pairs;
    class_affinity holds (class, fraction of day) pairs summing to 1.
    """

    worker_id: int
    skill: tuple[tuple[int, float], ...] = ()
    mean_prs: float = 0.0
    class_affinity: tuple[tuple[int, float], ...] = ()
    multilabel_willingness: float = 0.5
    answered: int = 0
    correct: int = 0

    def __post_init__(self) -> None:
        if self.class_affinity:
            total = sum(v for _, v in self.class_affinity)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"class affinity must sum to 1, got {total}")

    def skill_for(self, task_type: int) -> float:
        for t, v in self.skill:
            if t == task_type:
                return v
        return 0.5

    def affinity_for(self, class_id: int) -> float:
        for c, v in self.class_affinity:
            if c == class_id:
                return v
        return 0.0


@dataclass(frozen=True)
class Worker:
    id: int
    location: WorkerLocation
    schedule: MobilitySchedule
    reliability: float
    strategy: Strategy = Honest()
    profile: WorkerProfile | None = None
    #: optional per-task-type reliability overrides as (type, value) pairs
    type_reliability: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        if not (0.0 <= self.reliability <= 1.0):
            raise ValueError(
                f"reliability must be in [0, 1], got {self.reliability}"
            )

    def reliability_for(self, task_type: int) -> float:
        for t, v in self.type_reliability:
            if t == task_type:
                return v
        return self.reliability


@dataclass(frozen=True)
class World:
    index: LocationIndex
    workers: tuple[Worker, ...]
    clock_s: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.workers:
            raise EmptyWorldError("a world needs at least one worker")

    @property
    def taxonomy(self) -> Taxonomy:
        return self.index.taxonomy


def step_mobility(world: World, to_s: float) -> World:
    """Advance the clock, relocating every worker along their schedule.

    The worker moves to the center of the scheduled place and is
    re-classified geometrically, so overlapping places resolve the same
    way they would for any other point.
    """
    if to_s < world.clock_s:
        raise ClockRegressionError(
            f"cannot step from {world.clock_s} back to {to_s}"
        )
    if to_s == world.clock_s:
        return world
    by_id = {p.id: p for p in world.index.places}
    class_cache: dict[int, int] = {}
    moved = []
    for w in world.workers:
        seg = w.schedule.segment_at(to_s)
        place = by_id[seg.place_id]
        if seg.place_id not in class_cache:
            class_cache[seg.place_id] = classify_location(place.point, world.index)
        loc = WorkerLocation(point=place.point, class_id=class_cache[seg.place_id])
        moved.append(replace(w, location=loc))
    return replace(world, workers=tuple(moved), clock_s=to_s)


def build_profile(
    history: ActivityHistory,
    schedule: MobilitySchedule,
    alpha: float = 1.0,
    *,
    worker_id: int = 0,
    prs: PrsParams | Mapping[int, PrsParams] = PrsParams(),
) -> WorkerProfile:
    """Summarize a history into a profile with additive smoothing.

    Per-type skill is (correct + alpha) / (answered + 2 alpha), so an empty
    history sits at the 0.5 prior. mean_prs averages the response score of
    every answered record, using a per-type parameter set when prs is a
    mapping. Willingness counts multi-label offers against multi-label
    answers; declined offers appear in the history as unanswered records.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    per_type: dict[int, list[int]] = {}
    prs_values: list[float] = []
    answered = 0
    correct = 0
    ml_offered = 0
    ml_answered = 0
    for r in history.records:
        if r.multi_label:
            ml_offered += 1
            if r.answered:
                ml_answered += 1
        if not r.answered:
            continue
        answered += 1
        if r.correct:
            correct += 1
        counts = per_type.setdefault(r.task_type, [0, 0])
        counts[0] += 1
        counts[1] += int(r.correct)
        if r.response_time_s is not None:
            params = prs[r.task_type] if isinstance(prs, Mapping) else prs
            prs_values.append(personal_response_time(r.response_time_s, params))
    skill = tuple(
        (t, (per_type[t][1] + alpha) / (per_type[t][0] + 2.0 * alpha))
        for t in sorted(per_type)
    )
    mean_prs = float(np.mean(prs_values)) if prs_values else 0.0
    affinity = tuple(sorted(schedule.dwell_fractions().items()))
    willingness = (ml_answered + alpha) / (ml_offered + 2.0 * alpha)
    return WorkerProfile(
        worker_id=worker_id,
        skill=skill,
        mean_prs=mean_prs,
        class_affinity=affinity,
        multilabel_willingness=willingness,
        answered=answered,
        correct=correct,
    )


@dataclass(frozen=True)
class FixedReliability:
    value: float = 0.8


@dataclass(frozen=True)
class UniformReliability:
    lo: float = 0.6
    hi: float = 0.95


@dataclass(frozen=True)
class TwoPointReliability:
    low: float = 0.55
    high: float = 0.9
    p_low: float = 0.5


@dataclass(frozen=True)
class CycleReliability:
    """Deterministically cycle a fixed list of reliabilities over workers."""

    values: tuple[float, ...] = (0.8,)


@dataclass(frozen=True)
class SpecialtyReliability:
    """Each worker is strong on one task type and weak elsewhere.

    Specialties rotate over the taxonomy's task types by worker position,
    so every type gets roughly the same number of specialists.
    """

    matched: float = 0.95
    other: float = 0.55


ReliabilityConfig = Union[
    FixedReliability,
    UniformReliability,
    TwoPointReliability,
    CycleReliability,
    SpecialtyReliability,
]


@dataclass(frozen=True)
class PlaceGridConfig:
    """Synthetic geography: places on a square grid around a center."""

    n_places: int = 12
    center: GeoPoint = GeoPoint(52.2297, 21.0122)
    spacing_m: float = 1_500.0
    radius_m: float = 200.0
    #: classes to cycle over the grid; None walks the non-default classes
    classes: tuple[int, ...] | None = None


#: widest spammer share the quality models are calibrated for
MAX_SPAMMER_RATIO = 0.4


@dataclass(frozen=True)
class WorldConfig:
    n_workers: int = 50
    spammer_ratio: float = 0.0
    #: fraction of spammers that always give one fixed answer
    spammer_fixed_share: float = 0.0
    sloth_ratio: float = 0.0
    sloth_multiplier: float = 3.0
    reliability: ReliabilityConfig = FixedReliability()
    places: tuple[Place, ...] | None = None
    place_grid: PlaceGridConfig | None = PlaceGridConfig()
    schedule_segments: int = 3
    day_length_s: float = 86_400.0
    #: lift the calibrated ceiling on spammer_ratio (for stress tests)
    allow_extreme_spam: bool = False

    def __post_init__(self) -> None:
        if self.n_workers <= 0:
            raise InvalidConfigError("n_workers must be positive")
        if not (0.0 <= self.spammer_ratio <= 1.0):
            raise InvalidConfigError("spammer_ratio must be in [0, 1]")
        if self.spammer_ratio > MAX_SPAMMER_RATIO and not self.allow_extreme_spam:
            raise InvalidConfigError(
                f"spammer_ratio above {MAX_SPAMMER_RATIO} needs allow_extreme_spam"
            )
        if not (0.0 <= self.spammer_fixed_share <= 1.0):
            raise InvalidConfigError("spammer_fixed_share must be in [0, 1]")
        if not (0.0 <= self.sloth_ratio <= 1.0):
            raise InvalidConfigError("sloth_ratio must be in [0, 1]")
        if (self.places is None) == (self.place_grid is None):
            raise InvalidConfigError(
                "exactly one of places and place_grid must be set"
            )
        if self.schedule_segments <= 0:
            raise InvalidConfigError("schedule_segments must be positive")


def _grid_places(grid: PlaceGridConfig, taxonomy: Taxonomy) -> tuple[Place, ...]:
    if grid.classes is not None:
        cycle = grid.classes
    else:
        cycle = tuple(
            c.id for c in taxonomy.classes if c.id != taxonomy.default_class_id
        ) or (taxonomy.default_class_id,)
    side = max(1, math.ceil(math.sqrt(grid.n_places)))
    # meters to degrees, with the longitude step widened by latitude
    dlat = grid.spacing_m / 111_320.0
    dlon = grid.spacing_m / (111_320.0 * math.cos(math.radians(grid.center.lat)))
    places = []
    for i in range(grid.n_places):
        row, col = divmod(i, side)
        places.append(
            Place(
                id=i,
                name=f"place-{i}",
                point=GeoPoint(
                    grid.center.lat + (row - side / 2.0) * dlat,
                    grid.center.lon + (col - side / 2.0) * dlon,
                ),
                class_id=cycle[i % len(cycle)],
                radius_m=grid.radius_m,
            )
        )
    return tuple(places)


def _reliability_values(
    config: ReliabilityConfig, n: int, rng: np.random.Generator
) -> np.ndarray:
    if isinstance(config, FixedReliability):
        return np.full(n, config.value)
    if isinstance(config, UniformReliability):
        return rng.uniform(config.lo, config.hi, n)
    if isinstance(config, TwoPointReliability):
        low = rng.random(n) < config.p_low
        return np.where(low, config.low, config.high)
    if isinstance(config, CycleReliability):
        if not config.values:
            raise InvalidConfigError("cycle reliability needs at least one value")
        return np.array([config.values[i % len(config.values)] for i in range(n)])
    if isinstance(config, SpecialtyReliability):
        # base value; the per-type override is attached in generate_world
        return np.full(n, config.other)
    raise InvalidConfigError(f"unknown reliability config {config!r}")


def generate_world(
    config: WorldConfig, seed: int, taxonomy: Taxonomy | None = None
) -> World:
    """Deterministically build a world from a config and a seed.

    Strategy roles are dealt from one seeded permutation, so the spammer
    count is exactly round(ratio * n). Each worker's schedule splits the
    day evenly over schedule_segments stretches at seeded random places.
    """
    taxonomy = taxonomy or default_taxonomy()
    places = config.places if config.places is not None else _grid_places(
        config.place_grid, taxonomy
    )
    if not places:
        raise InvalidConfigError("world generation needs at least one place")
    index = LocationIndex(taxonomy=taxonomy, places=places)
    n = config.n_workers
    rng_roles = np.random.default_rng([seed, 1])
    rng_rel = np.random.default_rng([seed, 2])
    rng_sched = np.random.default_rng([seed, 3])

    dealt = rng_roles.permutation(n)
    n_spam = int(round(config.spammer_ratio * n))
    n_fixed = int(round(config.spammer_fixed_share * n_spam))
    honest_pool = dealt[n_spam:]
    n_sloth = min(int(round(config.sloth_ratio * n)), honest_pool.size)
    strategies: dict[int, Strategy] = {}
    for pos, widx in enumerate(dealt[:n_spam]):
        strategies[int(widx)] = (
            FixedAnswerSpammer() if pos < n_fixed else UniformSpammer()
        )
    for widx in honest_pool[:n_sloth]:
        strategies[int(widx)] = Sloth(multiplier=config.sloth_multiplier)

    reliabilities = _reliability_values(config.reliability, n, rng_rel)
    type_ids = tuple(sorted(taxonomy.type_ids))
    place_ids = [p.id for p in places]
    class_by_place = {}
    for p in places:
        class_by_place[p.id] = classify_location(p.point, index)

    workers = []
    honest_seen = 0
    for wid in range(n):
        k = config.schedule_segments
        picks = rng_sched.integers(0, len(place_ids), size=k)
        segments = tuple(
            Segment(
                start_s=j * config.day_length_s / k,
                place_id=place_ids[picks[j]],
                class_id=class_by_place[place_ids[picks[j]]],
            )
            for j in range(k)
        )
        schedule = MobilitySchedule(
            segments=segments, day_length_s=config.day_length_s
        )
        strategy = strategies.get(wid, Honest())
        type_rel: tuple[tuple[int, float], ...] = ()
        reliability = float(reliabilities[wid])
        if isinstance(config.reliability, SpecialtyReliability) and isinstance(
            strategy, (Honest, Sloth)
        ):
            if type_ids:
                specialty = type_ids[honest_seen % len(type_ids)]
                type_rel = ((specialty, config.reliability.matched),)
            honest_seen += 1
        first = segments[0]
        start_place = class_by_place[first.place_id]
        point = index.place_by_id(first.place_id).point
        workers.append(
            Worker(
                id=wid,
                location=WorkerLocation(point=point, class_id=start_place),
                schedule=schedule,
                reliability=reliability,
                strategy=strategy,
                type_reliability=type_rel,
            )
        )
    return World(index=index, workers=tuple(workers), clock_s=0.0, seed=seed)
