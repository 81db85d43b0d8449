"""Core domain types: coordinates, location taxonomy, places, tasks.

Coordinates are validated at construction and never afterwards. Distances
use the haversine formula on a sphere of radius 6371 km, which is accurate
to roughly 0.5% against the ellipsoid and identical across backends.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np

from . import kernels
from .errors import InvalidConfigError

EARTH_RADIUS_M = kernels.EARTH_RADIUS_M

#: upper bound on an emergency geofence; anything wider is a broadcast storm
EMERGENCY_MAX_RADIUS_M = 50_000.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84-style latitude/longitude pair in decimal degrees.

    Latitude must lie in [-90, 90] and longitude in [-180, 180]. A
    longitude of exactly 180 is stored as -180 so every point has a single
    representation.
    """

    lat: float
    lon: float

    def __post_init__(self) -> None:
        lat = float(self.lat)
        lon = float(self.lon)
        if not (-90.0 <= lat <= 90.0):
            raise ValueError(f"latitude out of range [-90, 90]: {lat!r}")
        if not (-180.0 <= lon <= 180.0):
            raise ValueError(f"longitude out of range [-180, 180]: {lon!r}")
        if lon == 180.0:
            lon = -180.0
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in meters."""
    lat0 = math.radians(a.lat)
    lat1 = math.radians(b.lat)
    sin_dlat = math.sin((lat1 - lat0) * 0.5)
    sin_dlon = math.sin(math.radians(b.lon - a.lon) * 0.5)
    h = sin_dlat * sin_dlat + math.cos(lat0) * math.cos(lat1) * sin_dlon * sin_dlon
    if h > 1.0:
        h = 1.0
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


@dataclass(frozen=True)
class LocationClass:
    id: int
    name: str


@dataclass(frozen=True)
class LocationVariant:
    """A refinement of a location class, e.g. train within transport."""

    id: int
    class_id: int
    name: str


@dataclass(frozen=True)
class TaskType:
    id: int
    name: str


class TaskKind(Enum):
    NORMAL = "normal"
    EMERGENCY = "emergency"


@dataclass(frozen=True)
class Taxonomy:
    """The closed vocabulary of location classes, variants and task types."""

    classes: tuple[LocationClass, ...]
    variants: tuple[LocationVariant, ...] = ()
    task_types: tuple[TaskType, ...] = ()
    default_class_id: int = 0

    def __post_init__(self) -> None:
        class_ids = [c.id for c in self.classes]
        if len(class_ids) != len(set(class_ids)):
            raise InvalidConfigError("duplicate location class ids")
        if not class_ids:
            raise InvalidConfigError("taxonomy needs at least one location class")
        if self.default_class_id not in set(class_ids):
            raise InvalidConfigError(
                f"default class {self.default_class_id} is not a known class"
            )
        variant_ids = [v.id for v in self.variants]
        if len(variant_ids) != len(set(variant_ids)):
            raise InvalidConfigError("duplicate location variant ids")
        for v in self.variants:
            if v.class_id not in set(class_ids):
                raise InvalidConfigError(
                    f"variant {v.name!r} refers to unknown class {v.class_id}"
                )
        type_ids = [t.id for t in self.task_types]
        if len(type_ids) != len(set(type_ids)):
            raise InvalidConfigError("duplicate task type ids")

    @cached_property
    def class_ids(self) -> frozenset[int]:
        return frozenset(c.id for c in self.classes)

    @cached_property
    def type_ids(self) -> frozenset[int]:
        return frozenset(t.id for t in self.task_types)

    def class_name(self, class_id: int) -> str:
        for c in self.classes:
            if c.id == class_id:
                return c.name
        raise KeyError(class_id)


@dataclass(frozen=True)
class Place:
    """A named circular region that maps to one location class."""

    id: int
    name: str
    point: GeoPoint
    class_id: int
    radius_m: float


@dataclass(frozen=True)
class WorkerLocation:
    """Where a worker is: exact coordinates plus the class of the place."""

    point: GeoPoint
    class_id: int


@dataclass(frozen=True)
class LocationIndex:
    """Immutable lookup structure over a taxonomy and its places."""

    taxonomy: Taxonomy
    places: tuple[Place, ...] = ()

    def __post_init__(self) -> None:
        ids = [p.id for p in self.places]
        if len(ids) != len(set(ids)):
            raise InvalidConfigError("duplicate place ids")
        for p in self.places:
            if p.class_id not in self.taxonomy.class_ids:
                raise InvalidConfigError(
                    f"place {p.name!r} refers to unknown class {p.class_id}"
                )
            if not (p.radius_m > 0.0) or not math.isfinite(p.radius_m):
                raise InvalidConfigError(
                    f"place {p.name!r} needs a positive finite radius"
                )

    @cached_property
    def _lats(self) -> np.ndarray:
        return np.array([p.point.lat for p in self.places], dtype=np.float64)

    @cached_property
    def _lons(self) -> np.ndarray:
        return np.array([p.point.lon for p in self.places], dtype=np.float64)

    @cached_property
    def _radii(self) -> np.ndarray:
        return np.array([p.radius_m for p in self.places], dtype=np.float64)

    @cached_property
    def _place_ids(self) -> np.ndarray:
        return np.array([p.id for p in self.places], dtype=np.int64)

    @cached_property
    def _class_ids(self) -> np.ndarray:
        return np.array([p.class_id for p in self.places], dtype=np.int64)

    def place_by_id(self, place_id: int) -> Place:
        for p in self.places:
            if p.id == place_id:
                return p
        raise KeyError(place_id)


def classify_location(point: GeoPoint, index: LocationIndex) -> int:
    """Class of the nearest place whose radius covers the point.

    Coverage is inclusive (distance equal to the radius still counts).
    Among covering places the nearest wins; exact distance ties go to the
    smaller place id. A point no place covers gets the taxonomy default.
    """
    if not index.places:
        return index.taxonomy.default_class_id
    d = kernels.haversine_many(point.lat, point.lon, index._lats, index._lons)
    covered = np.flatnonzero(d <= index._radii)
    if covered.size == 0:
        return index.taxonomy.default_class_id
    order = np.lexsort((index._place_ids[covered], d[covered]))
    return int(index._class_ids[covered[order[0]]])


@dataclass(frozen=True)
class Question:
    """One labeling question with a closed candidate set.

    ground_truth is the correct label set; single-label questions carry a
    one-element set. Structural problems (too few labels, truth outside the
    candidate set) are reported by validate_task, not at construction.
    """

    id: int
    labels: tuple[int, ...]
    multi_label: bool = False
    ground_truth: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "ground_truth", frozenset(self.ground_truth))


@dataclass(frozen=True)
class TaskContext:
    """Spatial and skill targeting data attached to a task."""

    center: GeoPoint
    radius_m: float
    #: empty set means any location class is admissible
    admissible_classes: frozenset[int] = frozenset()
    #: optional (task_type, level in [0, 1]) requirements, informational
    required_skill: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "admissible_classes", frozenset(self.admissible_classes)
        )
        object.__setattr__(
            self, "required_skill", tuple((int(t), float(v)) for t, v in self.required_skill)
        )


@dataclass(frozen=True)
class Task:
    id: int
    task_type: int
    kind: TaskKind
    context: TaskContext
    questions: tuple[Question, ...]
    created_at: float = 0.0
    payload_bytes: int = 256

    def __post_init__(self) -> None:
        object.__setattr__(self, "questions", tuple(self.questions))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problems: tuple[str, ...] = ()


def validate_task(
    task: Task,
    taxonomy: Taxonomy,
    *,
    emergency_max_radius_m: float = EMERGENCY_MAX_RADIUS_M,
) -> ValidationReport:
    """Check a task against a taxonomy and return every problem found.

    Construction stays permissive so malformed tasks can be built, carried
    around and reported on; this is the single gate that decides whether a
    task is fit to dispatch.
    """
    problems: list[str] = []
    if taxonomy.type_ids and task.task_type not in taxonomy.type_ids:
        problems.append(f"unknown task type {task.task_type}")
    if not (task.context.radius_m > 0.0):
        problems.append(f"context radius must be positive, got {task.context.radius_m}")
    if task.kind is TaskKind.EMERGENCY:
        if not math.isfinite(task.context.radius_m) or (
            task.context.radius_m > emergency_max_radius_m
        ):
            problems.append(
                "emergency radius must be finite and at most "
                f"{emergency_max_radius_m:.0f} m, got {task.context.radius_m}"
            )
    for cid in sorted(task.context.admissible_classes):
        if cid not in taxonomy.class_ids:
            problems.append(f"admissible class {cid} is not in the taxonomy")
    for type_id, level in task.context.required_skill:
        if not (0.0 <= level <= 1.0):
            problems.append(
                f"required skill level for type {type_id} outside [0, 1]: {level}"
            )
    if not task.questions:
        problems.append("task has no questions")
    seen_q: set[int] = set()
    for q in task.questions:
        if q.id in seen_q:
            problems.append(f"duplicate question id {q.id}")
        seen_q.add(q.id)
        if len(set(q.labels)) != len(q.labels):
            problems.append(f"question {q.id} has duplicate labels")
        if len(q.labels) < 2:
            problems.append(f"question {q.id} has too few labels (need at least 2)")
        if not q.ground_truth <= set(q.labels):
            problems.append(
                f"question {q.id} ground truth is not a subset of its labels"
            )
        if not q.multi_label and len(q.ground_truth) > 1:
            problems.append(
                f"question {q.id} is single-label but has {len(q.ground_truth)} true labels"
            )
    return ValidationReport(ok=not problems, problems=tuple(problems))


_DEFAULT_CLASSES = (
    (0, "open area"),
    (1, "work place"),
    (2, "school"),
    (3, "shopping mall"),
    (4, "transport"),
    (5, "sport object"),
    (6, "home"),
    (7, "restaurant"),
    (8, "park"),
    (9, "hospital"),
    (10, "library"),
    (11, "entertainment venue"),
)

_DEFAULT_VARIANTS = (
    (0, 4, "train"),
    (1, 4, "bus"),
    (2, 4, "tram"),
    (3, 2, "university"),
    (4, 3, "supermarket"),
    (5, 11, "cinema"),
)

_DEFAULT_TASK_TYPES = (
    (0, "translation"),
    (1, "image description"),
    (2, "census"),
    (3, "citizen science"),
    (4, "policy making"),
)


def default_taxonomy() -> Taxonomy:
    """The built-in taxonomy: 12 location classes, 5 task types."""
    return Taxonomy(
        classes=tuple(LocationClass(i, n) for i, n in _DEFAULT_CLASSES),
        variants=tuple(LocationVariant(i, c, n) for i, c, n in _DEFAULT_VARIANTS),
        task_types=tuple(TaskType(i, n) for i, n in _DEFAULT_TASK_TYPES),
        default_class_id=0,
    )


def load_geography(source: str | Path | Mapping) -> LocationIndex:
    """Build a LocationIndex from a JSON file or an equivalent mapping.

    Schema (all sections optional except places may be empty)::

        {
          "classes":    [{"id": 0, "name": "open area"}, ...],
          "default_class": 0,
          "variants":   [{"id": 0, "class": 4, "name": "train"}, ...],
          "task_types": [{"id": 0, "name": "translation"}, ...],
          "places":     [{"id": 0, "name": "Central Station", "lat": 52.23,
                          "lon": 21.01, "class": 4, "radius_m": 150}, ...]
        }

    Omitted classes or task types fall back to the built-in taxonomy.
    """
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfigError(f"cannot read geography: {exc}") from exc
    else:
        raw = dict(source)
    if not isinstance(raw, Mapping):
        raise InvalidConfigError("geography must be a JSON object")
    known = {"classes", "default_class", "variants", "task_types", "places"}
    extra = set(raw) - known
    if extra:
        raise InvalidConfigError(f"unknown geography keys: {sorted(extra)}")
    base = default_taxonomy()
    try:
        classes = (
            tuple(LocationClass(int(c["id"]), str(c["name"])) for c in raw["classes"])
            if "classes" in raw
            else base.classes
        )
        variants = (
            tuple(
                LocationVariant(int(v["id"]), int(v["class"]), str(v["name"]))
                for v in raw["variants"]
            )
            if "variants" in raw
            else base.variants
        )
        task_types = (
            tuple(TaskType(int(t["id"]), str(t["name"])) for t in raw["task_types"])
            if "task_types" in raw
            else base.task_types
        )
        default_class = int(raw.get("default_class", base.default_class_id))
        taxonomy = Taxonomy(classes, variants, task_types, default_class)
        places = tuple(
            Place(
                id=int(p["id"]),
                name=str(p["name"]),
                point=GeoPoint(float(p["lat"]), float(p["lon"])),
                class_id=int(p["class"]),
                radius_m=float(p["radius_m"]),
            )
            for p in raw.get("places", ())
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfigError(f"malformed geography: {exc}") from exc
    return LocationIndex(taxonomy=taxonomy, places=places)
