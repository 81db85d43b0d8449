"""Deterministic simulator and benchmark engine for mobile crowdsourcing.

Workers move through a daily schedule of classified places, tasks are
matched to them by spatial and skill context, a lossy push network decides
who even sees a question, and several aggregation methods compete on the
resulting answers. Everything is reproducible from a config and a seed.
"""

from .domain import (
    GeoPoint,
    LocationClass,
    LocationIndex,
    LocationVariant,
    Place,
    Question,
    Task,
    TaskContext,
    TaskKind,
    TaskType,
    Taxonomy,
    WorkerLocation,
    classify_location,
    default_taxonomy,
    haversine_distance,
    load_geography,
    validate_task,
)
from .errors import MobicrowdError
from .harness import (
    ResultSet,
    ScenarioConfig,
    config_fingerprint,
    export_results,
    hypothesis_experiments,
    iterate_location_learning,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
    sweep,
)
from .world import World, Worker, WorldConfig, generate_world, step_mobility

__version__ = "0.1.0"

__all__ = [
    "GeoPoint",
    "LocationClass",
    "LocationIndex",
    "LocationVariant",
    "MobicrowdError",
    "Place",
    "Question",
    "ResultSet",
    "ScenarioConfig",
    "Task",
    "TaskContext",
    "TaskKind",
    "TaskType",
    "Taxonomy",
    "Worker",
    "WorkerLocation",
    "World",
    "WorldConfig",
    "__version__",
    "classify_location",
    "config_fingerprint",
    "default_taxonomy",
    "export_results",
    "generate_world",
    "haversine_distance",
    "hypothesis_experiments",
    "iterate_location_learning",
    "load_geography",
    "run_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "step_mobility",
    "sweep",
    "validate_task",
]
