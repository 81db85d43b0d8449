"""Scenario running, parameter sweeps, experiments and file export.

A scenario is fully described by a ScenarioConfig plus a seed; running it
twice yields identical results, and exporting a result twice yields
byte-identical files. Every random draw comes from a generator seeded with
(seed, stream) so adding a new stream never perturbs the existing ones.
Wall-clock timings are kept in memory and reported in sweep summaries but
never written into per-run export files, which keeps those reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .dispatch import (
    ContextWeights,
    DeliveryEvent,
    DispatchResult,
    NetworkMetrics,
    NetworkModel,
    OUTCOME_DELIVERED,
    RankingPrior,
    dispatch_task,
    emergency_broadcast,
    network_metrics,
)
from .domain import (
    GeoPoint,
    Place,
    Question,
    Task,
    TaskContext,
    TaskKind,
    classify_location,
    validate_task,
)
from .errors import InvalidConfigError, InvalidSpecError
from .geolearn import (
    EfficiencyPair,
    OutcomeSample,
    SeedLabel,
    Verdict,
    featurize,
    label_efficiency,
    seeded_cluster,
)
from .quality import (
    Answer,
    GamificationScore,
    PrsParams,
    accuracy,
    credibility_weight,
    delta_to_beta,
    em_aggregate,
    gamification_score,
    multilabel_aggregate,
    personal_response_time,
    rank_scores,
)
from .world import (
    ActivityHistory,
    ActivityRecord,
    CycleReliability,
    FixedAnswerSpammer,
    FixedReliability,
    PlaceGridConfig,
    Sloth,
    SpecialtyReliability,
    TwoPointReliability,
    UniformReliability,
    UniformSpammer,
    Worker,
    WorkerProfile,
    World,
    WorldConfig,
    build_profile,
    generate_world,
    record_activity,
    step_mobility,
)

METHOD_MAJORITY = "majority"
METHOD_WEIGHTED = "weighted"
METHOD_EM = "em"
_METHODS = (METHOD_MAJORITY, METHOD_WEIGHTED, METHOD_EM)

SWEEP_AXES = ("answers_per_question", "questions_per_worker", "spammer_ratio")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class TaskGenConfig:
    n_tasks: int = 20
    questions_per_task: int = 5
    n_labels: int = 4
    multi_label_fraction: float = 0.0
    emergency_fraction: float = 0.0
    radius_m: float = 3_000.0
    emergency_radius_m: float = 5_000.0
    admissible_classes: tuple[int, ...] = ()
    payload_bytes: int = 256
    inter_task_gap_s: float = 60.0

    def __post_init__(self) -> None:
        if self.n_tasks <= 0 or self.questions_per_task <= 0:
            raise InvalidConfigError("task counts must be positive")
        if self.n_labels < 2:
            raise InvalidConfigError("questions need at least 2 candidate labels")
        for name in ("multi_label_fraction", "emergency_fraction"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidConfigError(f"{name} must be in [0, 1]")


@dataclass(frozen=True)
class DispatchConfig:
    weights: ContextWeights = ContextWeights()
    fanout: int = 5
    policy: str = "ranked"

    def __post_init__(self) -> None:
        if self.fanout <= 0:
            raise InvalidConfigError("fanout must be positive")
        if self.policy not in ("ranked", "random"):
            raise InvalidConfigError(f"unknown policy {self.policy!r}")


@dataclass(frozen=True)
class QualityConfig:
    prs: PrsParams = PrsParams()
    #: (task_type, beta) overrides of the global response budget
    beta_by_type: tuple[tuple[int, float], ...] = ()
    multilabel_threshold: float = 0.5
    em_max_iters: int = 100
    em_tol: float = 1e-6
    em_alpha: float = 1.0
    methods: tuple[str, ...] = _METHODS
    credibility_w_min: float = 0.1
    gamification_half_life_s: float = 86_400.0
    gamification_w_acc: float = 0.5
    gamification_w_eff: float = 0.5

    def __post_init__(self) -> None:
        for m in self.methods:
            if m not in _METHODS:
                raise InvalidConfigError(f"unknown aggregation method {m!r}")

    def prs_for_type(self, task_type: int) -> PrsParams:
        for t, beta in self.beta_by_type:
            if t == task_type:
                return PrsParams(beta=beta, t_min=self.prs.t_min)
        return self.prs


@dataclass(frozen=True)
class AnswerModelConfig:
    """How simulated workers turn a delivered question into an answer.

    Response times are lognormal, scaled by a per-class busyness
    multiplier (a worker at a hectic place answers slower). If the
    worker's class is outside the task's admissible set, reliability is
    multiplied by class_mismatch_penalty, so location context can carry
    real quality signal when a scenario wants it to.
    """

    lognormal_mu: float = math.log(20.0)
    lognormal_sigma: float = 0.5
    busyness: tuple[tuple[int, float], ...] = ()
    class_mismatch_penalty: float = 1.0
    answer_prob: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.answer_prob <= 1.0):
            raise InvalidConfigError("answer_prob must be in [0, 1]")
        if not (0.0 <= self.class_mismatch_penalty <= 1.0):
            raise InvalidConfigError("class_mismatch_penalty must be in [0, 1]")

    def busyness_for(self, class_id: int) -> float:
        for c, v in self.busyness:
            if c == class_id:
                return v
        return 1.0


@dataclass(frozen=True)
class GeolearnConfig:
    enabled: bool = False
    min_samples: int = 20
    k: int = 2
    acc_threshold: float = 0.7
    prs_threshold: float = 0.5
    #: expert seeds as (class_id, task_type, "efficient"|"inefficient")
    seeds: tuple[tuple[int, int, str], ...] = ()


@dataclass(frozen=True)
class ScenarioConfig:
    world: WorldConfig = WorldConfig()
    tasks: TaskGenConfig = TaskGenConfig()
    dispatch: DispatchConfig = DispatchConfig()
    network: NetworkModel = NetworkModel()
    quality: QualityConfig = QualityConfig()
    answers: AnswerModelConfig = AnswerModelConfig()
    geolearn: GeolearnConfig = GeolearnConfig()
    seed: int = 0
    #: when set, task generation uses this seed while the world keeps seed;
    #: lets paired experiments hold the population fixed across task sets
    task_seed: int | None = None


def _take(raw: Mapping, allowed: Sequence[str], where: str) -> dict:
    extra = set(raw) - set(allowed)
    if extra:
        raise InvalidConfigError(f"unknown {where} keys: {sorted(extra)}")
    return dict(raw)


def _weights_from(raw: Mapping) -> ContextWeights:
    d = _take(raw, ("w_geo", "w_class", "w_skill"), "weights")
    return ContextWeights(**{k: float(v) for k, v in d.items()})


def _reliability_from(raw: Mapping):
    kind = raw.get("kind")
    if kind == "fixed":
        d = _take(raw, ("kind", "value"), "reliability")
        return FixedReliability(value=float(d.get("value", 0.8)))
    if kind == "uniform":
        d = _take(raw, ("kind", "lo", "hi"), "reliability")
        return UniformReliability(
            lo=float(d.get("lo", 0.6)), hi=float(d.get("hi", 0.95))
        )
    if kind == "two_point":
        d = _take(raw, ("kind", "low", "high", "p_low"), "reliability")
        return TwoPointReliability(
            low=float(d.get("low", 0.55)),
            high=float(d.get("high", 0.9)),
            p_low=float(d.get("p_low", 0.5)),
        )
    if kind == "cycle":
        d = _take(raw, ("kind", "values"), "reliability")
        return CycleReliability(values=tuple(float(v) for v in d.get("values", (0.8,))))
    if kind == "specialty":
        d = _take(raw, ("kind", "matched", "other"), "reliability")
        return SpecialtyReliability(
            matched=float(d.get("matched", 0.95)), other=float(d.get("other", 0.55))
        )
    raise InvalidConfigError(f"unknown reliability kind {kind!r}")


def _reliability_to(cfg) -> dict:
    if isinstance(cfg, FixedReliability):
        return {"kind": "fixed", "value": cfg.value}
    if isinstance(cfg, UniformReliability):
        return {"kind": "uniform", "lo": cfg.lo, "hi": cfg.hi}
    if isinstance(cfg, TwoPointReliability):
        return {"kind": "two_point", "low": cfg.low, "high": cfg.high,
                "p_low": cfg.p_low}
    if isinstance(cfg, CycleReliability):
        return {"kind": "cycle", "values": list(cfg.values)}
    if isinstance(cfg, SpecialtyReliability):
        return {"kind": "specialty", "matched": cfg.matched, "other": cfg.other}
    raise InvalidConfigError(f"unknown reliability config {cfg!r}")


def _world_from(raw: Mapping) -> WorldConfig:
    d = _take(
        raw,
        (
            "n_workers", "spammer_ratio", "spammer_fixed_share", "sloth_ratio",
            "sloth_multiplier", "reliability", "places", "place_grid",
            "schedule_segments", "day_length_s", "allow_extreme_spam",
        ),
        "world",
    )
    kwargs: dict = {}
    for key in ("n_workers", "schedule_segments"):
        if key in d:
            kwargs[key] = int(d[key])
    for key in ("spammer_ratio", "spammer_fixed_share", "sloth_ratio",
                "sloth_multiplier", "day_length_s"):
        if key in d:
            kwargs[key] = float(d[key])
    if "allow_extreme_spam" in d:
        kwargs["allow_extreme_spam"] = bool(d["allow_extreme_spam"])
    if "reliability" in d:
        kwargs["reliability"] = _reliability_from(d["reliability"])
    if "places" in d:
        kwargs["places"] = tuple(
            Place(
                id=int(p["id"]),
                name=str(p.get("name", f"place-{p['id']}")),
                point=GeoPoint(float(p["lat"]), float(p["lon"])),
                class_id=int(p["class"]),
                radius_m=float(p["radius_m"]),
            )
            for p in d["places"]
        )
        kwargs["place_grid"] = None
    elif "place_grid" in d:
        g = _take(
            d["place_grid"],
            ("n_places", "center_lat", "center_lon", "spacing_m", "radius_m",
             "classes"),
            "place_grid",
        )
        kwargs["place_grid"] = PlaceGridConfig(
            n_places=int(g.get("n_places", 12)),
            center=GeoPoint(
                float(g.get("center_lat", 52.2297)),
                float(g.get("center_lon", 21.0122)),
            ),
            spacing_m=float(g.get("spacing_m", 1_500.0)),
            radius_m=float(g.get("radius_m", 200.0)),
            classes=(
                tuple(int(c) for c in g["classes"]) if "classes" in g else None
            ),
        )
    return WorldConfig(**kwargs)


def _world_to(cfg: WorldConfig) -> dict:
    out: dict = {
        "n_workers": cfg.n_workers,
        "spammer_ratio": cfg.spammer_ratio,
        "spammer_fixed_share": cfg.spammer_fixed_share,
        "sloth_ratio": cfg.sloth_ratio,
        "sloth_multiplier": cfg.sloth_multiplier,
        "reliability": _reliability_to(cfg.reliability),
        "schedule_segments": cfg.schedule_segments,
        "day_length_s": cfg.day_length_s,
        "allow_extreme_spam": cfg.allow_extreme_spam,
    }
    if cfg.places is not None:
        out["places"] = [
            {
                "id": p.id, "name": p.name, "lat": p.point.lat,
                "lon": p.point.lon, "class": p.class_id, "radius_m": p.radius_m,
            }
            for p in cfg.places
        ]
    else:
        g = cfg.place_grid
        out["place_grid"] = {
            "n_places": g.n_places,
            "center_lat": g.center.lat,
            "center_lon": g.center.lon,
            "spacing_m": g.spacing_m,
            "radius_m": g.radius_m,
        }
        if g.classes is not None:
            out["place_grid"]["classes"] = list(g.classes)
    return out


def scenario_from_dict(raw: Mapping) -> ScenarioConfig:
    """Parse a configuration mapping, rejecting unknown keys at every level."""
    d = _take(
        raw,
        ("world", "tasks", "dispatch", "network", "quality", "answers",
         "geolearn", "seed", "task_seed"),
        "scenario",
    )
    kwargs: dict = {}
    if "seed" in d:
        kwargs["seed"] = int(d["seed"])
    if "task_seed" in d and d["task_seed"] is not None:
        kwargs["task_seed"] = int(d["task_seed"])
    if "world" in d:
        kwargs["world"] = _world_from(d["world"])
    if "tasks" in d:
        t = _take(
            d["tasks"],
            ("n_tasks", "questions_per_task", "n_labels", "multi_label_fraction",
             "emergency_fraction", "radius_m", "emergency_radius_m",
             "admissible_classes", "payload_bytes", "inter_task_gap_s"),
            "tasks",
        )
        tk: dict = {}
        for key in ("n_tasks", "questions_per_task", "n_labels", "payload_bytes"):
            if key in t:
                tk[key] = int(t[key])
        for key in ("multi_label_fraction", "emergency_fraction", "radius_m",
                    "emergency_radius_m", "inter_task_gap_s"):
            if key in t:
                tk[key] = float(t[key])
        if "admissible_classes" in t:
            tk["admissible_classes"] = tuple(int(c) for c in t["admissible_classes"])
        kwargs["tasks"] = TaskGenConfig(**tk)
    if "dispatch" in d:
        p = _take(d["dispatch"], ("weights", "fanout", "policy"), "dispatch")
        dk: dict = {}
        if "weights" in p:
            dk["weights"] = _weights_from(p["weights"])
        if "fanout" in p:
            dk["fanout"] = int(p["fanout"])
        if "policy" in p:
            dk["policy"] = str(p["policy"])
        kwargs["dispatch"] = DispatchConfig(**dk)
    if "network" in d:
        p = _take(
            d["network"],
            ("availability_prob", "delivery_failure_prob",
             "per_message_overhead_bytes"),
            "network",
        )
        kwargs["network"] = NetworkModel(
            availability_prob=float(p.get("availability_prob", 1.0)),
            delivery_failure_prob=float(p.get("delivery_failure_prob", 0.0)),
            per_message_overhead_bytes=int(p.get("per_message_overhead_bytes", 64)),
        )
    if "quality" in d:
        p = _take(
            d["quality"],
            ("prs", "beta_by_type", "multilabel_threshold", "em_max_iters",
             "em_tol", "em_alpha", "methods", "credibility_w_min",
             "gamification"),
            "quality",
        )
        qk: dict = {}
        if "prs" in p:
            pr = _take(p["prs"], ("beta", "t_min"), "prs")
            qk["prs"] = PrsParams(
                beta=float(pr.get("beta", 30.0)), t_min=float(pr.get("t_min", 1.0))
            )
        if "beta_by_type" in p:
            qk["beta_by_type"] = tuple(
                (int(t), float(b)) for t, b in sorted(p["beta_by_type"].items(), key=lambda kv: int(kv[0]))
            )
        for key in ("multilabel_threshold", "em_tol", "em_alpha",
                    "credibility_w_min"):
            if key in p:
                qk[key] = float(p[key])
        if "em_max_iters" in p:
            qk["em_max_iters"] = int(p["em_max_iters"])
        if "methods" in p:
            qk["methods"] = tuple(str(m) for m in p["methods"])
        if "gamification" in p:
            g = _take(p["gamification"], ("half_life_s", "w_acc", "w_eff"),
                      "gamification")
            qk["gamification_half_life_s"] = float(g.get("half_life_s", 86_400.0))
            qk["gamification_w_acc"] = float(g.get("w_acc", 0.5))
            qk["gamification_w_eff"] = float(g.get("w_eff", 0.5))
        kwargs["quality"] = QualityConfig(**qk)
    if "answers" in d:
        p = _take(
            d["answers"],
            ("lognormal_mu", "lognormal_sigma", "busyness",
             "class_mismatch_penalty", "answer_prob"),
            "answers",
        )
        ak: dict = {}
        for key in ("lognormal_mu", "lognormal_sigma", "class_mismatch_penalty",
                    "answer_prob"):
            if key in p:
                ak[key] = float(p[key])
        if "busyness" in p:
            ak["busyness"] = tuple(
                (int(c), float(v))
                for c, v in sorted(p["busyness"].items(), key=lambda kv: int(kv[0]))
            )
        kwargs["answers"] = AnswerModelConfig(**ak)
    if "geolearn" in d:
        p = _take(
            d["geolearn"],
            ("enabled", "min_samples", "k", "acc_threshold", "prs_threshold",
             "seeds"),
            "geolearn",
        )
        gk: dict = {}
        if "enabled" in p:
            gk["enabled"] = bool(p["enabled"])
        for key in ("min_samples", "k"):
            if key in p:
                gk[key] = int(p[key])
        for key in ("acc_threshold", "prs_threshold"):
            if key in p:
                gk[key] = float(p[key])
        if "seeds" in p:
            gk["seeds"] = tuple(
                (int(s["class"]), int(s["type"]), str(s["verdict"]))
                for s in p["seeds"]
            )
        kwargs["geolearn"] = GeolearnConfig(**gk)
    return ScenarioConfig(**kwargs)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Inverse of scenario_from_dict, stable under round-tripping."""
    return {
        "seed": cfg.seed,
        "task_seed": cfg.task_seed,
        "world": _world_to(cfg.world),
        "tasks": {
            "n_tasks": cfg.tasks.n_tasks,
            "questions_per_task": cfg.tasks.questions_per_task,
            "n_labels": cfg.tasks.n_labels,
            "multi_label_fraction": cfg.tasks.multi_label_fraction,
            "emergency_fraction": cfg.tasks.emergency_fraction,
            "radius_m": cfg.tasks.radius_m,
            "emergency_radius_m": cfg.tasks.emergency_radius_m,
            "admissible_classes": list(cfg.tasks.admissible_classes),
            "payload_bytes": cfg.tasks.payload_bytes,
            "inter_task_gap_s": cfg.tasks.inter_task_gap_s,
        },
        "dispatch": {
            "weights": {
                "w_geo": cfg.dispatch.weights.w_geo,
                "w_class": cfg.dispatch.weights.w_class,
                "w_skill": cfg.dispatch.weights.w_skill,
            },
            "fanout": cfg.dispatch.fanout,
            "policy": cfg.dispatch.policy,
        },
        "network": {
            "availability_prob": cfg.network.availability_prob,
            "delivery_failure_prob": cfg.network.delivery_failure_prob,
            "per_message_overhead_bytes": cfg.network.per_message_overhead_bytes,
        },
        "quality": {
            "prs": {"beta": cfg.quality.prs.beta, "t_min": cfg.quality.prs.t_min},
            "beta_by_type": {str(t): b for t, b in cfg.quality.beta_by_type},
            "multilabel_threshold": cfg.quality.multilabel_threshold,
            "em_max_iters": cfg.quality.em_max_iters,
            "em_tol": cfg.quality.em_tol,
            "em_alpha": cfg.quality.em_alpha,
            "methods": list(cfg.quality.methods),
            "credibility_w_min": cfg.quality.credibility_w_min,
            "gamification": {
                "half_life_s": cfg.quality.gamification_half_life_s,
                "w_acc": cfg.quality.gamification_w_acc,
                "w_eff": cfg.quality.gamification_w_eff,
            },
        },
        "answers": {
            "lognormal_mu": cfg.answers.lognormal_mu,
            "lognormal_sigma": cfg.answers.lognormal_sigma,
            "busyness": {str(c): v for c, v in cfg.answers.busyness},
            "class_mismatch_penalty": cfg.answers.class_mismatch_penalty,
            "answer_prob": cfg.answers.answer_prob,
        },
        "geolearn": {
            "enabled": cfg.geolearn.enabled,
            "min_samples": cfg.geolearn.min_samples,
            "k": cfg.geolearn.k,
            "acc_threshold": cfg.geolearn.acc_threshold,
            "prs_threshold": cfg.geolearn.prs_threshold,
            "seeds": [
                {"class": c, "type": t, "verdict": v}
                for c, t, v in cfg.geolearn.seeds
            ],
        },
    }


def config_fingerprint(cfg: ScenarioConfig) -> str:
    """sha256 over the canonical JSON form of the configuration."""
    blob = json.dumps(scenario_to_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class AnswerEvent:
    """An answer joined with everything known about its assignment."""

    answer: Answer
    task_id: int
    task_type: int
    worker_class: int
    multi_label: bool
    correct: bool
    prs: float
    delta_to_budget: float


@dataclass(frozen=True)
class AggregationReport:
    """One aggregation method's outcome over a whole scenario.

    accuracy counts an unanswered question as wrong; accuracy_answered
    restricts to questions that received at least one answer.
    """

    method: str
    accuracy: float
    accuracy_answered: float
    n_questions: int
    n_answered: int
    n_correct: int
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class ResultSet:
    config: ScenarioConfig
    fingerprint: str
    kernel_backend: str
    tasks: tuple[Task, ...]
    truth: Mapping[int, frozenset[int]]
    delivery_events: tuple[DeliveryEvent, ...]
    answers: tuple[AnswerEvent, ...]
    reports: tuple[AggregationReport, ...]
    network: NetworkMetrics | None
    network_per_task: tuple[tuple[int, NetworkMetrics], ...]
    profiles: Mapping[int, WorkerProfile]
    leaderboard: tuple[GamificationScore, ...]
    efficiency_pairs: tuple[EfficiencyPair, ...]
    compute_seconds: Mapping[str, float] = field(default_factory=dict)

    def report(self, method: str) -> AggregationReport:
        for r in self.reports:
            if r.method == method:
                return r
        raise KeyError(method)


# ---------------------------------------------------------------------------
# scenario running


def _generate_tasks(
    config: ScenarioConfig, world: World
) -> tuple[tuple[Task, ...], dict[int, frozenset[int]]]:
    tg = config.tasks
    seed = config.task_seed if config.task_seed is not None else config.seed
    rng = np.random.default_rng([seed, 4])
    places = world.index.places
    n = tg.n_tasks
    center_idx = rng.integers(0, len(places), n)
    n_emergency = int(round(tg.emergency_fraction * n))
    emergency_at = set(rng.permutation(n)[:n_emergency].tolist())
    type_ids = sorted(world.taxonomy.type_ids) or [0]
    total_q = n * tg.questions_per_task
    is_ml = rng.random(total_q) < tg.multi_label_fraction
    truth_single = rng.integers(0, tg.n_labels, total_q)
    ml_sizes = rng.integers(1, tg.n_labels + 1, total_q)
    labels = tuple(range(tg.n_labels))
    truth: dict[int, frozenset[int]] = {}
    tasks = []
    qid = 0
    for i in range(n):
        questions = []
        for j in range(tg.questions_per_task):
            k = i * tg.questions_per_task + j
            if is_ml[k]:
                chosen = rng.choice(tg.n_labels, size=int(ml_sizes[k]), replace=False)
                gt = frozenset(int(v) for v in chosen)
                questions.append(
                    Question(id=qid, labels=labels, multi_label=True, ground_truth=gt)
                )
            else:
                gt = frozenset({int(truth_single[k])})
                questions.append(Question(id=qid, labels=labels, ground_truth=gt))
            truth[qid] = gt
            qid += 1
        emergency = i in emergency_at
        task = Task(
            id=i,
            task_type=type_ids[i % len(type_ids)],
            kind=TaskKind.EMERGENCY if emergency else TaskKind.NORMAL,
            context=TaskContext(
                center=places[int(center_idx[i])].point,
                radius_m=tg.emergency_radius_m if emergency else tg.radius_m,
                admissible_classes=frozenset(tg.admissible_classes),
            ),
            questions=tuple(questions),
            created_at=i * tg.inter_task_gap_s,
            payload_bytes=tg.payload_bytes,
        )
        report = validate_task(task, world.taxonomy)
        if not report.ok:
            raise InvalidConfigError(
                f"generated task {i} is invalid: {report.problems[0]}"
            )
        tasks.append(task)
    return tuple(tasks), truth


def _simulate_answers(
    task: Task,
    dispatched: DispatchResult,
    workers_by_id: Mapping[int, Worker],
    config: ScenarioConfig,
    truth: Mapping[int, frozenset[int]],
    rng: np.random.Generator,
) -> tuple[list[AnswerEvent], list[tuple[int, ActivityRecord]]]:
    """Produce answers for the delivered assignments of one task."""
    am = config.answers
    q_by_id = {q.id: q for q in task.questions}
    events_by_assignment = {e.assignment_id: e for e in dispatched.events}
    delivered = dispatched.delivered_assignments()
    n = len(delivered)
    u_answer = rng.random(n)
    u_correct = rng.random(n)
    t_raw = rng.lognormal(am.lognormal_mu, am.lognormal_sigma, n)
    wrong_step = rng.integers(1, max(2, config.tasks.n_labels), n)
    spam_pick = rng.integers(0, config.tasks.n_labels, n)
    ml_toggle = rng.integers(0, config.tasks.n_labels, n)
    prs_params = config.quality.prs_for_type(task.task_type)
    admissible = task.context.admissible_classes
    out: list[AnswerEvent] = []
    records: list[tuple[int, ActivityRecord]] = []
    for i, a in enumerate(delivered):
        event = events_by_assignment[a.id]
        worker = workers_by_id[a.worker_id]
        question = q_by_id[a.question_id]
        gt = truth[a.question_id]
        n_labels = len(question.labels)
        if u_answer[i] >= am.answer_prob:
            records.append(
                (
                    worker.id,
                    ActivityRecord(
                        timestamp_s=a.dispatched_at,
                        task_type=task.task_type,
                        location_class=event.worker_class,
                        answered=False,
                        multi_label=question.multi_label,
                    ),
                )
            )
            continue
        strategy = worker.strategy
        if isinstance(strategy, UniformSpammer):
            labels = frozenset({question.labels[int(spam_pick[i]) % n_labels]})
        elif isinstance(strategy, FixedAnswerSpammer):
            pos = min(strategy.label_position, n_labels - 1)
            labels = frozenset({question.labels[pos]})
        else:
            r = worker.reliability_for(task.task_type)
            if admissible and event.worker_class not in admissible:
                r *= am.class_mismatch_penalty
            if question.multi_label:
                if u_correct[i] < r:
                    labels = gt
                else:
                    flip = question.labels[int(ml_toggle[i]) % n_labels]
                    flipped = gt ^ {flip}
                    if not flipped:
                        flipped = frozenset(
                            {question.labels[(int(ml_toggle[i]) + 1) % n_labels]}
                        )
                    labels = frozenset(flipped)
            else:
                (true_label,) = gt
                if u_correct[i] < r:
                    labels = gt
                else:
                    true_pos = question.labels.index(true_label)
                    step = 1 + (int(wrong_step[i]) - 1) % max(1, n_labels - 1)
                    labels = frozenset(
                        {question.labels[(true_pos + step) % n_labels]}
                    )
        t = float(t_raw[i]) * am.busyness_for(event.worker_class)
        if isinstance(strategy, Sloth):
            t *= strategy.multiplier
        read_at = a.dispatched_at
        sent_at = read_at + t
        answer = Answer(
            assignment_id=a.id,
            worker_id=a.worker_id,
            question_id=a.question_id,
            labels=labels,
            read_at=read_at,
            sent_at=sent_at,
        )
        correct = labels == gt
        out.append(
            AnswerEvent(
                answer=answer,
                task_id=task.id,
                task_type=task.task_type,
                worker_class=event.worker_class,
                multi_label=question.multi_label,
                correct=correct,
                prs=personal_response_time(t, prs_params),
                delta_to_budget=delta_to_beta(t, prs_params),
            )
        )
        records.append(
            (
                worker.id,
                ActivityRecord(
                    timestamp_s=sent_at,
                    task_type=task.task_type,
                    location_class=event.worker_class,
                    answered=True,
                    correct=correct,
                    response_time_s=t,
                    multi_label=question.multi_label,
                ),
            )
        )
    return out, records


def _affinity_profile(worker: Worker) -> WorkerProfile:
    return WorkerProfile(
        worker_id=worker.id,
        class_affinity=tuple(sorted(worker.schedule.dwell_fractions().items())),
    )


def _aggregate(
    config: ScenarioConfig,
    answers: Sequence[AnswerEvent],
    truth: Mapping[int, frozenset[int]],
    task_class: Mapping[int, int],
    cred_profiles: Mapping[int, WorkerProfile],
) -> tuple[list[AggregationReport], dict[str, float]]:
    """Run every configured aggregation method over the collected answers."""
    qc = config.quality
    n_labels = config.tasks.n_labels
    sl_answers = [a for a in answers if not a.multi_label]
    ml_answers: dict[int, list[Answer]] = {}
    for a in answers:
        if a.multi_label:
            ml_answers.setdefault(a.answer.question_id, []).append(a.answer)
    sl_qids = sorted({a.answer.question_id for a in sl_answers})
    sl_pos = {q: i for i, q in enumerate(sl_qids)}
    q_idx = np.array([sl_pos[a.answer.question_id] for a in sl_answers], dtype=np.int64)
    lab_idx = np.array(
        [next(iter(a.answer.labels)) for a in sl_answers], dtype=np.int64
    )
    reports = []
    timings: dict[str, float] = {}
    for method in qc.methods:
        start = time.perf_counter()
        est: dict[int, object] = {}
        iterations = 0
        if sl_qids:
            if method == METHOD_MAJORITY:
                counts = kernels.vote_counts(q_idx, lab_idx, len(sl_qids), n_labels)
                winners = counts.argmax(axis=1)
                est.update({q: int(winners[i]) for q, i in sl_pos.items()})
            elif method == METHOD_WEIGHTED:
                weights = np.array(
                    [
                        credibility_weight(
                            a.answer.worker_id,
                            cred_profiles[a.answer.worker_id],
                            task_class[a.task_id],
                            qc.credibility_w_min,
                        ).weight
                        for a in sl_answers
                    ]
                )
                counts = kernels.weighted_vote_counts(
                    q_idx, lab_idx, weights, len(sl_qids), n_labels
                )
                winners = counts.argmax(axis=1)
                est.update({q: int(winners[i]) for q, i in sl_pos.items()})
            elif method == METHOD_EM:
                by_q: dict[int, list[Answer]] = {}
                for a in sl_answers:
                    by_q.setdefault(a.answer.question_id, []).append(a.answer)
                em = em_aggregate(
                    by_q,
                    max_iters=qc.em_max_iters,
                    tol=qc.em_tol,
                    alpha=qc.em_alpha,
                )
                est.update(em.labels)
                iterations = em.iterations
        for qid in sorted(ml_answers):
            est[qid] = multilabel_aggregate(
                ml_answers[qid], qc.multilabel_threshold
            )
        timings[method] = time.perf_counter() - start
        full = {qid: est.get(qid, -1) for qid in truth}
        acc_all = accuracy(full, truth) if truth else 0.0
        if est:
            acc_answered = accuracy(est, {q: truth[q] for q in est})
        else:
            acc_answered = 0.0
        n_correct = int(round(acc_all * len(truth)))
        reports.append(
            AggregationReport(
                method=method,
                accuracy=acc_all,
                accuracy_answered=acc_answered,
                n_questions=len(truth),
                n_answered=len(est),
                n_correct=n_correct,
                iterations=iterations,
            )
        )
    return reports, timings


def run_scenario(
    config: ScenarioConfig,
    *,
    profiles: Mapping[int, WorkerProfile] | None = None,
    prior: RankingPrior | None = None,
) -> ResultSet:
    """Simulate one configured scenario end to end.

    profiles, when given, are attached to the generated workers before any
    ranking happens; prior biases ranked dispatch away from learned
    inefficient (class, type) pairs. Both default to off.
    """
    world = generate_world(config.world, config.seed)
    if profiles is not None:
        world = replace(
            world,
            workers=tuple(
                replace(w, profile=profiles.get(w.id, w.profile))
                for w in world.workers
            ),
        )
    tasks, truth = _generate_tasks(config, world)
    cred_profiles = {
        w.id: (w.profile if w.profile is not None and w.profile.class_affinity
               else _affinity_profile(w))
        for w in world.workers
    }
    rng_disp = np.random.default_rng([config.seed, 5])
    rng_ans = np.random.default_rng([config.seed, 6])
    assignment_counter = 0
    all_events: list[DeliveryEvent] = []
    all_answers: list[AnswerEvent] = []
    per_worker_records: dict[int, list[ActivityRecord]] = {
        w.id: [] for w in world.workers
    }
    task_class: dict[int, int] = {}
    events_per_task: list[tuple[int, tuple[DeliveryEvent, ...]]] = []
    for task in tasks:
        world = step_mobility(world, task.created_at)
        workers_by_id = {w.id: w for w in world.workers}
        if task.kind is TaskKind.EMERGENCY:
            result = emergency_broadcast(
                task, world, config.network, rng_disp,
                first_assignment_id=assignment_counter,
            )
        else:
            result = dispatch_task(
                task, world, config.dispatch.weights, config.network,
                config.dispatch.fanout, rng_disp,
                policy=config.dispatch.policy, prior=prior,
                first_assignment_id=assignment_counter,
            )
        assignment_counter += len(result.assignments)
        task_class[task.id] = classify_location(
            task.context.center, world.index
        )
        answers, records = _simulate_answers(
            task, result, workers_by_id, config, truth, rng_ans
        )
        all_events.extend(result.events)
        all_answers.extend(answers)
        for wid, rec in records:
            per_worker_records[wid].append(rec)
        events_per_task.append((task.id, result.events))

    reports, timings = _aggregate(
        config, all_answers, truth, task_class, cred_profiles
    )

    net = network_metrics(all_events) if all_events else None
    net_per_task = tuple(
        (tid, network_metrics(evs)) for tid, evs in events_per_task if evs
    )

    type_betas = {
        t.id: config.quality.prs_for_type(t.id)
        for t in world.taxonomy.task_types
    } or {0: config.quality.prs}
    built_profiles: dict[int, WorkerProfile] = {}
    for w in world.workers:
        history = ActivityHistory()
        for rec in sorted(per_worker_records[w.id], key=lambda r: r.timestamp_s):
            history = record_activity(history, rec)
        built_profiles[w.id] = build_profile(
            history, w.schedule, worker_id=w.id, prs=type_betas
        )

    now = max((a.answer.sent_at for a in all_answers), default=world.clock_s)
    scores = {}
    for w in world.workers:
        history = ActivityHistory(
            records=tuple(
                sorted(per_worker_records[w.id], key=lambda r: r.timestamp_s)
            )
        )
        scores[w.id] = gamification_score(
            history.records,
            config.quality.prs,
            config.quality.gamification_half_life_s,
            config.quality.gamification_w_acc,
            config.quality.gamification_w_eff,
            now,
        )
    leaderboard = rank_scores(scores)

    pairs: tuple[EfficiencyPair, ...] = ()
    if config.geolearn.enabled:
        pairs = _learn_pairs(config, all_events, all_answers)

    return ResultSet(
        config=config,
        fingerprint=config_fingerprint(config),
        kernel_backend=kernels.active_backend(),
        tasks=tasks,
        truth=truth,
        delivery_events=tuple(all_events),
        answers=tuple(all_answers),
        reports=tuple(reports),
        network=net,
        network_per_task=net_per_task,
        profiles=built_profiles,
        leaderboard=leaderboard,
        efficiency_pairs=pairs,
        compute_seconds=timings,
    )


def outcome_samples(
    delivery_events: Sequence[DeliveryEvent],
    answers: Sequence[AnswerEvent],
) -> list[OutcomeSample]:
    """Join delivered assignments with their answers (if any)."""
    answered = {a.answer.assignment_id: a for a in answers}
    samples = []
    for e in delivery_events:
        if e.outcome != OUTCOME_DELIVERED:
            continue
        a = answered.get(e.assignment_id)
        if a is None:
            samples.append(
                OutcomeSample(
                    location_class=e.worker_class,
                    task_type=e.task_type,
                    answered=False,
                )
            )
        else:
            samples.append(
                OutcomeSample(
                    location_class=e.worker_class,
                    task_type=e.task_type,
                    answered=True,
                    correct=a.correct,
                    prs=a.prs,
                )
            )
    return samples


def _learn_pairs(
    config: ScenarioConfig,
    delivery_events: Sequence[DeliveryEvent],
    answers: Sequence[AnswerEvent],
) -> tuple[EfficiencyPair, ...]:
    gl = config.geolearn
    samples = outcome_samples(delivery_events, answers)
    if not samples:
        return ()
    features = featurize(samples, min_samples=gl.min_samples)
    if len(features) < gl.k:
        return ()
    seeds = tuple(
        SeedLabel(class_id=c, task_type=t, verdict=Verdict(v))
        for c, t, v in gl.seeds
    )
    clusters = seeded_cluster(features, seeds, k=gl.k, seed=config.seed)
    return label_efficiency(
        clusters, features, gl.acc_threshold, gl.prs_threshold
    )


# ---------------------------------------------------------------------------
# export


def _json_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def export_results(result: ResultSet, out_dir: str | Path) -> dict[str, str]:
    """Write a ResultSet to a directory; returns file name -> sha256.

    The same ResultSet always produces byte-identical files: content is
    fully ordered, floats are serialized by repr, and nothing derived from
    wall-clock time is written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    lines = []
    for e in result.delivery_events:
        lines.append(
            (
                e.timestamp_s,
                "delivery",
                e.assignment_id,
                _json_line(
                    {
                        "kind": "delivery",
                        "t": e.timestamp_s,
                        "assignment": e.assignment_id,
                        "task": e.task_id,
                        "question": e.question_id,
                        "worker": e.worker_id,
                        "outcome": e.outcome,
                        "payload_bytes": e.payload_bytes,
                        "worker_class": e.worker_class,
                        "task_type": e.task_type,
                    }
                ),
            )
        )
    for a in result.answers:
        ans = a.answer
        lines.append(
            (
                ans.sent_at,
                "answer",
                ans.assignment_id,
                _json_line(
                    {
                        "kind": "answer",
                        "t": ans.sent_at,
                        "assignment": ans.assignment_id,
                        "task": a.task_id,
                        "question": ans.question_id,
                        "worker": ans.worker_id,
                        "labels": sorted(ans.labels),
                        "read_at": ans.read_at,
                        "sent_at": ans.sent_at,
                        "correct": a.correct,
                        "multi_label": a.multi_label,
                        "prs": a.prs,
                        "delta_to_budget": a.delta_to_budget,
                        "worker_class": a.worker_class,
                        "task_type": a.task_type,
                    }
                ),
            )
        )
    lines.sort(key=lambda row: (row[0], row[1], row[2]))
    _write_text(out / "events.jsonl", "".join(line + "\n" for _, _, _, line in lines))

    agg_rows = ["method,n_questions,n_answered,n_correct,accuracy,accuracy_answered,iterations"]
    for r in result.reports:
        agg_rows.append(
            f"{r.method},{r.n_questions},{r.n_answered},{r.n_correct},"
            f"{r.accuracy!r},{r.accuracy_answered!r},{r.iterations}"
        )
    _write_text(out / "aggregation.csv", "\n".join(agg_rows) + "\n")

    net_rows = [
        "scope,task_id,attempted,delivered,failed,unreachable,availability,"
        "failure_rate,failure_given_reachable,throughput_bytes"
    ]

    def _net_row(scope: str, task_id: str, m: NetworkMetrics) -> str:
        return (
            f"{scope},{task_id},{m.attempted},{m.delivered},{m.failed},"
            f"{m.unreachable},{m.availability!r},{m.failure_rate!r},"
            f"{m.failure_given_reachable!r},{m.throughput_bytes!r}"
        )

    if result.network is not None:
        net_rows.append(_net_row("run", "", result.network))
    for tid, m in result.network_per_task:
        net_rows.append(_net_row("task", str(tid), m))
    _write_text(out / "network.csv", "\n".join(net_rows) + "\n")

    ranks = {s.worker_id: s for s in result.leaderboard}
    workers_json = []
    for wid in sorted(result.profiles):
        p = result.profiles[wid]
        entry = {
            "worker_id": wid,
            "skill": {str(t): v for t, v in p.skill},
            "mean_prs": p.mean_prs,
            "class_affinity": {str(c): v for c, v in p.class_affinity},
            "multilabel_willingness": p.multilabel_willingness,
            "answered": p.answered,
            "correct": p.correct,
        }
        if wid in ranks:
            entry["gamification"] = {
                "score": ranks[wid].score,
                "rank": ranks[wid].rank,
            }
        workers_json.append(entry)
    _write_text(
        out / "profiles.json",
        json.dumps({"workers": workers_json}, sort_keys=True, indent=2) + "\n",
    )

    pair_rows = ["class_id,task_type,verdict,confidence,sample_count"]
    for p in result.efficiency_pairs:
        pair_rows.append(
            f"{p.class_id},{p.task_type},{p.verdict.value},"
            f"{p.confidence!r},{p.sample_count}"
        )
    _write_text(out / "efficiency_pairs.csv", "\n".join(pair_rows) + "\n")

    names = [
        "events.jsonl", "aggregation.csv", "network.csv", "profiles.json",
        "efficiency_pairs.csv",
    ]
    hashes = {
        name: hashlib.sha256((out / name).read_bytes()).hexdigest()
        for name in names
    }
    manifest = {
        "fingerprint": result.fingerprint,
        "seed": result.config.seed,
        "kernel_backend": result.kernel_backend,
        "config": scenario_to_dict(result.config),
        "counts": {
            "tasks": len(result.tasks),
            "questions": len(result.truth),
            "delivery_events": len(result.delivery_events),
            "answers": len(result.answers),
        },
        "files": hashes,
    }
    _write_text(
        out / "manifest.json",
        json.dumps(manifest, sort_keys=True, indent=2) + "\n",
    )
    hashes["manifest.json"] = hashlib.sha256(
        (out / "manifest.json").read_bytes()
    ).hexdigest()
    return hashes


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepCell:
    method: str
    axis_value: float
    answers_per_question: float
    questions_per_worker: float
    spammer_ratio: float
    accuracy_mean: float
    accuracy_std: float
    compute_seconds: float


@dataclass(frozen=True)
class SweepResult:
    axis: str
    values: tuple[float, ...]
    reps: int
    cells: tuple[SweepCell, ...]
    #: per method, the smallest axis value whose mean accuracy meets target
    smallest_meeting_target: Mapping[str, float | None]
    target_accuracy: float


def _apply_axis(config: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "answers_per_question":
        return replace(
            config, dispatch=replace(config.dispatch, fanout=int(round(value)))
        )
    if axis == "spammer_ratio":
        return replace(config, world=replace(config.world, spammer_ratio=value))
    if axis == "questions_per_worker":
        qpt = config.tasks.questions_per_task
        fanout = config.dispatch.fanout
        n_tasks = max(
            1, int(round(value * config.world.n_workers / (qpt * fanout)))
        )
        return replace(config, tasks=replace(config.tasks, n_tasks=n_tasks))
    raise InvalidSpecError(f"unknown sweep axis {axis!r}; know {SWEEP_AXES}")


def _axis_coordinates(config: ScenarioConfig) -> tuple[float, float, float]:
    tg = config.tasks
    apq = float(config.dispatch.fanout)
    qpw = (
        tg.n_tasks * tg.questions_per_task * config.dispatch.fanout
        / config.world.n_workers
    )
    return apq, qpw, config.world.spammer_ratio


def sweep(
    config: ScenarioConfig,
    axis: str,
    values: Sequence[float],
    reps: int = 1,
    target_accuracy: float = 0.9,
) -> SweepResult:
    """Rerun a scenario along one axis, reps seeds per value.

    Seeds advance with the flat run index so every cell is independent and
    the whole sweep is reproducible from the base config seed.
    """
    if axis not in SWEEP_AXES:
        raise InvalidSpecError(f"unknown sweep axis {axis!r}; know {SWEEP_AXES}")
    if not values:
        raise InvalidSpecError("sweep needs at least one axis value")
    if reps <= 0:
        raise InvalidSpecError("reps must be positive")
    cells = []
    for vi, value in enumerate(values):
        cfg_v = _apply_axis(config, axis, float(value))
        per_method: dict[str, list[float]] = {}
        per_method_time: dict[str, list[float]] = {}
        for rep in range(reps):
            cfg = replace(cfg_v, seed=config.seed + vi * reps + rep)
            res = run_scenario(cfg)
            for r in res.reports:
                per_method.setdefault(r.method, []).append(r.accuracy)
                per_method_time.setdefault(r.method, []).append(
                    res.compute_seconds.get(r.method, 0.0)
                )
        apq, qpw, spam = _axis_coordinates(cfg_v)
        for method in sorted(per_method):
            accs = np.array(per_method[method])
            cells.append(
                SweepCell(
                    method=method,
                    axis_value=float(value),
                    answers_per_question=apq,
                    questions_per_worker=qpw,
                    spammer_ratio=spam,
                    accuracy_mean=float(accs.mean()),
                    accuracy_std=float(accs.std(ddof=1)) if len(accs) > 1 else 0.0,
                    compute_seconds=float(np.sum(per_method_time[method])),
                )
            )
    meeting: dict[str, float | None] = {}
    for c in cells:
        meeting.setdefault(c.method, None)
        if c.accuracy_mean >= target_accuracy:
            best = meeting[c.method]
            if best is None or c.axis_value < best:
                meeting[c.method] = c.axis_value
    return SweepResult(
        axis=axis,
        values=tuple(float(v) for v in values),
        reps=reps,
        cells=tuple(cells),
        smallest_meeting_target=meeting,
        target_accuracy=target_accuracy,
    )


def export_sweep(result: SweepResult, out_dir: str | Path) -> Path:
    """Write sweep cells to sweep.csv plus a small summary JSON."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "method", "axis", "axis_value", "answers_per_question",
                "questions_per_worker", "spammer_ratio", "accuracy",
                "accuracy_std", "compute_seconds",
            ]
        )
        for c in result.cells:
            writer.writerow(
                [
                    c.method, result.axis, repr(c.axis_value),
                    repr(c.answers_per_question), repr(c.questions_per_worker),
                    repr(c.spammer_ratio), repr(c.accuracy_mean),
                    repr(c.accuracy_std), repr(c.compute_seconds),
                ]
            )
    summary = {
        "axis": result.axis,
        "values": list(result.values),
        "reps": result.reps,
        "target_accuracy": result.target_accuracy,
        "smallest_meeting_target": dict(
            sorted(result.smallest_meeting_target.items())
        ),
    }
    (out / "sweep_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n"
    )
    return path


# ---------------------------------------------------------------------------
# hypothesis experiments


@dataclass(frozen=True)
class ExperimentOutcome:
    """Paired comparison of two arms over seeds; margin is mean(a - b)."""

    name: str
    metric: str
    arm_a: str
    arm_b: str
    mean_a: float
    mean_b: float
    margin: float
    paired_se: float
    per_seed: tuple[tuple[float, float], ...]

    @property
    def supported(self) -> bool:
        return self.margin > self.paired_se


@dataclass(frozen=True)
class HypothesisReport:
    outcomes: tuple[ExperimentOutcome, ...]

    def outcome(self, name: str, metric: str) -> ExperimentOutcome:
        for o in self.outcomes:
            if o.name == name and o.metric == metric:
                return o
        raise KeyError((name, metric))


def _paired_outcome(
    name: str, metric: str, arm_a: str, arm_b: str,
    pairs: Sequence[tuple[float, float]],
) -> ExperimentOutcome:
    arr = np.array(pairs, dtype=np.float64)
    diffs = arr[:, 0] - arr[:, 1]
    se = (
        float(diffs.std(ddof=1) / math.sqrt(len(diffs)))
        if len(diffs) > 1
        else 0.0
    )
    return ExperimentOutcome(
        name=name,
        metric=metric,
        arm_a=arm_a,
        arm_b=arm_b,
        mean_a=float(arr[:, 0].mean()),
        mean_b=float(arr[:, 1].mean()),
        margin=float(diffs.mean()),
        paired_se=se,
        per_seed=tuple((float(a), float(b)) for a, b in pairs),
    )


def _first_answer_latency(res: ResultSet, task_id: int, horizon: float) -> float:
    times = [
        a.answer.sent_at - a.answer.read_at
        for a in res.answers
        if a.task_id == task_id
    ]
    return min(times) if times else horizon


def _broadcast_experiment(
    config: ScenarioConfig, seeds: Sequence[int]
) -> list[ExperimentOutcome]:
    """Geofenced broadcast against ranked dispatch on one emergency task."""
    base_tasks = replace(
        config.tasks,
        n_tasks=1,
        emergency_fraction=1.0,
        radius_m=config.tasks.emergency_radius_m,
    )
    latency_pairs = []
    coverage_pairs = []
    horizon = 3_600.0
    for s in seeds:
        cfg_a = replace(config, tasks=base_tasks, seed=s)
        cfg_b = replace(
            config, tasks=replace(base_tasks, emergency_fraction=0.0), seed=s
        )
        res_a = run_scenario(cfg_a)
        res_b = run_scenario(cfg_b)
        latency_pairs.append(
            (
                _first_answer_latency(res_a, 0, horizon),
                _first_answer_latency(res_b, 0, horizon),
            )
        )
        # attempts per question in the broadcast arm = workers inside fence
        nq = base_tasks.questions_per_task
        inside = len(res_a.delivery_events) / nq if nq else 0.0
        reached_a = {
            e.worker_id
            for e in res_a.delivery_events
            if e.outcome == OUTCOME_DELIVERED
        }
        reached_b = {
            e.worker_id
            for e in res_b.delivery_events
            if e.outcome == OUTCOME_DELIVERED
        }
        coverage_pairs.append(
            (
                len(reached_a) / inside if inside else 0.0,
                len(reached_b) / inside if inside else 0.0,
            )
        )
    # latency is better when smaller, so flip the sign into "b - a"
    flipped = [(b, a) for a, b in latency_pairs]
    return [
        _paired_outcome(
            "broadcast_reach", "first_answer_latency_gain_s",
            "broadcast", "ranked", flipped,
        ),
        _paired_outcome(
            "broadcast_reach", "geofence_coverage",
            "broadcast", "ranked", coverage_pairs,
        ),
    ]


def _profile_experiment(
    config: ScenarioConfig, seeds: Sequence[int]
) -> list[ExperimentOutcome]:
    """Profile-aware ranked dispatch against random assignment.

    Each seed first runs a warmup pass under random assignment, builds
    profiles from the histories, then evaluates both arms on a fresh task
    set with the same worker population.
    """
    acc_pairs = []
    for s in seeds:
        warm_cfg = replace(
            config,
            dispatch=replace(config.dispatch, policy="random"),
            geolearn=GeolearnConfig(enabled=False),
            seed=s,
        )
        warm = run_scenario(warm_cfg)
        profiles = dict(warm.profiles)
        eval_tasks_seed = s + 104_729
        cfg_a = replace(
            config,
            dispatch=replace(config.dispatch, policy="ranked"),
            seed=s,
            task_seed=eval_tasks_seed,
        )
        cfg_b = replace(
            config,
            dispatch=replace(config.dispatch, policy="random"),
            seed=s,
            task_seed=eval_tasks_seed,
        )
        res_a = run_scenario(cfg_a, profiles=profiles)
        res_b = run_scenario(cfg_b, profiles=profiles)
        acc_pairs.append(
            (res_a.report(METHOD_MAJORITY).accuracy,
             res_b.report(METHOD_MAJORITY).accuracy)
        )
    return [
        _paired_outcome(
            "profile_targeting", "majority_accuracy",
            "profile_ranked", "random", acc_pairs,
        )
    ]


def _mean_response_s(res: ResultSet) -> float:
    if not res.answers:
        return 0.0
    return float(
        np.mean([a.answer.sent_at - a.answer.read_at for a in res.answers])
    )


def _context_experiment(
    config: ScenarioConfig, seeds: Sequence[int]
) -> list[ExperimentOutcome]:
    """Context-matched ranked dispatch against random assignment.

    All outcomes are oriented so a positive margin supports the ranked
    arm; response time, where smaller is better, is therefore reported as
    the random arm's excess over the ranked arm.
    """
    acc_pairs = []
    prs_pairs = []
    time_pairs = []
    for s in seeds:
        cfg_a = replace(
            config, dispatch=replace(config.dispatch, policy="ranked"), seed=s
        )
        cfg_b = replace(
            config, dispatch=replace(config.dispatch, policy="random"), seed=s
        )
        res_a = run_scenario(cfg_a)
        res_b = run_scenario(cfg_b)
        acc_pairs.append(
            (res_a.report(METHOD_MAJORITY).accuracy,
             res_b.report(METHOD_MAJORITY).accuracy)
        )
        mean_prs_a = (
            float(np.mean([a.prs for a in res_a.answers])) if res_a.answers else 0.0
        )
        mean_prs_b = (
            float(np.mean([a.prs for a in res_b.answers])) if res_b.answers else 0.0
        )
        prs_pairs.append((mean_prs_a, mean_prs_b))
        time_pairs.append((_mean_response_s(res_b), _mean_response_s(res_a)))
    return [
        _paired_outcome(
            "context_match", "majority_accuracy",
            "context_ranked", "random", acc_pairs,
        ),
        _paired_outcome(
            "context_match", "mean_prs",
            "context_ranked", "random", prs_pairs,
        ),
        _paired_outcome(
            "context_match", "response_time_advantage_s",
            "random", "context_ranked", time_pairs,
        ),
    ]


def hypothesis_experiments(
    config: ScenarioConfig, n_seeds: int = 10
) -> HypothesisReport:
    """Run the three built-in paired experiments over n_seeds seeds.

    Effect sizes and paired standard errors only; drawing a significance
    line is left to the caller.
    """
    if n_seeds < 2:
        raise InvalidSpecError("need at least 2 seeds for paired comparisons")
    seeds = [config.seed + 1_000 + i for i in range(n_seeds)]
    outcomes: list[ExperimentOutcome] = []
    outcomes.extend(_broadcast_experiment(config, seeds))
    outcomes.extend(_profile_experiment(config, seeds))
    outcomes.extend(_context_experiment(config, seeds))
    return HypothesisReport(outcomes=tuple(outcomes))


def export_hypotheses(report: HypothesisReport, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "hypotheses.json"
    payload = [
        {
            "name": o.name,
            "metric": o.metric,
            "arm_a": o.arm_a,
            "arm_b": o.arm_b,
            "mean_a": o.mean_a,
            "mean_b": o.mean_b,
            "margin": o.margin,
            "paired_se": o.paired_se,
            "supported": o.supported,
            "per_seed": [list(p) for p in o.per_seed],
        }
        for o in report.outcomes
    ]
    path.write_text(json.dumps({"outcomes": payload}, sort_keys=True, indent=2) + "\n")
    return path


# ---------------------------------------------------------------------------
# iterated location learning


@dataclass(frozen=True)
class LearningRound:
    round_index: int
    pairs: tuple[EfficiencyPair, ...]
    #: verdict flips against the previous round; None for the first round
    churn: int | None


@dataclass(frozen=True)
class LearningReport:
    rounds: tuple[LearningRound, ...]
    final_prior: RankingPrior


def iterate_location_learning(
    config: ScenarioConfig, rounds: int = 2
) -> LearningReport:
    """Feed learned inefficiency verdicts back into dispatch, repeatedly.

    Each round runs the scenario with the previous round's verdicts as a
    ranking prior, then relearns. Churn counts how many (class, type)
    pairs changed verdict between consecutive rounds.
    """
    if rounds < 1:
        raise InvalidSpecError("need at least one learning round")
    cfg = replace(config, geolearn=replace(config.geolearn, enabled=True))
    prior: RankingPrior | None = None
    prev_ineff: set[tuple[int, int]] | None = None
    out = []
    for i in range(rounds):
        res = run_scenario(cfg, prior=prior)
        ineff = {
            (p.class_id, p.task_type)
            for p in res.efficiency_pairs
            if p.verdict is Verdict.INEFFICIENT
        }
        churn = None if prev_ineff is None else len(ineff ^ prev_ineff)
        out.append(
            LearningRound(
                round_index=i, pairs=res.efficiency_pairs, churn=churn
            )
        )
        prev_ineff = ineff
        prior = RankingPrior(inefficient_pairs=frozenset(ineff))
    return LearningReport(rounds=tuple(out), final_prior=prior)
