"""End-to-end scenario runs, config round trips, sweeps, exports."""

from __future__ import annotations

import json
from dataclasses import replace

import pytest

from mobicrowd.dispatch import (
    OUTCOME_DELIVERED,
    ContextWeights,
    NetworkModel,
    RankingPrior,
)
from mobicrowd.errors import InvalidConfigError, InvalidSpecError
from mobicrowd.geolearn import Verdict
from mobicrowd.harness import (
    METHOD_EM,
    METHOD_MAJORITY,
    METHOD_WEIGHTED,
    AnswerModelConfig,
    DispatchConfig,
    GeolearnConfig,
    QualityConfig,
    ScenarioConfig,
    TaskGenConfig,
    config_fingerprint,
    export_hypotheses,
    export_results,
    export_sweep,
    hypothesis_experiments,
    iterate_location_learning,
    outcome_samples,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
    sweep,
)
from mobicrowd.quality import PrsParams
from mobicrowd.world import (
    CycleReliability,
    FixedReliability,
    PlaceGridConfig,
    WorldConfig,
)


def tiny_config(**kw) -> ScenarioConfig:
    base = dict(
        world=WorldConfig(n_workers=12, place_grid=PlaceGridConfig(n_places=6)),
        tasks=TaskGenConfig(
            n_tasks=8, questions_per_task=3, n_labels=3, inter_task_gap_s=30.0
        ),
        dispatch=DispatchConfig(fanout=4),
        seed=5,
    )
    base.update(kw)
    return ScenarioConfig(**base)


class TestConfigRoundTrip:
    def _rich_config(self) -> ScenarioConfig:
        return ScenarioConfig(
            world=WorldConfig(
                n_workers=15,
                spammer_ratio=0.2,
                spammer_fixed_share=0.5,
                sloth_ratio=0.1,
                reliability=CycleReliability((0.9, 0.7, 0.5)),
                place_grid=PlaceGridConfig(n_places=5, spacing_m=900.0),
            ),
            tasks=TaskGenConfig(
                n_tasks=6,
                questions_per_task=2,
                n_labels=4,
                multi_label_fraction=0.25,
                emergency_fraction=0.1,
                admissible_classes=(1, 2),
            ),
            dispatch=DispatchConfig(
                weights=ContextWeights(0.5, 1.0, 0.25), fanout=3, policy="random"
            ),
            network=NetworkModel(availability_prob=0.8, delivery_failure_prob=0.1),
            quality=QualityConfig(
                prs=PrsParams(beta=25.0, t_min=2.0),
                beta_by_type=((0, 20.0), (1, 45.0)),
                methods=(METHOD_MAJORITY, METHOD_EM),
            ),
            answers=AnswerModelConfig(
                busyness=((4, 2.0),), class_mismatch_penalty=0.9, answer_prob=0.85
            ),
            geolearn=GeolearnConfig(
                enabled=True,
                min_samples=10,
                seeds=((1, 0, "efficient"), (4, 1, "inefficient")),
            ),
            seed=99,
            task_seed=123,
        )

    def test_to_dict_from_dict_is_identity(self):
        cfg = self._rich_config()
        assert scenario_from_dict(scenario_to_dict(cfg)) == cfg

    def test_dict_form_survives_json(self):
        cfg = self._rich_config()
        raw = json.loads(json.dumps(scenario_to_dict(cfg)))
        assert scenario_from_dict(raw) == cfg

    def test_unknown_top_level_key_rejected(self):
        raw = scenario_to_dict(tiny_config())
        raw["wrold"] = {}
        with pytest.raises(InvalidConfigError):
            scenario_from_dict(raw)

    def test_unknown_nested_key_rejected(self):
        raw = scenario_to_dict(tiny_config())
        raw["world"]["n_wrokers"] = 5
        with pytest.raises(InvalidConfigError):
            scenario_from_dict(raw)

    def test_unknown_reliability_kind_rejected(self):
        raw = scenario_to_dict(tiny_config())
        raw["world"]["reliability"] = {"kind": "magic"}
        with pytest.raises(InvalidConfigError):
            scenario_from_dict(raw)

    def test_fingerprint_tracks_config_identity(self):
        a = tiny_config()
        b = tiny_config()
        c = tiny_config(seed=6)
        assert config_fingerprint(a) == config_fingerprint(b)
        assert config_fingerprint(a) != config_fingerprint(c)
        assert len(config_fingerprint(a)) == 64


class TestRunScenario:
    def test_identical_runs_are_equal(self):
        cfg = tiny_config(
            world=WorldConfig(
                n_workers=12,
                spammer_ratio=0.2,
                place_grid=PlaceGridConfig(n_places=6),
            ),
            network=NetworkModel(availability_prob=0.8, delivery_failure_prob=0.1),
        )
        a = run_scenario(cfg)
        b = run_scenario(cfg)
        assert a.answers == b.answers
        assert a.delivery_events == b.delivery_events
        assert a.reports == b.reports
        assert a.leaderboard == b.leaderboard
        assert a.fingerprint == b.fingerprint

    def test_answers_only_from_delivered_assignments(self):
        cfg = tiny_config(
            network=NetworkModel(availability_prob=0.7, delivery_failure_prob=0.15),
        )
        res = run_scenario(cfg)
        delivered = {
            e.assignment_id
            for e in res.delivery_events
            if e.outcome == OUTCOME_DELIVERED
        }
        assert res.answers  # something got through
        for a in res.answers:
            assert a.answer.assignment_id in delivered
            assert a.answer.sent_at > a.answer.read_at

    def test_report_bookkeeping(self):
        cfg = tiny_config()
        res = run_scenario(cfg)
        n_questions = cfg.tasks.n_tasks * cfg.tasks.questions_per_task
        assert len(res.truth) == n_questions
        assert {r.method for r in res.reports} == set(cfg.quality.methods)
        for r in res.reports:
            assert r.n_questions == n_questions
            assert 0.0 <= r.accuracy <= r.accuracy_answered <= 1.0
            assert r.n_correct == round(r.accuracy * n_questions)
        assert set(res.compute_seconds) == set(cfg.quality.methods)

    def test_noiseless_world_is_perfect(self):
        cfg = tiny_config(
            world=WorldConfig(
                n_workers=10,
                reliability=FixedReliability(1.0),
                place_grid=PlaceGridConfig(n_places=4),
            ),
        )
        res = run_scenario(cfg)
        for r in res.reports:
            assert r.accuracy == 1.0
            assert r.n_answered == r.n_questions
        assert all(a.correct for a in res.answers)
        assert res.network.failure_rate == 0.0

    def test_dead_network_answers_nothing(self):
        cfg = tiny_config(network=NetworkModel(availability_prob=0.0))
        res = run_scenario(cfg)
        assert res.answers == ()
        assert all(r.accuracy == 0.0 and r.n_answered == 0 for r in res.reports)
        assert res.network.delivered == 0

    def test_network_rollup_matches_per_task(self):
        cfg = tiny_config(
            network=NetworkModel(availability_prob=0.75, delivery_failure_prob=0.1)
        )
        res = run_scenario(cfg)
        assert res.network.attempted == len(res.delivery_events)
        assert res.network.attempted == sum(
            m.attempted for _, m in res.network_per_task
        )
        assert res.network.delivered == sum(
            m.delivered for _, m in res.network_per_task
        )

    def test_profiles_and_leaderboard_cover_everyone(self):
        cfg = tiny_config()
        res = run_scenario(cfg)
        n = cfg.world.n_workers
        assert set(res.profiles) == set(range(n))
        assert len(res.leaderboard) == n
        assert [s.rank for s in res.leaderboard] == list(range(1, n + 1))
        scores = [s.score for s in res.leaderboard]
        assert scores == sorted(scores, reverse=True)
        for p in res.profiles.values():
            assert p.correct <= p.answered

    def test_emergency_tasks_reach_every_worker_in_range(self):
        cfg = tiny_config(
            tasks=TaskGenConfig(
                n_tasks=3,
                questions_per_task=2,
                n_labels=3,
                emergency_fraction=1.0,
                emergency_radius_m=50_000.0,
            ),
        )
        res = run_scenario(cfg)
        # the whole grid sits well inside 50 km, so a broadcast hits everyone
        per_question = cfg.world.n_workers
        assert len(res.delivery_events) == 3 * 2 * per_question

    def test_multilabel_scenario_aggregates_sets(self):
        cfg = tiny_config(
            world=WorldConfig(
                n_workers=10,
                reliability=FixedReliability(1.0),
                place_grid=PlaceGridConfig(n_places=4),
            ),
            tasks=TaskGenConfig(
                n_tasks=6, questions_per_task=2, n_labels=4, multi_label_fraction=1.0
            ),
        )
        res = run_scenario(cfg)
        assert all(a.multi_label for a in res.answers)
        assert any(len(t) > 1 for t in res.truth.values())
        for r in res.reports:
            assert r.accuracy == 1.0

    def test_beta_by_type_changes_prs(self):
        slow = tiny_config(
            quality=QualityConfig(prs=PrsParams(beta=30.0), methods=(METHOD_MAJORITY,))
        )
        fast = tiny_config(
            quality=QualityConfig(
                prs=PrsParams(beta=30.0),
                beta_by_type=tuple((t, 300.0) for t in range(5)),
                methods=(METHOD_MAJORITY,),
            )
        )
        res_slow = run_scenario(slow)
        res_fast = run_scenario(fast)
        # identical answer streams, ten times the budget, ten times the score
        mean_slow = sum(a.prs for a in res_slow.answers) / len(res_slow.answers)
        mean_fast = sum(a.prs for a in res_fast.answers) / len(res_fast.answers)
        assert mean_fast == pytest.approx(10.0 * mean_slow)

    def test_geolearn_produces_pairs_inline(self):
        cfg = tiny_config(
            tasks=TaskGenConfig(n_tasks=20, questions_per_task=3, n_labels=3),
            geolearn=GeolearnConfig(enabled=True, min_samples=5),
        )
        res = run_scenario(cfg)
        assert res.efficiency_pairs
        for p in res.efficiency_pairs:
            assert p.verdict in (Verdict.EFFICIENT, Verdict.INEFFICIENT)
            assert 0.0 <= p.confidence <= 1.0


class TestOutcomeSamples:
    def test_join_covers_delivered_and_flags_answers(self):
        cfg = tiny_config(
            network=NetworkModel(availability_prob=0.8),
            answers=AnswerModelConfig(answer_prob=0.6),
        )
        res = run_scenario(cfg)
        samples = outcome_samples(res.delivery_events, res.answers)
        n_delivered = sum(
            1 for e in res.delivery_events if e.outcome == OUTCOME_DELIVERED
        )
        assert len(samples) == n_delivered
        answered = [s for s in samples if s.answered]
        assert len(answered) == len(res.answers)
        assert all(s.prs > 0.0 for s in answered)
        declined = [s for s in samples if not s.answered]
        assert declined and all(s.prs == 0.0 for s in declined)


class TestSweep:
    def test_cells_cover_grid_and_methods(self):
        cfg = tiny_config(
            quality=QualityConfig(methods=(METHOD_MAJORITY, METHOD_WEIGHTED))
        )
        result = sweep(cfg, "spammer_ratio", [0.0, 0.4], reps=2, target_accuracy=0.5)
        assert result.axis == "spammer_ratio"
        assert len(result.cells) == 4  # 2 values x 2 methods
        assert {c.method for c in result.cells} == {METHOD_MAJORITY, METHOD_WEIGHTED}
        for c in result.cells:
            assert c.spammer_ratio == c.axis_value
            assert c.compute_seconds > 0.0

    def test_answers_per_question_axis_drives_fanout(self):
        cfg = tiny_config(quality=QualityConfig(methods=(METHOD_MAJORITY,)))
        result = sweep(cfg, "answers_per_question", [1, 5], reps=1)
        assert [c.answers_per_question for c in result.cells] == [1.0, 5.0]

    def test_smallest_meeting_target_picks_minimum_value(self):
        cfg = tiny_config(
            world=WorldConfig(
                n_workers=10,
                reliability=FixedReliability(1.0),
                place_grid=PlaceGridConfig(n_places=4),
            ),
            quality=QualityConfig(methods=(METHOD_MAJORITY,)),
        )
        # perfect workers meet any target at the smallest fanout
        result = sweep(cfg, "answers_per_question", [3, 1], reps=1,
                       target_accuracy=0.9)
        assert result.smallest_meeting_target[METHOD_MAJORITY] == 1.0

    def test_unknown_axis_rejected(self):
        with pytest.raises(InvalidSpecError):
            sweep(tiny_config(), "worker_iq", [1.0])

    def test_bad_reps_and_empty_values_rejected(self):
        with pytest.raises(InvalidSpecError):
            sweep(tiny_config(), "spammer_ratio", [])
        with pytest.raises(InvalidSpecError):
            sweep(tiny_config(), "spammer_ratio", [0.1], reps=0)

    def test_export_writes_csv_and_summary(self, tmp_path):
        cfg = tiny_config(quality=QualityConfig(methods=(METHOD_MAJORITY,)))
        result = sweep(cfg, "spammer_ratio", [0.0], reps=1)
        path = export_sweep(result, tmp_path)
        assert path.name == "sweep.csv"
        header = path.read_text().splitlines()[0]
        assert header.startswith("method,axis,axis_value")
        summary = json.loads((tmp_path / "sweep_summary.json").read_text())
        assert summary["axis"] == "spammer_ratio"
        assert "smallest_meeting_target" in summary


class TestExportResults:
    FILES = (
        "events.jsonl",
        "aggregation.csv",
        "network.csv",
        "profiles.json",
        "efficiency_pairs.csv",
        "manifest.json",
    )

    def test_export_writes_every_file_with_hashes(self, tmp_path):
        res = run_scenario(tiny_config())
        hashes = export_results(res, tmp_path)
        assert set(hashes) == set(self.FILES)
        for name in self.FILES:
            assert (tmp_path / name).exists()

    def test_manifest_is_consistent(self, tmp_path):
        res = run_scenario(tiny_config())
        hashes = export_results(res, tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["fingerprint"] == res.fingerprint
        assert manifest["seed"] == res.config.seed
        assert manifest["kernel_backend"] == res.kernel_backend
        assert manifest["counts"]["answers"] == len(res.answers)
        assert manifest["counts"]["questions"] == len(res.truth)
        inner = {k: v for k, v in hashes.items() if k != "manifest.json"}
        assert manifest["files"] == inner
        # the config embedded in the manifest reproduces the original
        assert scenario_from_dict(manifest["config"]) == res.config

    def test_events_are_sorted_and_typed(self, tmp_path):
        res = run_scenario(
            tiny_config(network=NetworkModel(availability_prob=0.8))
        )
        export_results(res, tmp_path)
        rows = [
            json.loads(line)
            for line in (tmp_path / "events.jsonl").read_text().splitlines()
        ]
        assert {r["kind"] for r in rows} == {"delivery", "answer"}
        keys = [(r["t"], r["kind"], r["assignment"]) for r in rows]
        assert keys == sorted(keys)

    def test_reexport_is_byte_identical(self, tmp_path):
        res = run_scenario(tiny_config())
        a = export_results(res, tmp_path / "a")
        b = export_results(res, tmp_path / "b")
        assert a == b
        for name in self.FILES:
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()


class TestHypothesisExperiments:
    def test_report_structure_and_export(self, tmp_path):
        cfg = tiny_config(
            world=WorldConfig(n_workers=10, place_grid=PlaceGridConfig(n_places=4)),
            tasks=TaskGenConfig(n_tasks=4, questions_per_task=2, n_labels=3),
            dispatch=DispatchConfig(fanout=3),
            quality=QualityConfig(methods=(METHOD_MAJORITY,)),
        )
        report = hypothesis_experiments(cfg, n_seeds=2)
        names = {(o.name, o.metric) for o in report.outcomes}
        assert names == {
            ("broadcast_reach", "first_answer_latency_gain_s"),
            ("broadcast_reach", "geofence_coverage"),
            ("profile_targeting", "majority_accuracy"),
            ("context_match", "majority_accuracy"),
            ("context_match", "mean_prs"),
            ("context_match", "response_time_advantage_s"),
        }
        for o in report.outcomes:
            assert len(o.per_seed) == 2
            assert o.margin == pytest.approx(o.mean_a - o.mean_b, abs=1e-12)
        path = export_hypotheses(report, tmp_path)
        payload = json.loads(path.read_text())
        assert len(payload["outcomes"]) == 6
        assert all("supported" in o for o in payload["outcomes"])

    def test_single_seed_rejected(self):
        with pytest.raises(InvalidSpecError):
            hypothesis_experiments(tiny_config(), n_seeds=1)


class TestIterateLocationLearning:
    def test_rounds_feed_verdicts_forward(self):
        cfg = tiny_config(
            tasks=TaskGenConfig(n_tasks=15, questions_per_task=3, n_labels=3),
            geolearn=GeolearnConfig(enabled=False, min_samples=5),
        )
        report = iterate_location_learning(cfg, rounds=2)
        assert len(report.rounds) == 2
        assert report.rounds[0].churn is None
        assert isinstance(report.rounds[1].churn, int)
        assert report.rounds[0].pairs  # learning was forced on
        last_ineff = {
            (p.class_id, p.task_type)
            for p in report.rounds[-1].pairs
            if p.verdict is Verdict.INEFFICIENT
        }
        assert set(report.final_prior.inefficient_pairs) == last_ineff

    def test_zero_rounds_rejected(self):
        with pytest.raises(InvalidSpecError):
            iterate_location_learning(tiny_config(), rounds=0)

    def test_prior_demotes_flagged_workers_end_to_end(self):
        # scenario rerun with a prior should still work and stay deterministic
        cfg = tiny_config()
        prior = RankingPrior(inefficient_pairs={(1, 0), (2, 1)}, penalty=0.5)
        a = run_scenario(cfg, prior=prior)
        b = run_scenario(cfg, prior=prior)
        assert a.answers == b.answers
