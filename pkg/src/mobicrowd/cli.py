"""Command-line entry points.

Four subcommands: run one scenario, sweep an axis, run the paired
experiments, or relearn location efficiency from an exported results
directory. Errors print a single JSON object on stderr and exit nonzero,
so wrapping scripts never have to parse prose.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import InvalidConfigError, MobicrowdError
from .geolearn import SeedLabel, Verdict, featurize, label_efficiency, seeded_cluster
from .harness import (
    ScenarioConfig,
    export_hypotheses,
    export_results,
    export_sweep,
    hypothesis_experiments,
    outcome_samples,
    run_scenario,
    scenario_from_dict,
    sweep,
)


def _load_config(path: str) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from exc
    return scenario_from_dict(raw)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    result = run_scenario(config)
    export_results(result, args.out)
    print(f"fingerprint {result.fingerprint}")
    print(f"kernel backend {result.kernel_backend}")
    for r in result.reports:
        print(
            f"{r.method}: accuracy {r.accuracy:.5f} "
            f"({r.n_answered}/{r.n_questions} answered)"
        )
    if result.network is not None:
        m = result.network
        print(
            f"network: availability {m.availability:.4f} "
            f"failure_rate {m.failure_rate:.4f} "
            f"throughput {m.throughput_bytes:.1f} B"
        )
    print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    result = sweep(config, args.axis, values, reps=args.reps,
                   target_accuracy=args.target)
    path = export_sweep(result, args.out)
    for c in result.cells:
        print(
            f"{c.method} {result.axis}={c.axis_value:g}: "
            f"accuracy {c.accuracy_mean:.5f} (sd {c.accuracy_std:.5f}, "
            f"{c.compute_seconds:.3f}s)"
        )
    for method, value in sorted(result.smallest_meeting_target.items()):
        shown = "none" if value is None else f"{value:g}"
        print(f"{method}: smallest {result.axis} reaching "
              f"{result.target_accuracy:g} accuracy: {shown}")
    print(f"wrote {path}")
    return 0


def _cmd_hypotheses(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    report = hypothesis_experiments(config, n_seeds=args.seeds)
    path = export_hypotheses(report, args.out)
    for o in report.outcomes:
        verdict = "supported" if o.supported else "not supported"
        print(
            f"{o.name}/{o.metric}: {o.arm_a} {o.mean_a:.5f} vs "
            f"{o.arm_b} {o.mean_b:.5f}, margin {o.margin:+.5f} "
            f"(se {o.paired_se:.5f}) -> {verdict}"
        )
    print(f"wrote {path}")
    return 0


def _read_events(results_dir: Path):
    """Rebuild outcome samples from an exported events.jsonl."""
    events_path = results_dir / "events.jsonl"
    if not events_path.exists():
        raise InvalidConfigError(f"no events.jsonl under {results_dir}")
    deliveries = {}
    answers = {}
    with events_path.open() as fh:
        for line in fh:
            row = json.loads(line)
            if row["kind"] == "delivery":
                deliveries[row["assignment"]] = row
            elif row["kind"] == "answer":
                answers[row["assignment"]] = row
    return deliveries, answers


def _cmd_learn_locations(args: argparse.Namespace) -> int:
    from .geolearn import OutcomeSample

    results_dir = Path(args.results)
    manifest_path = results_dir / "manifest.json"
    if not manifest_path.exists():
        raise InvalidConfigError(f"no manifest.json under {results_dir}")
    manifest = json.loads(manifest_path.read_text())
    gl = manifest["config"]["geolearn"]
    deliveries, answer_rows = _read_events(results_dir)
    samples = []
    for aid in sorted(deliveries):
        d = deliveries[aid]
        if d["outcome"] != "delivered":
            continue
        a = answer_rows.get(aid)
        if a is None:
            samples.append(
                OutcomeSample(
                    location_class=d["worker_class"],
                    task_type=d["task_type"],
                    answered=False,
                )
            )
        else:
            samples.append(
                OutcomeSample(
                    location_class=d["worker_class"],
                    task_type=d["task_type"],
                    answered=True,
                    correct=bool(a["correct"]),
                    prs=float(a["prs"]),
                )
            )
    features = featurize(samples, min_samples=int(gl["min_samples"]))
    k = args.k if args.k is not None else int(gl["k"])
    seeds = tuple(
        SeedLabel(int(s["class"]), int(s["type"]), Verdict(s["verdict"]))
        for s in gl.get("seeds", [])
    )
    clusters = seeded_cluster(features, seeds, k=k,
                              seed=int(manifest["seed"]))
    pairs = label_efficiency(
        clusters, features,
        acc_threshold=float(gl["acc_threshold"]),
        prs_threshold=float(gl["prs_threshold"]),
    )
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    rows = ["class_id,task_type,verdict,confidence,sample_count"]
    for p in pairs:
        rows.append(
            f"{p.class_id},{p.task_type},{p.verdict.value},"
            f"{p.confidence!r},{p.sample_count}"
        )
    out_path.write_text("\n".join(rows) + "\n")
    for p in pairs:
        print(
            f"class {p.class_id} type {p.task_type}: {p.verdict.value} "
            f"(confidence {p.confidence:.3f}, n={p.sample_count})"
        )
    print(f"wrote {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mobicrowd",
        description="Deterministic mobile crowdsourcing simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and export results")
    p_run.add_argument("--config", required=True, help="scenario config JSON")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="rerun a scenario along one axis")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument(
        "--axis", required=True,
        choices=("answers_per_question", "questions_per_worker", "spammer_ratio"),
    )
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated axis values"
    )
    p_sweep.add_argument("--reps", type=int, default=1)
    p_sweep.add_argument(
        "--target", type=float, default=0.9,
        help="accuracy target for the summary",
    )
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_hyp = sub.add_parser("hypotheses", help="run the paired experiments")
    p_hyp.add_argument("--config", required=True)
    p_hyp.add_argument("--seeds", type=int, default=10)
    p_hyp.add_argument("--out", required=True)
    p_hyp.set_defaults(func=_cmd_hypotheses)

    p_learn = sub.add_parser(
        "learn-locations",
        help="relearn location efficiency from exported results",
    )
    p_learn.add_argument("--results", required=True, help="results directory")
    p_learn.add_argument("--k", type=int, default=None)
    p_learn.add_argument("--out", required=True, help="output CSV file")
    p_learn.set_defaults(func=_cmd_learn_locations)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MobicrowdError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 2
    except (OSError, ValueError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 3


if __name__ == "__main__":
    sys.exit(main())
