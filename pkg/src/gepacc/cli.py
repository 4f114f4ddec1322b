"""Command-line entry point.

Exit codes: 0 success, 1 domain error (parse/validation/backend failures),
2 usage error.  With ``--json`` every subcommand prints exactly one JSON
document on stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .assets import PROMPT_ASSETS, load_prompt
from .bench import BenchmarkCase, aggregate_report, best_of_n
from .dataset import load_dataset
from .errors import GepaccError
from .feedback import diff_feedback
from .gepa import OptimizerConfig, run_optimization
from .llm import ModelConfig
from .pipeline import AnnotationJob, annotate
from .pragma import normalize, render_canonical
from .report import (
    read_rows_csv,
    render_figures,
    render_report_text,
    write_report_json,
    write_rows_csv,
)
from .scoring import ScoreWeights, score


def model_config_from_dict(data: dict) -> ModelConfig:
    cfg = ModelConfig(backend=data.get("backend", "mock"))
    for key in (
        "endpoint",
        "model_name",
        "temperature",
        "max_output_tokens",
        "timeout",
        "retries",
        "credential_env",
    ):
        if key in data:
            setattr(cfg, key, data[key])
    if "rules" in data:
        cfg.mock_rules = tuple((str(m), str(o)) for m, o in data["rules"])
    if "default" in data:
        cfg.mock_default = data["default"]
    if "reflection_mode" in data:
        cfg.mock_reflection = data["reflection_mode"]
    if "merge_mode" in data:
        cfg.mock_merge = data["merge_mode"]
    return cfg


def _parse_weights(text: str | None) -> ScoreWeights:
    if not text:
        return ScoreWeights()
    parts = text.split(",")
    if len(parts) != 2:
        raise GepaccError(f"--weights expects 'clause,param', got {text!r}")
    return ScoreWeights(clause=float(parts[0]), param=float(parts[1]))


def _emit(payload: dict, as_json: bool, human: str) -> None:
    if as_json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def cmd_normalize(args: argparse.Namespace) -> int:
    text = args.pragma if args.pragma is not None else Path(args.file).read_text(encoding="utf-8")
    canon = normalize(text.strip())
    payload = {"directive": canon.directive, "clauses": canon.clauses}
    if canon.reductions:
        payload["reductions"] = [list(pair) for pair in canon.reductions]
    _emit(payload, args.json, render_canonical(canon))
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    weights = _parse_weights(args.weights)
    gold = normalize(args.gold)
    pred = normalize(args.pred)
    report = score(gold, pred, weights)
    payload = report.to_dict()
    lines = [
        f"f1_clause {report.f1_clause:.3f}",
        f"f1_param {report.f1_param:.3f}",
        f"total {report.total:.3f}",
    ]
    if args.feedback:
        fb = diff_feedback(gold, pred, weights)
        payload["feedback"] = fb.rendered
        lines.append(fb.rendered)
    _emit(payload, args.json, "\n".join(lines))
    return 0


def cmd_feedback(args: argparse.Namespace) -> int:
    weights = _parse_weights(args.weights)
    fb = diff_feedback(normalize(args.gold), normalize(args.pred), weights)
    payload = {
        "total": fb.score.total,
        "items": [
            {"category": i.category.value, "clause": i.clause, "hint": i.hint, "action": i.action}
            for i in fb.items
        ],
        "rendered": fb.rendered,
    }
    _emit(payload, args.json, fb.rendered)
    return 0


def cmd_dataset_validate(args: argparse.Namespace) -> int:
    split = load_dataset(args.dataset)
    payload = {
        "train": len(split.train),
        "pareto": len(split.pareto),
        "holdout": len(split.holdout),
        "total": len(split.all_instances()),
    }
    _emit(
        payload,
        args.json,
        f"ok: {payload['total']} instances "
        f"(train {payload['train']}, pareto {payload['pareto']}, holdout {payload['holdout']})",
    )
    return 0


def cmd_optimize(args: argparse.Namespace) -> int:
    config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    split = load_dataset(args.dataset).filter_kind(args.task.upper())
    if not split.all_instances():
        raise GepaccError(f"dataset has no {args.task.upper()} instances")
    weights_cfg = config.get("weights", {})
    cfg = OptimizerConfig(
        budget=int(config["budget"]),
        minibatch_size=int(config.get("minibatch_size", 3)),
        merge_probability=float(config.get("merge_probability", 0.2)),
        rng_seed=int(config.get("rng_seed", 0)),
        weights=ScoreWeights(
            clause=float(weights_cfg.get("clause", 0.6)),
            param=float(weights_cfg.get("param", 0.4)),
        ),
        parallelism=int(config.get("parallelism", 1)),
    )
    student = model_config_from_dict(config["student"])
    reflection = model_config_from_dict(config.get("reflection", {"backend": "mock"}))
    seed_name = config.get("seed_prompt", "initial-dm" if args.task == "dm" else "initial-lp")
    seed_prompt = load_prompt(seed_name)

    best, events = run_optimization(seed_prompt, split, student, reflection, cfg)

    Path(args.out_prompt).write_text(best.text, encoding="utf-8")
    with open(args.log, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
    payload = {
        "mean_score": best.mean_score,
        "candidate": best.id,
        "out_prompt": str(args.out_prompt),
        "log": str(args.log),
    }
    _emit(payload, args.json, f"final mean score {best.mean_score:.3f} (candidate {best.id})")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    source = Path(args.source).read_text(encoding="utf-8")
    student = model_config_from_dict(
        json.loads(Path(args.student_config).read_text(encoding="utf-8"))
    )
    job = AnnotationJob(
        source=source,
        dm_prompt=load_prompt(args.dm_prompt),
        lp_prompt=load_prompt(args.lp_prompt),
        student=student,
    )
    annotated, report = annotate(job)
    Path(args.out).write_text(annotated, encoding="utf-8")
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    payload = {"out": str(args.out), "failures": report.failures}
    _emit(payload, args.json, f"wrote {args.out} ({report.failures} unresolved tags)")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    student = model_config_from_dict(config["student"])
    dm_prompt = load_prompt(config.get("dm_prompt", "initial-dm"))
    lp_prompt = load_prompt(config.get("lp_prompt", "initial-lp"))
    attempts = int(config.get("attempts", 5))
    setting = config.get("prompt_setting", "default")
    model_name = config.get("model", student.model_name or "mock")
    base = Path(args.config).parent

    rows = []
    skipped = 0
    for case_cfg in config["cases"]:
        case = BenchmarkCase(
            name=case_cfg["name"],
            tagged_source=(base / case_cfg["source"]).read_text(encoding="utf-8"),
            build_files=tuple(str(base / f) for f in case_cfg.get("build_files", [])),
            cpu_compile_cmd=case_cfg.get("cpu_compile_cmd", config.get("cpu_compile_cmd", BenchmarkCase.cpu_compile_cmd)),
            acc_compile_cmd=case_cfg.get("acc_compile_cmd", config.get("acc_compile_cmd", BenchmarkCase.acc_compile_cmd)),
            run_cmd=case_cfg.get("run_cmd", config.get("run_cmd", BenchmarkCase.run_cmd)),
            dump_run_cmd=case_cfg.get("dump_run_cmd", config.get("dump_run_cmd", "")),
            timeout=float(case_cfg.get("timeout", config.get("timeout", 120.0))),
        )
        summary = best_of_n(
            case,
            dm_prompt,
            lp_prompt,
            student,
            attempts,
            prompt_setting=setting,
            model=model_name,
            timing_repeats=int(config.get("timing_repeats", 1)),
        )
        if summary.skipped:
            skipped += 1
        rows.append(summary.to_row())

    write_rows_csv(rows, args.out_csv)
    report = aggregate_report(rows)
    if args.out_json:
        write_report_json(report, args.out_json)
    payload = {"rows": len(rows), "skipped": skipped, "out_csv": str(args.out_csv)}
    human = render_report_text(report)
    if skipped:
        human += f"\nskipped {skipped} case(s): compiler unavailable"
    _emit(payload, args.json, human)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    rows = read_rows_csv(args.records)
    report = aggregate_report(rows, baseline=args.baseline)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_rows_csv(rows, out_dir / "rows.csv")
    write_report_json(report, out_dir / "report.json")
    figures = []
    if not args.no_figures:
        figures = [str(p) for p in render_figures(report, out_dir)]
    payload = report.to_dict()
    payload["figures"] = figures
    _emit(payload, args.json, render_report_text(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gepacc")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="print the canonical form of a pragma")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--pragma")
    group.add_argument("--file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("score", help="score a predicted pragma against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--weights")
    p.add_argument("--feedback", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("feedback", help="print the corrective feedback report")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--weights")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_feedback)

    p = sub.add_parser("dataset-validate", help="validate a JSON-lines dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_dataset_validate)

    p = sub.add_parser("optimize", help="evolve a prompt over a dataset")
    p.add_argument("--task", choices=("dm", "lp"), required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-prompt", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("infer", help="two-stage annotation of a tagged source")
    p.add_argument("--source", required=True)
    p.add_argument("--dm-prompt", default="initial-dm", help=f"name ({', '.join(sorted(PROMPT_ASSETS))}) or path")
    p.add_argument("--lp-prompt", default="initial-lp")
    p.add_argument("--student-config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("bench", help="best-of-N compile and timing runs")
    p.add_argument("--config", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-json")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="aggregate bench rows into tables and figures")
    p.add_argument("--records", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--baseline")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GepaccError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
