"""Command-line surface.

Subcommands: validate, match, run, stats, normalize, render-critique.
Exit codes are a stable contract: 0 clean, 1 domain findings (constraint
violations, unsound inputs, failed runs), 2 usage, IO, or parse errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from statistics import mean

from . import codec
from .backend import (
    PROFILE_INSTRUCTION,
    PROFILE_REASONING,
    BackendError,
    HttpBackend,
    HttpBackendConfig,
    LlmBackend,
    load_script,
)
from .dataset import Manifest, ManifestError, load_manifest
from .diagram import normalize
from .evaluation import (
    SWEEP_THRESHOLDS,
    MetricReport,
    evaluate,
    threshold_sweep,
    wilcoxon_rank_sum,
)
from .matching import MatchPreconditionError
from .pipeline import (
    PipelineConfig,
    PromptTemplates,
    RunRecord,
    Variant,
    run as run_pipeline,
    save_run_record,
)
from .reporting import (
    aggregate_metrics,
    plot_comparison,
    plot_metric_aggregate,
    plot_sweep,
    threshold_key,
    write_comparison,
    write_cost,
    write_metric_aggregate,
    write_sweep_csv,
    write_violation_counts,
)
from .similarity import EmbeddingConfig, EmbeddingSimilarity, NgramSimilarity
from .validation import render_critique, validate

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (OSError, codec.ParseError, ManifestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowsmith",
        description="Generate, validate, and grade activity diagrams.",
    )
    sub = parser.add_subparsers(required=True, metavar="command")

    p = sub.add_parser("validate", help="check a diagram against the structural rules")
    p.add_argument("diagram", type=Path)
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("match", help="grade a generated diagram against a ground truth")
    p.add_argument("generated", type=Path)
    p.add_argument("truth", type=Path)
    _provider_flags(p)
    p.add_argument(
        "--thresholds",
        help="comma list, e.g. '0.5,0.7,none' (default: the full sweep)",
    )
    p.add_argument("--out", type=Path, help="directory for sweep.csv and sweep.png")
    p.set_defaults(handler=_cmd_match)

    p = sub.add_parser("run", help="run a pipeline variant over a dataset manifest")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument(
        "--variant",
        choices=[v.value for v in Variant],
        default=Variant.STRUCT_ALG_ALIGN_NA.value,
    )
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", type=Path, help="JSON config file; flags win")
    p.add_argument("--backend", choices=["scripted", "http"])
    p.add_argument("--script", type=Path, help="script file for the scripted backend")
    p.add_argument("--llm-url")
    p.add_argument("--llm-model")
    p.add_argument("--llm-auth-env")
    p.add_argument(
        "--llm-profile", choices=[PROFILE_INSTRUCTION, PROFILE_REASONING]
    )
    p.add_argument("--iteration-cap", type=int)
    p.add_argument("--restart-limit", type=int)
    p.add_argument(
        "--prompt",
        action="append",
        default=[],
        metavar="NAME=PATH",
        help="override a prompt template (role_generate, role_critique, "
        "role_refine, format_definition, one_shot_example)",
    )
    _provider_flags(p)
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("stats", help="compare two run directories statistically")
    p.add_argument("run_dir_a", type=Path)
    p.add_argument("run_dir_b", type=Path)
    p.add_argument(
        "--metric", choices=["correctness", "completeness", "both"], default="both"
    )
    p.add_argument("--thresholds", help="comma list, e.g. '0.5,0.7,none'")
    p.add_argument(
        "--aggregate",
        choices=["document", "repetition"],
        default="document",
        help="collapse repetitions per document, or documents per repetition",
    )
    p.add_argument("--out", type=Path, help="directory for comparison.csv/.png")
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("normalize", help="collapse sequential action chains")
    p.add_argument("diagram", type=Path)
    p.add_argument("--out", type=Path, help="write here instead of stdout")
    p.set_defaults(handler=_cmd_normalize)

    p = sub.add_parser(
        "render-critique", help="print the algorithmic critique of a diagram"
    )
    p.add_argument("diagram", type=Path)
    p.set_defaults(handler=_cmd_render_critique)

    return parser


def _provider_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=["ngram", "embedding"], default="ngram")
    p.add_argument("--embed-url")
    p.add_argument("--embed-model")
    p.add_argument("--embed-auth-env", default="EMBEDDING_API_TOKEN")
    p.add_argument("--embed-batch", type=int, default=16)
    p.add_argument("--embed-retries", type=int, default=3)


def _make_provider(args):
    if args.provider == "ngram":
        return NgramSimilarity()
    if not args.embed_url:
        raise ValueError("--provider embedding requires --embed-url")
    return EmbeddingSimilarity(
        EmbeddingConfig(
            url=args.embed_url,
            model=args.embed_model,
            auth_env=args.embed_auth_env,
            batch_size=args.embed_batch,
            retries=args.embed_retries,
        )
    )


def _load_diagram(path: Path):
    return codec.parse(path.read_text(encoding="utf-8"))


def _parse_thresholds(spec: str | None) -> list[float | None]:
    if not spec:
        return list(SWEEP_THRESHOLDS)
    out: list[float | None] = []
    for token in spec.split(","):
        token = token.strip().lower()
        if token in ("none", "no-threshold", ""):
            out.append(None)
        else:
            value = float(token)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"threshold out of range: {value}")
            out.append(value)
    return out


# -- validate -----------------------------------------------------------------

def _cmd_validate(args) -> int:
    report = validate(_load_diagram(args.diagram))
    if report.ok:
        print("OK: no structural violations")
        return EXIT_OK
    print(report.to_text())
    return EXIT_FINDINGS


# -- match --------------------------------------------------------------------

def _cmd_match(args) -> int:
    generated = _load_diagram(args.generated)
    truth = _load_diagram(args.truth)
    for name, diagram in (("generated", generated), ("ground truth", truth)):
        report = validate(diagram)
        if not report.ok:
            print(f"{name} diagram is not structurally sound:", file=sys.stderr)
            print(report.to_text(), file=sys.stderr)
            return EXIT_FINDINGS

    provider = _make_provider(args)
    thresholds = _parse_thresholds(args.thresholds)
    reports = [evaluate(generated, truth, provider, t) for t in thresholds]

    print("threshold\tcorrectness\tcompleteness")
    for report in reports:
        print(
            f"{threshold_key(report.threshold)}\t"
            f"{report.correctness:.6f}\t{report.completeness:.6f}"
        )
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(args.out / "sweep.csv", reports)
        plot_sweep(args.out / "sweep.png", reports)
        print(f"wrote {args.out / 'sweep.csv'} and {args.out / 'sweep.png'}")
    return EXIT_OK


# -- run ----------------------------------------------------------------------

def _cmd_run(args) -> int:
    config = _merged_run_config(args)
    manifest = load_manifest(config["manifest"])
    variant = Variant(config["variant"])
    provider = _make_provider(args)
    out_dir = Path(config["out"])
    out_dir.mkdir(parents=True, exist_ok=True)

    pipeline_config = PipelineConfig(
        iteration_cap=int(config["iteration_cap"]),
        restart_limit=int(config["restart_limit"]),
        templates=_templates_from(config["prompts"]),
    )

    tasks = [
        (entry, rep)
        for entry in manifest.entries
        for rep in range(1, int(config["repetitions"]) + 1)
    ]

    def execute(entry, rep):
        backend = _make_backend(config)
        record = run_pipeline(
            variant, entry.description(), backend, pipeline_config
        )
        return record

    results: dict[tuple[str, int], RunRecord] = {}
    failures: list[tuple[str, int, str]] = []
    with ThreadPoolExecutor(max_workers=max(1, int(config["workers"]))) as pool:
        futures = {
            pool.submit(execute, entry, rep): (entry, rep) for entry, rep in tasks
        }
        for future, (entry, rep) in futures.items():
            try:
                results[(entry.id, rep)] = future.result()
            except BackendError as exc:
                failures.append((entry.id, rep, str(exc)))

    _persist_runs(out_dir, manifest, results, failures, provider)
    for (entry_id, rep), record in sorted(results.items()):
        status = "accepted" if record.accepted else "NOT accepted"
        print(
            f"{entry_id} rep {rep}: {status}, {record.cost.calls} call(s)"
            + (", restarted" if record.restarted else "")
        )
    for entry_id, rep, message in sorted(failures):
        print(f"{entry_id} rep {rep}: FAILED ({message})", file=sys.stderr)
    print(f"aggregates written to {out_dir}")
    return EXIT_FINDINGS if failures else EXIT_OK


def _merged_run_config(args) -> dict:
    config = {
        "manifest": args.manifest,
        "variant": args.variant,
        "out": args.out,
        "repetitions": args.repetitions,
        "workers": args.workers,
        "backend": args.backend,
        "script": args.script,
        "llm_url": args.llm_url,
        "llm_model": args.llm_model,
        "llm_auth_env": args.llm_auth_env,
        "llm_profile": args.llm_profile,
        "iteration_cap": args.iteration_cap,
        "restart_limit": args.restart_limit,
        "prompts": dict(kv.split("=", 1) for kv in args.prompt),
    }
    defaults = {
        "backend": "scripted",
        "llm_auth_env": "LLM_API_TOKEN",
        "llm_profile": PROFILE_INSTRUCTION,
        "iteration_cap": 5,
        "restart_limit": 1,
    }
    file_config: dict = {}
    if args.config:
        file_config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    for key, value in defaults.items():
        if config.get(key) is None:
            config[key] = file_config.get(key, value)
    for key in ("script", "llm_url", "llm_model"):
        if config.get(key) is None and key in file_config:
            config[key] = file_config[key]
    if not config["prompts"]:
        config["prompts"] = file_config.get("prompts", {})
    if config["backend"] == "scripted" and not config["script"]:
        raise ValueError("scripted backend requires --script (or 'script' in --config)")
    if config["backend"] == "http" and not (config["llm_url"] and config["llm_model"]):
        raise ValueError("http backend requires --llm-url and --llm-model")
    return config


def _templates_from(prompts: dict[str, str]) -> PromptTemplates:
    return PromptTemplates.from_paths(prompts) if prompts else PromptTemplates.default()


def _make_backend(config: dict) -> LlmBackend:
    if config["backend"] == "scripted":
        return load_script(config["script"])
    return HttpBackend(
        HttpBackendConfig(
            url=config["llm_url"],
            model=config["llm_model"],
            auth_env=config["llm_auth_env"],
            profile=config["llm_profile"],
        )
    )


def _persist_runs(out_dir, manifest: Manifest, results, failures, provider) -> None:
    truths = {entry.id: entry.ground_truth() for entry in manifest.entries}
    violation_counts: dict[str, int] = {}
    unsound = 0
    diagrams = 0
    sweeps: list[list[MetricReport]] = []
    notes: list[str] = list(
        f"{entry_id}\trep {rep}\tbackend failure: {message}"
        for entry_id, rep, message in failures
    )

    for (entry_id, rep), record in sorted(results.items()):
        run_dir = out_dir / "runs" / entry_id / f"rep_{rep}"
        save_run_record(record, run_dir)
        if record.final is None:
            notes.append(f"{entry_id}\trep {rep}\tfinal diagram did not parse")
            continue
        diagrams += 1
        report = validate(record.final)
        if not report.ok:
            unsound += 1
        for constraint in report.constraints():
            violation_counts[constraint] = violation_counts.get(constraint, 0) + 1
        try:
            sweep = threshold_sweep(record.final, truths[entry_id], provider)
        except MatchPreconditionError as exc:
            notes.append(f"{entry_id}\trep {rep}\tnot graded: {exc}")
            continue
        sweeps.append(sweep)
        write_sweep_csv(run_dir / "sweep.csv", sweep)
        plot_sweep(run_dir / "sweep.png", sweep)

    write_violation_counts(
        out_dir / "violations.csv", violation_counts, diagrams, unsound
    )
    if sweeps:
        rows = aggregate_metrics(sweeps)
        write_metric_aggregate(out_dir / "metrics.csv", rows)
        plot_metric_aggregate(out_dir / "metrics.png", rows)
    records = [results[key] for key in sorted(results)]
    if records:
        write_cost(
            out_dir / "cost.csv",
            calls_mean=mean(r.cost.calls for r in records),
            input_mean=mean(
                r.cost.input_tokens / r.cost.calls if r.cost.calls else 0.0
                for r in records
            ),
            output_mean=mean(
                r.cost.output_tokens / r.cost.calls if r.cost.calls else 0.0
                for r in records
            ),
            reasoning_mean=mean(
                r.cost.reasoning_tokens / r.cost.calls if r.cost.calls else 0.0
                for r in records
            ),
            runs=len(records),
        )
    if notes:
        (out_dir / "failures.txt").write_text(
            "\n".join(notes) + "\n", encoding="utf-8"
        )


# -- stats --------------------------------------------------------------------

def _cmd_stats(args) -> int:
    samples_a = _load_run_samples(args.run_dir_a)
    samples_b = _load_run_samples(args.run_dir_b)

    ids_a = {entry for entry, _ in samples_a}
    ids_b = {entry for entry, _ in samples_b}
    if ids_a != ids_b:
        only_a = sorted(ids_a - ids_b)
        only_b = sorted(ids_b - ids_a)
        raise ValueError(
            "run directories cover different entries; "
            f"only in A: {only_a or '-'}; only in B: {only_b or '-'}"
        )

    thresholds = [threshold_key(t) for t in _parse_thresholds(args.thresholds)]
    metrics = (
        ["correctness", "completeness"] if args.metric == "both" else [args.metric]
    )
    name_a, name_b = args.run_dir_a.name, args.run_dir_b.name

    rows = []
    print(f"aggregation: per {args.aggregate}")
    print("metric\tthreshold\tp_value\ta12\tmagnitude\tsignificant")
    for metric in metrics:
        for threshold in thresholds:
            xs = _aggregate_samples(samples_a, metric, threshold, args.aggregate)
            ys = _aggregate_samples(samples_b, metric, threshold, args.aggregate)
            if not xs or not ys:
                raise ValueError(
                    f"no graded runs for metric={metric} threshold={threshold}"
                )
            result = wilcoxon_rank_sum(xs, ys)
            rows.append((name_a, name_b, metric, threshold, result))
            print(
                f"{metric}\t{threshold}\t{result.p_value:.6f}\t"
                f"{result.effect.a12:.6f}\t{result.effect.magnitude}\t"
                f"{'yes' if result.significant else 'no'}"
            )
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        write_comparison(args.out / "comparison.csv", rows)
        plot_comparison(args.out / "comparison.png", rows)
        print(f"wrote {args.out / 'comparison.csv'} and {args.out / 'comparison.png'}")
    return EXIT_OK


def _load_run_samples(run_dir: Path) -> dict[tuple[str, int], dict[tuple[str, str], float]]:
    """(entry, rep) -> {(metric, threshold): value} from per-run sweep files."""
    runs_root = run_dir / "runs"
    if not runs_root.is_dir():
        raise ValueError(f"not a run directory (missing runs/): {run_dir}")
    samples: dict[tuple[str, int], dict[tuple[str, str], float]] = {}
    for sweep_path in sorted(runs_root.glob("*/rep_*/sweep.csv")):
        entry_id = sweep_path.parent.parent.name
        rep = int(sweep_path.parent.name.split("_", 1)[1])
        values: dict[tuple[str, str], float] = {}
        lines = sweep_path.read_text(encoding="utf-8").splitlines()
        for line in lines[1:]:
            threshold, cor, com = line.split(",")
            values[("correctness", threshold)] = float(cor)
            values[("completeness", threshold)] = float(com)
        samples[(entry_id, rep)] = values
    if not samples:
        raise ValueError(f"no graded runs found under {runs_root}")
    return samples


def _aggregate_samples(samples, metric: str, threshold: str, mode: str) -> list[float]:
    key = (metric, threshold)
    groups: dict[object, list[float]] = {}
    for (entry_id, rep), values in samples.items():
        if key not in values:
            continue
        group = entry_id if mode == "document" else rep
        groups.setdefault(group, []).append(values[key])
    return [mean(vals) for _, vals in sorted(groups.items(), key=lambda kv: str(kv[0]))]


# -- normalize / render-critique ------------------------------------------------

def _cmd_normalize(args) -> int:
    collapsed = normalize(_load_diagram(args.diagram))
    text = codec.serialize(collapsed)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_render_critique(args) -> int:
    critique = render_critique(validate(_load_diagram(args.diagram)))
    if critique.empty:
        print("no structural issues")
        return EXIT_OK
    print(critique.to_text())
    return EXIT_FINDINGS


if __name__ == "__main__":
    sys.exit(main())
