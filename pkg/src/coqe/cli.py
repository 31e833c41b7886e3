"""Command-line front door for the quintuple extraction pipeline.

Every subcommand prints a machine-readable JSON summary to stdout and
writes its artifacts to the configured paths.  Exit codes: 0 on success,
1 on validation or data errors, 2 on usage errors (including missing
input paths).

Options may also come from a flat JSON config file whose keys mirror the
long flag names; explicit flags win over the config file, which wins over
built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import align, augment, csi, instructions, metrics, templates
from .base import DEFAULT_SEED, CoqeError
from .corpus import (
    CorpusRecord,
    load_corpus,
    load_corpus_lenient,
    save_corpus,
)


class UsageError(CoqeError):
    """Bad invocation: unknown files, contradictory flags, bad config."""


def _print_summary(summary: dict) -> None:
    print(json.dumps(summary, ensure_ascii=False, indent=2))


def _require_file(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing required {what} path")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} file not found: {path}")
    return p


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = _require_file(path, "config")
    try:
        config = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise UsageError("config file must hold a flat JSON object")
    return config


class _Options:
    """Flag > config file > default resolution for one invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = _load_config(getattr(args, "config", None))

    def get(self, name: str, default=None):
        value = getattr(self.args, name.replace("-", "_"), None)
        if value is not None:
            return value
        if name in self.config:
            return self.config[name]
        return default


def _alignment_config(opts: _Options) -> align.AlignmentConfig:
    try:
        return align.AlignmentConfig(
            fuzzy_threshold=float(opts.get("fuzzy-threshold", 0.8)),
            max_span_slack=int(opts.get("max-span-slack", 1)),
            case_fold=bool(opts.get("case-fold", True)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _template_kind(opts: _Options) -> templates.TemplateKind:
    name = opts.get("template", "delimited")
    try:
        return templates.TemplateKind(name)
    except ValueError as exc:
        raise UsageError(f"unknown template kind {name!r}") from exc


def _load_generations(path: Path) -> dict[str, str]:
    outputs: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                outputs[str(obj["id"])] = str(obj["output"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise CoqeError(f"bad generation file line {line_no}: {exc}") from exc
    return outputs


def cmd_validate(args: argparse.Namespace) -> int:
    opts = _Options(args)
    path = _require_file(opts.get("corpus"), "corpus")
    records, issues = load_corpus_lenient(path)
    summary = {
        "command": "validate",
        "mode": "lenient" if args.lenient else "strict",
        "records": len(records),
        "quintuples": sum(len(r.quintuples) for r in records),
        "comparative": sum(1 for r in records if r.is_comparative),
        "errors": [
            {"line": i.line_no, "id": i.record_id, "error": i.error} for i in issues
        ],
    }
    _print_summary(summary)
    if issues and not args.lenient:
        return 1
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    opts = _Options(args)
    records = load_corpus(_require_file(opts.get("corpus"), "corpus"))
    backend = opts.get("backend", "lexical")
    vectors = None
    if backend == "external-vectors":
        vectors = csi.load_vectors(_require_file(opts.get("vectors"), "vectors"))
    try:
        sim_cfg = csi.SimilarityConfig(
            threshold=float(opts.get("threshold", 0.8)), backend=backend
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    kept, removed = csi.filter_unannotated(records, sim_cfg, vectors=vectors)
    out = opts.get("out")
    if out is None:
        raise UsageError("missing required --out path")
    save_corpus(kept, out)
    _print_summary(
        {
            "command": "filter",
            "records": len(records),
            "kept": len(kept),
            "removed_ids": removed,
            "threshold": sim_cfg.threshold,
            "backend": backend,
            "out": str(out),
        }
    )
    return 0


def cmd_train_csi(args: argparse.Namespace) -> int:
    opts = _Options(args)
    records = load_corpus(_require_file(opts.get("corpus"), "corpus"))
    vectors = None
    if opts.get("vectors") is not None:
        vectors = csi.load_vectors(_require_file(opts.get("vectors"), "vectors"))
    hyperparams = {
        "epochs": int(opts.get("epochs", 50)),
        "lr": float(opts.get("lr", 1.0)),
        "l2": float(opts.get("l2", 0.0)),
    }
    seed = int(opts.get("seed", DEFAULT_SEED))
    head = csi.train(records, seed=seed, vectors=vectors, **hyperparams)
    model_out = opts.get("model-out")
    if model_out is None:
        raise UsageError("missing required --model-out path")
    csi.save_model(head, model_out, hyperparams=hyperparams, seed=seed)
    scores = csi.evaluate_csi(head, records, vectors=vectors)
    _print_summary(
        {
            "command": "train-csi",
            "records": len(records),
            "epochs": hyperparams["epochs"],
            "final_loss": head.loss_history[-1] if head.loss_history else None,
            "train_scores": scores,
            "model": str(model_out),
        }
    )
    return 0


def cmd_predict_csi(args: argparse.Namespace) -> int:
    opts = _Options(args)
    records = load_corpus(_require_file(opts.get("corpus"), "corpus"))
    head, _ = csi.load_model(_require_file(opts.get("model"), "model"))
    vectors = None
    if opts.get("vectors") is not None:
        vectors = csi.load_vectors(_require_file(opts.get("vectors"), "vectors"))
    threshold = float(opts.get("threshold", 0.5))
    out = opts.get("out")
    if out is None:
        raise UsageError("missing required --out path")
    positives = 0
    with open(out, "w", encoding="utf-8") as handle:
        for record, fv in zip(records, csi.record_vectors(records, vectors)):
            p = float(csi.predict_proba(head, fv)[csi.COMPARATIVE])
            comparative = p >= threshold
            positives += comparative
            handle.write(
                json.dumps(
                    {"id": record.id, "comparative": comparative, "p_comparative": p},
                    ensure_ascii=False,
                )
            )
            handle.write("\n")
    summary = {
        "command": "predict-csi",
        "records": len(records),
        "predicted_comparative": positives,
        "threshold": threshold,
        "out": str(out),
    }
    if args.score:
        summary["scores"] = csi.evaluate_csi(head, records, threshold, vectors=vectors)
    _print_summary(summary)
    return 0


def cmd_build_instructions(args: argparse.Namespace) -> int:
    opts = _Options(args)
    records = load_corpus(_require_file(opts.get("corpus"), "corpus"))
    tasks = None
    if opts.get("tasks") is not None:
        try:
            tasks = [instructions.SubTask(t) for t in str(opts.get("tasks")).split(",") if t]
        except ValueError as exc:
            raise UsageError(f"unknown sub-task in --tasks: {exc}") from exc
    texts = None
    if opts.get("instructions") is not None:
        table = json.loads(
            _require_file(opts.get("instructions"), "instructions").read_text("utf-8")
        )
        texts = {instructions.SubTask(key): value for key, value in table.items()}
    samples = instructions.build_dataset(
        records,
        subtasks=tasks,
        include_noncomparative=bool(opts.get("include-noncomparative", False)),
        instruction_texts=texts,
    )
    out = opts.get("out")
    if out is None:
        raise UsageError("missing required --out path")
    instructions.save_dataset(samples, out)
    _print_summary(
        {
            "command": "build-instructions",
            "records": len(records),
            "samples": len(samples),
            "tasks": [t.value for t in (tasks or instructions.SUBTASK_ORDER)],
            "out": str(out),
        }
    )
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    opts = _Options(args)
    records = load_corpus(_require_file(opts.get("corpus"), "corpus"))
    try:
        cfg = augment.AugmentConfig(
            seed=int(opts.get("seed", DEFAULT_SEED)),
            per_record_samples=int(opts.get("per-record", 1)),
            replace_probability=float(opts.get("replace-prob", 0.5)),
            balance=str(opts.get("balance", "min")),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    raw, notices = augment.augment_corpus(records, cfg)
    merged = augment.balance_and_filter(records, raw, cfg, notices)
    out = opts.get("out")
    if out is None:
        raise UsageError("missing required --out path")
    save_corpus(merged, out)
    kept_augmented = len(merged) - len(records)
    _print_summary(
        {
            "command": "augment",
            "originals": len(records),
            "generated": len(raw),
            "kept_augmented": kept_augmented,
            "total": len(merged),
            "seed": cfg.seed,
            "notices": [
                {"id": n.record_id, "kind": n.kind, "detail": n.detail} for n in notices
            ],
            "out": str(out),
        }
    )
    return 0


def _parse_and_align(
    records: list[CorpusRecord],
    generations: dict[str, str],
    kind: templates.TemplateKind,
    cfg: align.AlignmentConfig,
    comparative_ids: set[str] | None = None,
) -> tuple[list[CorpusRecord], dict]:
    """Stage 2 over a corpus: template parse, then index recovery.

    Records without a generation line (or gated off by stage 1) come back
    with empty quintuple lists; quintuples that cannot be parsed or
    aligned are dropped and reported, never fatal.
    """
    predictions: list[CorpusRecord] = []
    parse_issues: list[dict] = []
    unaligned: list[dict] = []
    for record in records:
        quintuples = []
        gated = comparative_ids is not None and record.id not in comparative_ids
        output = generations.get(record.id)
        if output is not None and not gated:
            bares, issues = templates.parse_generation(output, kind)
            for issue in issues:
                parse_issues.append(
                    {"id": record.id, "kind": issue.kind.value, "message": issue.message}
                )
            for bare in bares:
                try:
                    quintuples.append(align.align_quintuple(record.tokens, bare, cfg))
                except align.NoCandidateError as exc:
                    unaligned.append({"id": record.id, "element": exc.element, "text": exc.text})
        predictions.append(
            CorpusRecord(id=record.id, text=record.text, quintuples=tuple(quintuples))
        )
    unknown = sorted(set(generations) - {r.id for r in records})
    info = {
        "parse_issues": parse_issues,
        "alignment_failures": unaligned,
        "unknown_generation_ids": unknown,
    }
    return predictions, info


def cmd_parse_generation(args: argparse.Namespace) -> int:
    opts = _Options(args)
    records = load_corpus(_require_file(opts.get("corpus"), "corpus"))
    generations = _load_generations(_require_file(opts.get("generations"), "generations"))
    predictions, info = _parse_and_align(
        records, generations, _template_kind(opts), _alignment_config(opts)
    )
    out = opts.get("out")
    if out is None:
        raise UsageError("missing required --out path")
    save_corpus(predictions, out)
    _print_summary(
        {
            "command": "parse-generation",
            "records": len(records),
            "quintuples": sum(len(r.quintuples) for r in predictions),
            "out": str(out),
            **info,
        }
    )
    return 0


def _write_report(report: metrics.EvalReport, report_path: str, figures: bool) -> dict:
    report.save(report_path)
    artifacts = {"report": str(report_path)}
    if figures:
        from . import figures as figure_mod

        artifacts["figures"] = figure_mod.render_report_files(report, report_path)
    return artifacts


def cmd_evaluate(args: argparse.Namespace) -> int:
    opts = _Options(args)
    gold = load_corpus(_require_file(opts.get("gold"), "gold corpus"))
    predicted = load_corpus(_require_file(opts.get("pred"), "prediction corpus"))
    report = metrics.evaluate_corpora(gold, predicted)
    report_path = opts.get("report")
    if report_path is None:
        raise UsageError("missing required --report path")
    artifacts = _write_report(report, report_path, figures=not args.no_figures)
    _print_summary(
        {
            "command": "evaluate",
            "records": len(gold),
            "headline": report.headline,
            **artifacts,
        }
    )
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    opts = _Options(args)
    records = load_corpus(_require_file(opts.get("corpus"), "corpus"))
    generations = _load_generations(_require_file(opts.get("generations"), "generations"))

    oracle = bool(opts.get("csi-oracle", False))
    model_path = opts.get("csi-model")
    if oracle == (model_path is not None):
        raise UsageError("provide exactly one of --csi-model or --csi-oracle")
    threshold = float(opts.get("threshold", 0.5))
    if oracle:
        comparative_ids = {r.id for r in records if r.is_comparative}
    else:
        head, _ = csi.load_model(_require_file(model_path, "model"))
        vectors = None
        if opts.get("vectors") is not None:
            vectors = csi.load_vectors(_require_file(opts.get("vectors"), "vectors"))
        comparative_ids = {
            record.id
            for record, fv in zip(records, csi.record_vectors(records, vectors))
            if csi.predict_proba(head, fv)[csi.COMPARATIVE] >= threshold
        }

    predictions, info = _parse_and_align(
        records,
        generations,
        _template_kind(opts),
        _alignment_config(opts),
        comparative_ids=comparative_ids,
    )
    out = opts.get("out-predictions")
    if out is None:
        raise UsageError("missing required --out-predictions path")
    save_corpus(predictions, out)

    summary = {
        "command": "pipeline",
        "records": len(records),
        "stage1_comparative": len(comparative_ids),
        "quintuples": sum(len(r.quintuples) for r in predictions),
        "out_predictions": str(out),
        **info,
    }
    report_path = opts.get("report")
    if report_path is not None:
        gold_path = opts.get("gold")
        gold = load_corpus(_require_file(gold_path, "gold corpus")) if gold_path else records
        report = metrics.evaluate_corpora(gold, predictions)
        summary["headline"] = report.headline
        summary.update(_write_report(report, report_path, figures=not args.no_figures))
    _print_summary(summary)
    return 0


def _add_config_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON file of option values (flags win)")


def _add_alignment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--template", choices=["delimited", "tagged"], default=None)
    parser.add_argument("--fuzzy-threshold", type=float, default=None)
    parser.add_argument("--max-span-slack", type=int, default=None)
    parser.add_argument(
        "--case-fold", action=argparse.BooleanOptionalAction, default=None
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coqe",
        description="Comparative opinion quintuple extraction toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="check a JSONL corpus")
    p.add_argument("corpus")
    p.add_argument("--lenient", action="store_true", help="list errors but exit 0")
    _add_config_flag(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("filter", help="drop unannotated comparative look-alikes")
    p.add_argument("corpus")
    p.add_argument("--out", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--backend", choices=["lexical", "external-vectors"], default=None)
    p.add_argument("--vectors", default=None, help="JSONL of {id, vector} rows")
    _add_config_flag(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("train-csi", help="fit the comparative-sentence classifier")
    p.add_argument("corpus")
    p.add_argument("--model-out", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--vectors", default=None)
    _add_config_flag(p)
    p.set_defaults(func=cmd_train_csi)

    p = sub.add_parser("predict-csi", help="classify records with a saved model")
    p.add_argument("corpus")
    p.add_argument("--model", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--vectors", default=None)
    p.add_argument("--score", action="store_true", help="also score against the corpus labels")
    _add_config_flag(p)
    p.set_defaults(func=cmd_predict_csi)

    p = sub.add_parser("build-instructions", help="emit the multi-task training set")
    p.add_argument("corpus")
    p.add_argument("--out", default=None)
    p.add_argument("--tasks", default=None, help="comma-separated sub-task ids")
    p.add_argument(
        "--include-noncomparative", action=argparse.BooleanOptionalAction, default=None
    )
    p.add_argument("--instructions", default=None, help="JSON table of per-task prompts")
    _add_config_flag(p)
    p.set_defaults(func=cmd_build_instructions)

    p = sub.add_parser("augment", help="expand a corpus by element replacement")
    p.add_argument("corpus")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--per-record", type=int, default=None)
    p.add_argument("--replace-prob", type=float, default=None)
    p.add_argument("--balance", default=None, help="min, off, or cap:N")
    _add_config_flag(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("parse-generation", help="parse and align model outputs")
    p.add_argument("--corpus", default=None)
    p.add_argument("--generations", default=None, help="JSONL of {id, output} rows")
    p.add_argument("--out", default=None)
    _add_alignment_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_parse_generation)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--gold", default=None)
    p.add_argument("--pred", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--no-figures", action="store_true", help="skip CSV and figure output")
    _add_config_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="stage 1 gating + stage 2 extraction")
    p.add_argument("--corpus", default=None)
    p.add_argument("--generations", default=None)
    p.add_argument("--csi-model", default=None)
    p.add_argument("--csi-oracle", action="store_true", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--vectors", default=None)
    p.add_argument("--out-predictions", default=None)
    p.add_argument("--gold", default=None, help="defaults to the input corpus")
    p.add_argument("--report", default=None)
    p.add_argument("--no-figures", action="store_true")
    _add_alignment_flags(p)
    _add_config_flag(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CoqeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
