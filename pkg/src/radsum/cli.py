"""Command-line entry point exposing every workflow.

Subcommands: ingest, split, generate, evaluate, perturb, stability,
review serve, review aggregate. Values resolve as flag > config file >
built-in default. Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from . import harness as har
from . import metrics as met
from . import pipeline as pipe
from . import providers as prov
from .corpus import (
    Dataset,
    dataset_stats,
    load_dataset,
    save_dataset,
    stratified_split,
)
from .errors import WorkbenchError
from .perturb import TypoSpec, derive_seed, inject_typos
from .review import ReviewSession, render_summary
from .text import TokenizerConfig

FORMATS = ("delimited-table", "record-lines")
TABLE_FORMATS = ("plain", "delimited", "markdown")
_EXT = {"delimited-table": ".csv", "record-lines": ".jsonl"}


def _read_json(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise WorkbenchError(f"cannot read JSON file {path}: {exc}") from exc


class _Resolver:
    """flag > config file > default."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.config = _read_json(args.config) if getattr(args, "config", None) else {}

    def get(self, key: str, default=None):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        if key in self.config:
            return self.config[key]
        return default

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise WorkbenchError(f"missing required option --{key.replace('_', '-')}")
        return value


def _load_dataset_arg(resolver: _Resolver) -> Dataset:
    column_map_path = resolver.get("column_map")
    column_map = _read_json(column_map_path) if column_map_path else None
    return load_dataset(
        resolver.require("dataset"),
        format=resolver.get("format", "delimited-table"),
        column_map=column_map,
        source=resolver.get("source", "internal"),
    )


def _tokenizer_from(profile: dict) -> TokenizerConfig:
    cfg = profile.get("tokenizer", {})
    return TokenizerConfig(
        lowercase=bool(cfg.get("lowercase", True)),
        strip_punctuation=bool(cfg.get("strip_punctuation", True)),
    )


def _metric_cfg_from(profile: dict) -> met.MetricConfig:
    metrics_cfg = profile.get("metrics", {})
    rouge_cfg = metrics_cfg.get("rouge", {})
    bleu_cfg = metrics_cfg.get("bleu", {})
    return met.MetricConfig(
        tokenizer=_tokenizer_from(profile),
        rouge=met.RougeConfig(
            orders=tuple(rouge_cfg.get("orders", (1, 2))),
            beta=float(rouge_cfg.get("beta", 1.0)),
        ),
        bleu=met.BleuConfig(
            max_order=int(bleu_cfg.get("max_order", 4)),
            weights=tuple(bleu_cfg["weights"]) if "weights" in bleu_cfg else None,
            smoothing=bleu_cfg.get("smoothing", "none"),
            epsilon=float(bleu_cfg.get("epsilon", 1e-9)),
        ),
    )


def _pipeline_cfg_from(profile: dict) -> pipe.PipelineConfig:
    cfg = profile.get("pipeline", {})
    return pipe.PipelineConfig(
        include_clinical_information=bool(cfg.get("include_clinical_information", True)),
        refine_rounds=int(cfg.get("refine_rounds", 1)),
        max_output_tokens=int(cfg.get("max_output_tokens", 256)),
        temperature=float(cfg.get("temperature", 0.0)),
    )


def _systems_from(profile: dict, dataset: Dataset) -> list[har.SystemUnderTest]:
    impressions = {r.id: r.impression for r in dataset}
    systems = []
    for entry in profile.get("systems", []):
        systems.append(
            har.SystemUnderTest(
                name=entry["name"],
                backend=prov.build_generation_backend(
                    entry["backend"], impressions=impressions, dataset_name=dataset.name
                ),
                style=pipe.StyleTier.from_dict(entry.get("style", {})),
            )
        )
    if not systems:
        raise WorkbenchError("profile declares no systems")
    return systems


def _providers_from(profile: dict):
    providers_cfg = profile.get("providers", {})
    embedding = prov.build_embedding_provider(
        providers_cfg.get("embedding", {"type": "hash", "dimension": 64, "seed": 0})
    )
    nli = prov.build_nli_provider(providers_cfg.get("nli", {"type": "overlap"}))
    return embedding, nli


def _write_manifest(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace) -> int:
    resolver = _Resolver(args)
    dataset = _load_dataset_arg(resolver)
    stats = dataset_stats(dataset)
    payload = {
        "dataset": dataset.name,
        "report_count": stats.report_count,
        "mean_tokens_per_report": stats.mean_tokens_per_report,
        "total_tokens": stats.total_tokens,
        "mean_findings_to_impression_token_ratio": (
            stats.mean_findings_to_impression_token_ratio
        ),
    }
    if resolver.get("json", False):
        print(json.dumps(payload, indent=2))
    else:
        print(f"dataset: {payload['dataset']}")
        print(f"reports: {payload['report_count']}")
        print(f"mean tokens/report: {payload['mean_tokens_per_report']:.2f}")
        print(f"total tokens: {payload['total_tokens']}")
        print(
            "mean findings/impression token ratio: "
            f"{payload['mean_findings_to_impression_token_ratio']:.2f}"
        )
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    resolver = _Resolver(args)
    dataset = _load_dataset_arg(resolver)
    strata_raw = resolver.get("strata", "gender")
    strata = [
        {"age": "age_bucket"}.get(name.strip(), name.strip())
        for name in str(strata_raw).split(",")
        if name.strip()
    ]
    train_n = int(resolver.require("train"))
    test_n = int(resolver.require("test"))
    seed = int(resolver.get("seed", 0))
    train, test = stratified_split(dataset, train_n, test_n, strata, seed)
    out_dir = Path(resolver.get("out_dir", "."))
    out_format = resolver.get("out_format", resolver.get("format", "delimited-table"))
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / f"train{_EXT[out_format]}"
    test_path = out_dir / f"test{_EXT[out_format]}"
    save_dataset(train, train_path, out_format)
    save_dataset(test, test_path, out_format)
    _write_manifest(
        out_dir,
        {
            "command": "split",
            "dataset": str(resolver.require("dataset")),
            "train_n": train_n,
            "test_n": test_n,
            "strata": strata,
            "seed": seed,
            "train_file": train_path.name,
            "test_file": test_path.name,
        },
    )
    print(f"wrote {train_path} ({len(train)} reports) and {test_path} ({len(test)} reports)")
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    resolver = _Resolver(args)
    dataset = _load_dataset_arg(resolver)
    profile = _read_json(resolver.require("profile"))
    systems = _systems_from(profile, dataset)
    wanted = resolver.get("system")
    if wanted is not None:
        matching = [s for s in systems if s.name == wanted]
        if not matching:
            raise WorkbenchError(f"profile has no system named {wanted!r}")
        systems = matching
    pipeline_cfg = _pipeline_cfg_from(profile)
    out_dir = Path(resolver.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "generated.jsonl"
    count = 0
    with out_path.open("w", encoding="utf-8") as handle:
        for system in systems:
            for report in dataset:
                impression = pipe.generate(report, system.backend, system.style, pipeline_cfg)
                record = {"system": system.name, **impression.to_dict()}
                handle.write(json.dumps(record, sort_keys=True) + "\n")
                count += 1
    _write_manifest(
        out_dir,
        {
            "command": "generate",
            "dataset": str(resolver.require("dataset")),
            "profile": str(resolver.require("profile")),
            "systems": [s.describe() for s in systems],
            "pipeline": pipeline_cfg.to_dict(),
            "generated": count,
        },
    )
    print(f"wrote {count} impressions to {out_path}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    resolver = _Resolver(args)
    dataset = _load_dataset_arg(resolver)
    profile = _read_json(resolver.require("profile"))
    systems = _systems_from(profile, dataset)
    embedding, nli = _providers_from(profile)
    table = har.run_evaluation(
        dataset,
        systems,
        embedding,
        nli,
        metric_cfg=_metric_cfg_from(profile),
        pipeline_cfg=_pipeline_cfg_from(profile),
        jobs=int(resolver.get("jobs", 1)),
    )
    table_format = resolver.get("table_format", "plain")
    rendered = har.render_table(table, table_format)
    print(rendered, end="")
    out_dir = resolver.get("out_dir")
    if out_dir:
        out_dir = Path(out_dir)
        har.write_run_artifacts(
            out_dir,
            table,
            {
                "command": "evaluate",
                "dataset": str(resolver.require("dataset")),
                "profile": str(resolver.require("profile")),
                "jobs": int(resolver.get("jobs", 1)),
            },
            table_format,
        )
        from .figures import evaluation_figure

        evaluation_figure(table, out_dir / "figures" / "metrics.png")
    return 0


def _cmd_perturb(args: argparse.Namespace) -> int:
    resolver = _Resolver(args)
    dataset = _load_dataset_arg(resolver)
    spec = TypoSpec(
        rate=float(resolver.get("rate", 0.03)), seed=int(resolver.get("seed", 0))
    )
    total_edits = 0
    noisy = {}
    for report in dataset:
        per_report = TypoSpec(
            rate=spec.rate, ops=spec.ops, seed=derive_seed(spec.seed, report.id)
        )
        noisy[report.id], edits = inject_typos(report.findings, per_report)
        total_edits += edits
    from .corpus import with_findings

    out_path = Path(resolver.require("out"))
    out_format = resolver.get("out_format", resolver.get("format", "delimited-table"))
    save_dataset(with_findings(dataset, noisy), out_path, out_format)
    manifest = {
        "command": "perturb",
        "dataset": str(resolver.require("dataset")),
        "typo": spec.to_dict(),
        "edits": total_edits,
        "output": out_path.name,
    }
    out_path.with_name(out_path.name + ".manifest.json").write_text(
        json.dumps(manifest, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {out_path} with {total_edits} edits at rate {spec.rate:g}")
    return 0


def _cmd_stability(args: argparse.Namespace) -> int:
    resolver = _Resolver(args)
    dataset = _load_dataset_arg(resolver)
    profile = _read_json(resolver.require("profile"))
    systems = _systems_from(profile, dataset)
    wanted = resolver.get("system")
    if wanted is not None:
        matching = [s for s in systems if s.name == wanted]
        if not matching:
            raise WorkbenchError(f"profile has no system named {wanted!r}")
        system = matching[0]
    else:
        system = systems[0]
    embedding, nli = _providers_from(profile)
    spec = TypoSpec(
        rate=float(resolver.get("rate", 0.03)), seed=int(resolver.get("seed", 0))
    )
    result = har.stability_test(
        dataset,
        system,
        spec,
        embedding,
        nli,
        metric_cfg=_metric_cfg_from(profile),
        pipeline_cfg=_pipeline_cfg_from(profile),
        jobs=int(resolver.get("jobs", 1)),
    )
    table_format = resolver.get("table_format", "plain")
    print(har.render_table(result.table, table_format), end="")
    out_dir = resolver.get("out_dir")
    if out_dir:
        out_dir = Path(out_dir)
        har.write_run_artifacts(
            out_dir,
            result.table,
            {
                "command": "stability",
                "dataset": str(resolver.require("dataset")),
                "profile": str(resolver.require("profile")),
                "system": system.name,
                "typo": spec.to_dict(),
            },
            table_format,
        )
        from .figures import stability_figure

        stability_figure(result, out_dir / "figures" / "stability.png")
    return 0


def _cmd_review_serve(args: argparse.Namespace) -> int:
    resolver = _Resolver(args)
    import uvicorn

    from .review_service import create_app

    app = create_app(resolver.get("state_dir", "review-state"))
    uvicorn.run(
        app,
        host=resolver.get("host", "127.0.0.1"),
        port=int(resolver.get("port", 8321)),
        log_level="warning",
    )
    return 0


def _cmd_review_aggregate(args: argparse.Namespace) -> int:
    resolver = _Resolver(args)
    session = ReviewSession.load(resolver.require("log"))
    summary = session.aggregate()
    print(render_summary(summary, resolver.get("table_format", "plain")), end="")
    out_dir = resolver.get("out_dir")
    if out_dir:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "summary.json").write_text(
            json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (out_dir / "summary.csv").write_text(
            render_summary(summary, "delimited"), encoding="utf-8"
        )
        from .figures import rating_figure

        rating_figure(summary, out_dir / "figures" / "ratings.png")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_dataset_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", help="dataset file to load")
    parser.add_argument("--format", choices=FORMATS, help="dataset file format")
    parser.add_argument("--column-map", dest="column_map",
                        help="JSON file mapping canonical column names to file columns")
    parser.add_argument("--source", choices=("internal", "external"),
                        help="provenance tag for loaded reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radsum",
        description="Radiology impression workbench: datasets, generation, "
        "metrics, robustness, and blind review.",
    )
    parser.add_argument("--version", action="version", version=f"radsum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset and print stats")
    _add_dataset_flags(p)
    p.add_argument("--config", help="JSON config file (flags win)")
    p.add_argument("--json", action="store_true", default=None,
                   help="emit stats as JSON")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("split", help="stratified train/test split to files")
    _add_dataset_flags(p)
    p.add_argument("--config", help="JSON config file (flags win)")
    p.add_argument("--train", type=int, help="train set size")
    p.add_argument("--test", type=int, help="test set size")
    p.add_argument("--strata", help="comma list from: gender, age")
    p.add_argument("--seed", type=int, help="shuffle seed")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--out-format", dest="out_format", choices=FORMATS,
                   help="output file format (default: input format)")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("generate", help="run the coarse-to-fine pipeline over a dataset")
    _add_dataset_flags(p)
    p.add_argument("--config", help="JSON config file (flags win)")
    p.add_argument("--profile", help="systems/providers profile JSON")
    p.add_argument("--system", help="system name from the profile (default: all)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("evaluate", help="comparison run: generate, score, tabulate")
    _add_dataset_flags(p)
    p.add_argument("--config", help="JSON config file (flags win)")
    p.add_argument("--profile", dest="profile", help="systems/providers profile JSON")
    p.add_argument("--systems", dest="profile",
                   help="alias for --profile")
    p.add_argument("--table-format", dest="table_format", choices=TABLE_FORMATS,
                   help="rendering for stdout (default plain)")
    p.add_argument("--out-dir", dest="out_dir",
                   help="artifact directory (manifest, scores, table, figure)")
    p.add_argument("--jobs", type=int, help="parallel work items")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("perturb", help="write a typo-noised copy of a dataset")
    _add_dataset_flags(p)
    p.add_argument("--config", help="JSON config file (flags win)")
    p.add_argument("--rate", type=float, help="per-character error rate (default 0.03)")
    p.add_argument("--seed", type=int, help="noise seed")
    p.add_argument("--out", help="output dataset file")
    p.add_argument("--out-format", dest="out_format", choices=FORMATS)
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("stability", help="paired clean/perturbed evaluation")
    _add_dataset_flags(p)
    p.add_argument("--config", help="JSON config file (flags win)")
    p.add_argument("--profile", help="systems/providers profile JSON")
    p.add_argument("--system", help="system name from the profile (default: first)")
    p.add_argument("--rate", type=float, help="per-character error rate (default 0.03)")
    p.add_argument("--seed", type=int, help="noise seed")
    p.add_argument("--table-format", dest="table_format", choices=TABLE_FORMATS)
    p.add_argument("--out-dir", dest="out_dir", help="artifact directory")
    p.add_argument("--jobs", type=int, help="parallel work items")
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("review", help="blind review service and aggregation")
    review_sub = p.add_subparsers(dest="review_command", required=True)

    p_serve = review_sub.add_parser("serve", help="start the review HTTP service")
    p_serve.add_argument("--config", help="JSON config file (flags win)")
    p_serve.add_argument("--state-dir", dest="state_dir", help="session log directory")
    p_serve.add_argument("--host", help="bind address (default 127.0.0.1)")
    p_serve.add_argument("--port", type=int, help="port (default 8321)")
    p_serve.set_defaults(func=_cmd_review_serve)

    p_agg = review_sub.add_parser("aggregate", help="summary from a session event log")
    p_agg.add_argument("--config", help="JSON config file (flags win)")
    p_agg.add_argument("--log", help="session event log (record-lines)")
    p_agg.add_argument("--table-format", dest="table_format", choices=TABLE_FORMATS)
    p_agg.add_argument("--out-dir", dest="out_dir",
                       help="write summary.json, summary.csv, and the rating figure")
    p_agg.set_defaults(func=_cmd_review_aggregate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
