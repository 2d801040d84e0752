"""Batch experiment runner: system comparison tables and stability runs.

One run generates an impression per (system, report), scores it, and
averages per-system metrics into a table with the four headline columns
(ROUGE = ROUGE-1 recall, BLEU, BERT = F, FC). Full per-report score records
are always kept alongside for audit. Failed generations are excluded from
the means and surface as an exclusion count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import metrics as met
from . import pipeline as pipe
from . import providers as prov
from .corpus import Dataset, with_findings
from .errors import HarnessError, WorkbenchError
from .perturb import TypoSpec, derive_seed, inject_typos

TABLE_COLUMNS = ("rouge", "bleu", "bert", "fc")


@dataclass(frozen=True)
class SystemUnderTest:
    name: str
    backend: prov.GenerationBackend
    style: pipe.StyleTier

    def describe(self) -> dict:
        return {
            "name": self.name,
            "backend": self.backend.describe(),
            "style": self.style.to_dict(),
        }


@dataclass(frozen=True)
class ReportRecord:
    """Audit record for one (system, report) work item."""

    system: str
    report_id: str
    status: str  # "ok" | "error"
    error: str | None = None
    metrics: dict[str, float] | None = None
    generated: str | None = None

    def to_dict(self) -> dict:
        out = {"system": self.system, "report_id": self.report_id, "status": self.status}
        if self.error is not None:
            out["error"] = self.error
        if self.metrics is not None:
            out["metrics"] = self.metrics
        if self.generated is not None:
            out["generated"] = self.generated
        return out


@dataclass
class EvaluationTable:
    rows: dict[str, met.MetricReport]  # system name -> averaged report
    excluded: dict[str, int]
    n_reports: int
    config_digest: str
    records: list[ReportRecord] = field(default_factory=list)


def average_reports(reports: list[met.MetricReport]) -> met.MetricReport:
    """Arithmetic mean of every score, component-wise."""
    if not reports:
        raise HarnessError("cannot average zero metric reports")
    n = len(reports)
    orders = sorted(reports[0].rouge_n)
    return met.MetricReport(
        rouge_n={o: sum(r.rouge_n[o] for r in reports) / n for o in orders},
        rouge_l=met.LcsScores(
            recall=sum(r.rouge_l.recall for r in reports) / n,
            precision=sum(r.rouge_l.precision for r in reports) / n,
            f=sum(r.rouge_l.f for r in reports) / n,
        ),
        bleu=sum(r.bleu for r in reports) / n,
        bert=met.BertScores(
            recall=sum(r.bert.recall for r in reports) / n,
            precision=sum(r.bert.precision for r in reports) / n,
            f=sum(r.bert.f for r in reports) / n,
        ),
        factual_consistency=sum(r.factual_consistency for r in reports) / n,
    )


def _nan_report(orders: tuple[int, ...]) -> met.MetricReport:
    nan = float("nan")
    return met.MetricReport(
        rouge_n={o: nan for o in orders},
        rouge_l=met.LcsScores(nan, nan, nan),
        bleu=nan,
        bert=met.BertScores(nan, nan, nan),
        factual_consistency=nan,
    )


def config_digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_config(
    dataset: Dataset,
    systems: list[SystemUnderTest],
    embeddings: prov.EmbeddingProvider,
    nli: prov.NliProvider,
    metric_cfg: met.MetricConfig,
    pipeline_cfg: pipe.PipelineConfig,
    extra: dict | None = None,
) -> dict:
    payload = {
        "dataset": dataset.name,
        "n_reports": len(dataset),
        "systems": [s.describe() for s in systems],
        "embedding": embeddings.describe(),
        "nli": nli.describe(),
        "metrics": metric_cfg.to_dict(),
        "pipeline": pipeline_cfg.to_dict(),
    }
    if extra:
        payload.update(extra)
    return payload


def _effective_jobs(jobs: int, *providers_with_limits) -> int:
    limit = jobs
    for provider in providers_with_limits:
        declared = getattr(provider, "max_in_flight", None)
        if declared is not None:
            limit = min(limit, declared)
    return max(1, limit)


def run_evaluation(
    dataset: Dataset,
    systems: list[SystemUnderTest],
    embeddings: prov.EmbeddingProvider,
    nli: prov.NliProvider,
    metric_cfg: met.MetricConfig = met.MetricConfig(),
    pipeline_cfg: pipe.PipelineConfig = pipe.DEFAULT_PIPELINE,
    jobs: int = 1,
    config_extra: dict | None = None,
) -> EvaluationTable:
    """Generate and score every (system, report) pair; average per system.

    Per-report failures are recorded and excluded from the means; the run
    only fails outright when no pair at all produced a score.
    """
    if not systems:
        raise HarnessError("no systems under test")
    names = [s.name for s in systems]
    if len(set(names)) != len(names):
        raise HarnessError(f"system names must be unique, got {names}")
    missing = [r.id for r in dataset if not r.impression.strip()]
    if missing:
        raise HarnessError(f"reports without reference impression: {missing}")

    def work(system: SystemUnderTest, report) -> ReportRecord:
        try:
            generated = pipe.generate(report, system.backend, system.style, pipeline_cfg)
            scores = met.evaluate_pair(
                candidate=generated.final_text,
                reference=report.impression,
                findings=report.findings,
                embeddings=embeddings,
                nli=nli,
                cfg=metric_cfg,
            )
        except WorkbenchError as exc:
            return ReportRecord(
                system=system.name, report_id=report.id, status="error", error=str(exc)
            )
        return ReportRecord(
            system=system.name,
            report_id=report.id,
            status="ok",
            metrics=scores.flat(),
            generated=generated.final_text,
        )

    tasks = [(system, report) for system in systems for report in dataset]
    workers = _effective_jobs(jobs, embeddings, nli, *(s.backend for s in systems))
    if workers == 1:
        records = [work(system, report) for system, report in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda sr: work(*sr), tasks))

    # Ordered reduction by (system, report index): records already follow
    # task order, so accumulation is schedule-independent.
    rows: dict[str, met.MetricReport] = {}
    excluded: dict[str, int] = {}
    per_system_scores: dict[str, list[met.MetricReport]] = {s.name: [] for s in systems}
    for record, (system, report) in zip(records, tasks):
        if record.status == "ok":
            per_system_scores[system.name].append(
                _report_from_flat(record.metrics, metric_cfg.rouge.orders)
            )
        else:
            excluded[system.name] = excluded.get(system.name, 0) + 1
    if not any(per_system_scores.values()):
        raise HarnessError("every system failed on every report")
    for system in systems:
        scores = per_system_scores[system.name]
        rows[system.name] = (
            average_reports(scores) if scores else _nan_report(metric_cfg.rouge.orders)
        )
        excluded.setdefault(system.name, 0)

    digest = config_digest(
        run_config(dataset, systems, embeddings, nli, metric_cfg, pipeline_cfg, config_extra)
    )
    return EvaluationTable(
        rows=rows,
        excluded=excluded,
        n_reports=len(dataset),
        config_digest=digest,
        records=records,
    )


def _report_from_flat(flat: dict[str, float], orders: tuple[int, ...]) -> met.MetricReport:
    return met.MetricReport(
        rouge_n={o: flat[f"rouge_{o}"] for o in orders},
        rouge_l=met.LcsScores(
            recall=flat["rouge_l_recall"],
            precision=flat["rouge_l_precision"],
            f=flat["rouge_l_f"],
        ),
        bleu=flat["bleu"],
        bert=met.BertScores(
            recall=flat["bert_recall"],
            precision=flat["bert_precision"],
            f=flat["bert_f"],
        ),
        factual_consistency=flat["factual_consistency"],
    )


def _delta_report(a: met.MetricReport, b: met.MetricReport) -> met.MetricReport:
    """b - a, component-wise."""
    return met.MetricReport(
        rouge_n={o: b.rouge_n[o] - a.rouge_n[o] for o in a.rouge_n},
        rouge_l=met.LcsScores(
            recall=b.rouge_l.recall - a.rouge_l.recall,
            precision=b.rouge_l.precision - a.rouge_l.precision,
            f=b.rouge_l.f - a.rouge_l.f,
        ),
        bleu=b.bleu - a.bleu,
        bert=met.BertScores(
            recall=b.bert.recall - a.bert.recall,
            precision=b.bert.precision - a.bert.precision,
            f=b.bert.f - a.bert.f,
        ),
        factual_consistency=b.factual_consistency - a.factual_consistency,
    )


@dataclass
class StabilityResult:
    """Clean vs typo-noised paired run for one system."""

    system: str
    typo: TypoSpec
    table: EvaluationTable  # rows: clean, perturbed, delta

    @property
    def delta(self) -> met.MetricReport:
        return self.table.rows["delta"]


def perturb_dataset(dataset: Dataset, spec: TypoSpec) -> Dataset:
    """Copy of the dataset with findings noised, one derived seed per report."""
    noisy = {}
    for report in dataset:
        per_report = replace(spec, seed=derive_seed(spec.seed, report.id))
        noisy[report.id], _ = inject_typos(report.findings, per_report)
    return with_findings(dataset, noisy)


def stability_test(
    dataset: Dataset,
    system: SystemUnderTest,
    spec: TypoSpec,
    embeddings: prov.EmbeddingProvider,
    nli: prov.NliProvider,
    metric_cfg: met.MetricConfig = met.MetricConfig(),
    pipeline_cfg: pipe.PipelineConfig = pipe.DEFAULT_PIPELINE,
    jobs: int = 1,
) -> StabilityResult:
    """Paired clean/perturbed evaluation of one system.

    Findings are perturbed before generation and also serve as the factual
    consistency premise in the perturbed arm; reference impressions are
    never touched.
    """
    clean = run_evaluation(
        dataset, [system], embeddings, nli, metric_cfg, pipeline_cfg, jobs,
        config_extra={"arm": "clean", "typo": spec.to_dict()},
    )
    noisy_dataset = perturb_dataset(dataset, spec)
    perturbed = run_evaluation(
        noisy_dataset, [system], embeddings, nli, metric_cfg, pipeline_cfg, jobs,
        config_extra={"arm": "perturbed", "typo": spec.to_dict()},
    )
    clean_row = clean.rows[system.name]
    perturbed_row = perturbed.rows[system.name]
    digest = config_digest(
        {
            "clean": clean.config_digest,
            "perturbed": perturbed.config_digest,
            "typo": spec.to_dict(),
        }
    )
    records = [
        replace(r, system=f"{system.name}:clean") for r in clean.records
    ] + [replace(r, system=f"{system.name}:perturbed") for r in perturbed.records]
    table = EvaluationTable(
        rows={
            "clean": clean_row,
            "perturbed": perturbed_row,
            "delta": _delta_report(clean_row, perturbed_row),
        },
        excluded={
            "clean": clean.excluded[system.name],
            "perturbed": perturbed.excluded[system.name],
            "delta": 0,
        },
        n_reports=len(dataset),
        config_digest=digest,
        records=records,
    )
    return StabilityResult(system=system.name, typo=spec, table=table)


# ---------------------------------------------------------------------------
# Rendering and persistence
# ---------------------------------------------------------------------------


def _headline(report: met.MetricReport) -> dict[str, float]:
    rouge1 = report.rouge_n.get(1, float("nan"))
    return {
        "rouge": rouge1,
        "bleu": report.bleu,
        "bert": report.bert.f,
        "fc": report.factual_consistency,
    }


def render_table(table: EvaluationTable, format: str = "plain") -> str:
    """Fixed 3-decimal table in insertion order; formats: plain, delimited,
    markdown."""
    header = ["system", *TABLE_COLUMNS, "excluded"]
    body = []
    for name, report in table.rows.items():
        cells = _headline(report)
        body.append(
            [name]
            + [f"{cells[col]:.3f}" for col in TABLE_COLUMNS]
            + [str(table.excluded.get(name, 0))]
        )
    if format == "delimited":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
        return out.getvalue()
    if format == "markdown":
        lines = [
            "| " + " | ".join(header) + " |",
            "| " + " | ".join("---" for _ in header) + " |",
        ]
        lines.extend("| " + " | ".join(row) + " |" for row in body)
        return "\n".join(lines) + "\n"
    if format == "plain":
        widths = [
            max(len(header[i]), *(len(row[i]) for row in body)) if body else len(header[i])
            for i in range(len(header))
        ]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        lines.extend(
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
            for row in body
        )
        return "\n".join(lines) + "\n"
    raise HarnessError(f"unknown table format {format!r}")


def parse_delimited_table(text: str) -> dict[str, dict[str, float]]:
    """Inverse of the delimited rendering, for round-trip checks."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    header = rows[0]
    out: dict[str, dict[str, float]] = {}
    for row in rows[1:]:
        values = dict(zip(header, row))
        name = values.pop("system")
        out[name] = {
            key: (int(v) if key == "excluded" else float(v)) for key, v in values.items()
        }
    return out


def write_run_artifacts(
    out_dir: str | Path,
    table: EvaluationTable,
    manifest: dict,
    table_format: str = "delimited",
) -> dict[str, Path]:
    """Persist manifest, per-report records, and the rendered table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "manifest": out_dir / "manifest.json",
        "records": out_dir / "scores.jsonl",
        "table": out_dir / "table.csv",
    }
    manifest = dict(manifest)
    manifest["config_digest"] = table.config_digest
    # Manifest is a record-lines file holding a single record, same framing
    # as the per-report score records.
    paths["manifest"].write_text(
        json.dumps(manifest, sort_keys=True) + "\n", encoding="utf-8"
    )
    with paths["records"].open("w", encoding="utf-8") as handle:
        for record in table.records:
            handle.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    paths["table"].write_text(render_table(table, "delimited"), encoding="utf-8")
    if table_format != "delimited":
        suffix = {"markdown": ".md", "plain": ".txt"}[table_format]
        extra = out_dir / f"table{suffix}"
        extra.write_text(render_table(table, table_format), encoding="utf-8")
        paths["rendered"] = extra
    return paths
