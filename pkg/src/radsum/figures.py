"""Figure rendering for run artifacts.

Every CLI report path drops a PNG next to its delimited output: grouped
metric bars for comparison runs, clean-vs-perturbed bars for stability runs,
and the five-axis rating radar for review summaries.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import EvaluationTable, StabilityResult, TABLE_COLUMNS, _headline
from .review import DIMENSIONS, RatingSummary

_COLUMN_LABELS = {"rouge": "ROUGE", "bleu": "BLEU", "bert": "BERT", "fc": "FC"}


def evaluation_figure(table: EvaluationTable, path: str | Path) -> Path:
    """Grouped bars: one cluster per metric, one bar per system."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    systems = list(table.rows)
    x = np.arange(len(TABLE_COLUMNS))
    width = 0.8 / max(1, len(systems))
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, name in enumerate(systems):
        cells = _headline(table.rows[name])
        values = [cells[col] for col in TABLE_COLUMNS]
        ax.bar(x + i * width, values, width, label=name)
    ax.set_xticks(x + width * (len(systems) - 1) / 2)
    ax.set_xticklabels([_COLUMN_LABELS[c] for c in TABLE_COLUMNS])
    ax.set_ylabel("mean score")
    ax.set_title(f"Averaged metrics over {table.n_reports} reports")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def stability_figure(result: StabilityResult, path: str | Path) -> Path:
    """Clean vs perturbed bars with the delta annotated per metric."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    clean = _headline(result.table.rows["clean"])
    perturbed = _headline(result.table.rows["perturbed"])
    x = np.arange(len(TABLE_COLUMNS))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(x - 0.2, [clean[c] for c in TABLE_COLUMNS], 0.4, label="clean")
    ax.bar(x + 0.2, [perturbed[c] for c in TABLE_COLUMNS], 0.4, label="perturbed")
    for i, col in enumerate(TABLE_COLUMNS):
        delta = perturbed[col] - clean[col]
        top = max(clean[col], perturbed[col])
        ax.annotate(f"{delta:+.3f}", (x[i], top), xytext=(0, 4),
                    textcoords="offset points", ha="center", fontsize=8)
    ax.set_xticks(x)
    ax.set_xticklabels([_COLUMN_LABELS[c] for c in TABLE_COLUMNS])
    ax.set_ylabel("mean score")
    ax.set_title(
        f"{result.system}: stability at typo rate {result.typo.rate:g}"
    )
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def rating_figure(summary: RatingSummary, path: str | Path) -> Path:
    """Radar panels of the five dimension means, one per overall label."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = [lab for lab in ("positive", "neutral", "negative")
              if summary.dimension_means.get(lab)]
    if not labels:
        labels = ["positive"]
    angles = np.linspace(0, 2 * np.pi, len(DIMENSIONS), endpoint=False)
    closed = np.concatenate([angles, angles[:1]])
    fig, axes = plt.subplots(
        1, len(labels), figsize=(4 * len(labels), 4), subplot_kw={"polar": True}
    )
    if len(labels) == 1:
        axes = [axes]
    for ax, label in zip(axes, labels):
        means = summary.dimension_means.get(label, {})
        values = [means.get(dim, 0.0) for dim in DIMENSIONS]
        values = values + values[:1]
        ax.plot(closed, values, linewidth=1.5)
        ax.fill(closed, values, alpha=0.25)
        ax.set_xticks(angles)
        ax.set_xticklabels([d.replace("_", "-") for d in DIMENSIONS], fontsize=7)
        ax.set_ylim(0, 5)
        ax.set_title(f"{label} (n={summary.counts.get(label, 0)})", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
