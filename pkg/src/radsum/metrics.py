"""Summarization metrics: ROUGE-N, ROUGE-L, BLEU, BERTScore, factual consistency.

All scores compare a candidate impression against a single reference
impression, except factual consistency, which always tests the candidate
(hypothesis) against the report findings (premise). The kernels are written
directly from the defining formulas; nothing here calls out to third-party
metric packages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import providers as prov
from .errors import MetricError
from .text import (
    DEFAULT_TOKENIZER,
    TokenizerConfig,
    TokenSeq,
    lcs_length,
    ngrams,
    tokenize,
)


@dataclass(frozen=True)
class RougeConfig:
    orders: tuple[int, ...] = (1, 2)
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise MetricError(f"rouge beta must be finite and positive, got {self.beta}")

    def to_dict(self) -> dict:
        return {"orders": list(self.orders), "beta": self.beta}


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    weights: tuple[float, ...] | None = None  # None -> uniform 1/max_order
    smoothing: str = "none"  # "none" | "epsilon"
    epsilon: float = 1e-9

    def __post_init__(self) -> None:
        if self.max_order < 1:
            raise MetricError("bleu max_order must be >= 1")
        if self.smoothing not in ("none", "epsilon"):
            raise MetricError(f"unknown bleu smoothing {self.smoothing!r}")
        if self.weights is not None:
            if len(self.weights) != self.max_order:
                raise MetricError("bleu weights length must equal max_order")
            if any(w <= 0 for w in self.weights):
                raise MetricError("bleu weights must be positive")
            if abs(sum(self.weights) - 1.0) > 1e-9:
                raise MetricError("bleu weights must sum to one")

    def effective_weights(self) -> tuple[float, ...]:
        if self.weights is not None:
            return self.weights
        return tuple(1.0 / self.max_order for _ in range(self.max_order))

    def to_dict(self) -> dict:
        return {
            "max_order": self.max_order,
            "weights": list(self.effective_weights()),
            "smoothing": self.smoothing,
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True)
class LcsScores:
    recall: float
    precision: float
    f: float


@dataclass(frozen=True)
class BertScores:
    recall: float
    precision: float
    f: float


@dataclass(frozen=True)
class MetricReport:
    rouge_n: dict[int, float]
    rouge_l: LcsScores
    bleu: float
    bert: BertScores
    factual_consistency: float

    def flat(self) -> dict[str, float]:
        """All scores as a flat name -> value map (audit records, tables)."""
        out = {f"rouge_{n}": v for n, v in sorted(self.rouge_n.items())}
        out.update(
            rouge_l_recall=self.rouge_l.recall,
            rouge_l_precision=self.rouge_l.precision,
            rouge_l_f=self.rouge_l.f,
            bleu=self.bleu,
            bert_recall=self.bert.recall,
            bert_precision=self.bert.precision,
            bert_f=self.bert.f,
            factual_consistency=self.factual_consistency,
        )
        return out


def rouge_n(candidate: TokenSeq, reference: TokenSeq, n: int) -> float:
    """Clipped n-gram recall of the candidate against one reference.

    Each reference n-gram is matched at most min(candidate count, reference
    count) times; the denominator is the reference's total n-gram count.
    """
    if n < 1:
        raise MetricError(f"rouge order must be >= 1, got {n}")
    if len(reference) < n:
        raise MetricError(f"reference too short for order {n}")
    ref_counts = ngrams(reference, n)
    cand_counts = ngrams(candidate, n)
    matched = sum(
        min(count, cand_counts[gram]) for gram, count in ref_counts.items()
    )
    return matched / sum(ref_counts.values())


def rouge_l(candidate: TokenSeq, reference: TokenSeq, beta: float = 1.0) -> LcsScores:
    """LCS-based recall/precision/F over whole texts as single sequences.

    Recall divides the LCS length by the reference length, precision by the
    candidate length; F is the beta-weighted combination and is 0 when the
    sequences share nothing.
    """
    if not candidate or not reference:
        raise MetricError("rouge_l requires non-empty candidate and reference")
    lcs = lcs_length(candidate, reference)
    recall = lcs / len(reference)
    precision = lcs / len(candidate)
    if lcs == 0:
        return LcsScores(recall=0.0, precision=0.0, f=0.0)
    b2 = beta * beta
    f = (1 + b2) * recall * precision / (recall + b2 * precision)
    return LcsScores(recall=recall, precision=precision, f=f)


def bleu(candidate: TokenSeq, reference: TokenSeq, cfg: BleuConfig = BleuConfig()) -> float:
    """Brevity-penalized geometric mean of clipped n-gram precisions.

    The brevity penalty is exp(1 - r/c) for candidate length c <= reference
    length r, 1 otherwise. A zero precision yields 0 without smoothing; with
    epsilon smoothing the zero is replaced by the configured epsilon. A
    candidate with no n-grams of some order counts as zero precision there.
    """
    if not candidate:
        raise MetricError("bleu requires a non-empty candidate")
    c, r = len(candidate), len(reference)
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    weights = cfg.effective_weights()
    log_sum = 0.0
    for m, weight in zip(range(1, cfg.max_order + 1), weights):
        cand_counts = ngrams(candidate, m)
        total = sum(cand_counts.values())
        if total == 0:
            p_m = 0.0
        else:
            ref_counts = ngrams(reference, m)
            clipped = sum(
                min(count, ref_counts[gram]) for gram, count in cand_counts.items()
            )
            p_m = clipped / total
        if p_m == 0.0:
            if cfg.smoothing == "none":
                return 0.0
            p_m = cfg.epsilon
        log_sum += weight * math.log(p_m)
    return bp * math.exp(log_sum)


def bert_score(cand_emb: np.ndarray, ref_emb: np.ndarray) -> BertScores:
    """Greedy max-inner-product matching between two unit-vector lists.

    Recall walks reference tokens, precision candidate tokens; each token is
    matched to the most similar token on the other side. F is the harmonic
    mean, 0 when recall + precision is 0.
    """
    cand = np.asarray(cand_emb, dtype=float)
    ref = np.asarray(ref_emb, dtype=float)
    if cand.ndim != 2 or ref.ndim != 2 or cand.shape[0] == 0 or ref.shape[0] == 0:
        raise MetricError("bert_score requires non-empty 2-D embedding lists")
    if cand.shape[1] != ref.shape[1]:
        raise MetricError(
            f"embedding dimension mismatch: candidate {cand.shape[1]}, reference {ref.shape[1]}"
        )
    for name, matrix in (("candidate", cand), ("reference", ref)):
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(np.abs(norms - 1.0) > prov.UNIT_NORM_TOLERANCE):
            raise MetricError(f"{name} embeddings are not unit-norm within 1e-6")
    similarity = ref @ cand.T  # rows: reference tokens, cols: candidate tokens
    recall = float(similarity.max(axis=1).mean())
    precision = float(similarity.max(axis=0).mean())
    denom = recall + precision
    f = 0.0 if denom == 0 else 2.0 * recall * precision / denom
    return BertScores(recall=recall, precision=precision, f=f)


def factual_consistency(premise: str, hypothesis: str, nli: prov.NliProvider) -> float:
    """Entailment probability of the generated summary given the findings.

    The orientation is fixed here: the findings are always the premise and
    the generated summary the hypothesis, regardless of caller ordering.
    """
    if not premise.strip() or not hypothesis.strip():
        raise MetricError("factual consistency requires non-empty premise and hypothesis")
    try:
        return prov.entail(premise, hypothesis, nli)
    except Exception as exc:
        raise MetricError(f"factual_consistency: {exc}") from exc


@dataclass(frozen=True)
class MetricConfig:
    """One bundle for everything evaluate_pair needs besides providers."""

    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER
    rouge: RougeConfig = RougeConfig()
    bleu: BleuConfig = field(default_factory=BleuConfig)

    def to_dict(self) -> dict:
        return {
            "tokenizer": self.tokenizer.to_dict(),
            "rouge": self.rouge.to_dict(),
            "bleu": self.bleu.to_dict(),
        }


def evaluate_pair(
    candidate: str,
    reference: str,
    findings: str,
    embeddings: prov.EmbeddingProvider,
    nli: prov.NliProvider,
    cfg: MetricConfig = MetricConfig(),
) -> MetricReport:
    """All configured metrics for one candidate/reference/findings triple.

    Texts are tokenized once with the shared config. ROUGE/BLEU/BERT compare
    candidate to reference; factual consistency compares candidate to the
    findings. Sub-metric failures propagate tagged with the metric name.
    """
    if not candidate.strip() or not reference.strip():
        raise MetricError("evaluate_pair requires non-empty candidate and reference")
    cand_tokens = tokenize(candidate, cfg.tokenizer)
    ref_tokens = tokenize(reference, cfg.tokenizer)

    rouge_scores: dict[int, float] = {}
    for order in cfg.rouge.orders:
        try:
            rouge_scores[order] = rouge_n(cand_tokens, ref_tokens, order)
        except MetricError as exc:
            raise MetricError(f"rouge-{order}: {exc}") from None
    try:
        lcs_scores = rouge_l(cand_tokens, ref_tokens, cfg.rouge.beta)
    except MetricError as exc:
        raise MetricError(f"rouge-l: {exc}") from None
    try:
        bleu_score = bleu(cand_tokens, ref_tokens, cfg.bleu)
    except MetricError as exc:
        raise MetricError(f"bleu: {exc}") from None
    try:
        cand_matrix = prov.embed(cand_tokens, embeddings)
        ref_matrix = prov.embed(ref_tokens, embeddings)
        bert = bert_score(cand_matrix.vectors, ref_matrix.vectors)
    except (MetricError, prov.ProviderError) as exc:
        raise MetricError(f"bert: {exc}") from None
    try:
        fc = factual_consistency(findings, candidate, nli)
    except MetricError as exc:
        raise MetricError(f"factual-consistency: {exc}") from None

    report = MetricReport(
        rouge_n=rouge_scores,
        rouge_l=lcs_scores,
        bleu=bleu_score,
        bert=bert,
        factual_consistency=fc,
    )
    _check_ranges(report)
    return report


def _check_ranges(report: MetricReport) -> None:
    for order, value in report.rouge_n.items():
        if not 0.0 <= value <= 1.0:
            raise MetricError(f"rouge-{order} out of range: {value}")
    for name, value in (
        ("rouge-l recall", report.rouge_l.recall),
        ("rouge-l precision", report.rouge_l.precision),
        ("rouge-l f", report.rouge_l.f),
        ("bleu", report.bleu),
        ("factual consistency", report.factual_consistency),
    ):
        if not 0.0 <= value <= 1.0:
            raise MetricError(f"{name} out of range: {value}")
    for name, value in (
        ("bert recall", report.bert.recall),
        ("bert precision", report.bert.precision),
        ("bert f", report.bert.f),
    ):
        if not -1.0 - 1e-9 <= value <= 1.0 + 1e-9:
            raise MetricError(f"{name} out of range: {value}")
