"""Radiology impression workbench.

Dataset tooling, coarse-to-fine generation over pluggable backends,
summarization metrics, typo-noise robustness runs, and blind multi-rater
review with aggregate reporting.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    CorpusStats,
    Dataset,
    Report,
    dataset_stats,
    load_dataset,
    save_dataset,
    stratified_split,
)
from .errors import (  # noqa: F401
    DataFormatError,
    HarnessError,
    MetricError,
    PipelineError,
    ProviderError,
    ReviewError,
    StratumError,
    TransientProviderError,
    WorkbenchError,
)
from .metrics import (  # noqa: F401
    BertScores,
    BleuConfig,
    LcsScores,
    MetricConfig,
    MetricReport,
    RougeConfig,
    bert_score,
    bleu,
    evaluate_pair,
    factual_consistency,
    rouge_l,
    rouge_n,
)
from .perturb import TypoSpec, inject_typos  # noqa: F401
from .pipeline import (  # noqa: F401
    GeneratedImpression,
    PipelineConfig,
    StyleTier,
    coarse_generate,
    refine,
    render_prompt,
)
from .text import TokenizerConfig, lcs_length, ngrams, tokenize  # noqa: F401
