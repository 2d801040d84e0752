"""Deterministic text primitives: tokenization, n-grams, LCS, sentences.

All metric modules share these so that token counts, n-gram overlaps and
subsequence lengths are computed identically everywhere. Everything here is
a pure function of its inputs; there is no locale or environment dependence.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

# A token sequence is a plain list of non-empty strings.
TokenSeq = list[str]

# Anything that is neither a word character nor whitespace counts as
# punctuation; replacing with a space keeps token boundaries ("chest/abdomen").
_PUNCT_RE = re.compile(r"[^\w\s]+", re.UNICODE)

# Sentence boundaries: newline(s), or sentence-ending punctuation followed by
# whitespace. Deliberately simple and deterministic; abbreviations are rare in
# the findings prose this workbench handles.
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+|\n+")


@dataclass(frozen=True)
class TokenizerConfig:
    """Normalization switches; the config fully determines tokenization.

    ``collapse_whitespace`` is always true: splitting on runs of Unicode
    whitespace inherently collapses them. The field exists so serialized
    configs state it explicitly.
    """

    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "strip_punctuation": self.strip_punctuation,
            "collapse_whitespace": True,
        }


DEFAULT_TOKENIZER = TokenizerConfig()


def tokenize(text: str, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> TokenSeq:
    """Normalize and split ``text`` into tokens.

    Empty input yields an empty sequence; no empty-string tokens are ever
    produced.
    """
    if cfg.lowercase:
        text = text.lower()
    if cfg.strip_punctuation:
        text = _PUNCT_RE.sub(" ", text)
    return text.split()


def count_tokens(text: str, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> int:
    return len(tokenize(text, cfg))


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    """Counts of all contiguous ``n``-token windows.

    The total count is ``max(0, len(tokens) - n + 1)``.
    """
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def lcs_length(x: Sequence[str], y: Sequence[str]) -> int:
    """Length of a longest common subsequence of ``x`` and ``y``.

    Standard O(|x|*|y|) dynamic program keeping only two rows over the
    shorter sequence, so memory is O(min(|x|, |y|)).
    """
    if len(x) < len(y):
        x, y = y, x
    if not y:
        return 0
    prev = [0] * (len(y) + 1)
    curr = [0] * (len(y) + 1)
    for xi in x:
        for j, yj in enumerate(y, start=1):
            if xi == yj:
                curr[j] = prev[j - 1] + 1
            else:
                curr[j] = max(prev[j], curr[j - 1])
        prev, curr = curr, prev
    return prev[len(y)]


def split_sentences(text: str) -> list[str]:
    """Split text into sentences at newlines or [.!?] + whitespace.

    Trailing punctuation stays with its sentence; empty pieces are dropped.
    """
    return [piece.strip() for piece in _SENTENCE_SPLIT_RE.split(text) if piece.strip()]


def truncate_tokens(
    text: str, max_tokens: int, cfg: TokenizerConfig = DEFAULT_TOKENIZER
) -> tuple[str, bool]:
    """Cut text at whitespace so its token count fits ``max_tokens``.

    Returns the (possibly unchanged) text and whether a cut happened. Text
    already within budget passes through byte-identical.
    """
    if len(tokenize(text, cfg)) <= max_tokens:
        return text, False
    kept: list[str] = []
    used = 0
    for chunk in text.split():
        chunk_tokens = len(tokenize(chunk, cfg))
        if used + chunk_tokens > max_tokens:
            break
        kept.append(chunk)
        used += chunk_tokens
    return " ".join(kept), True
