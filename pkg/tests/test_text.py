from __future__ import annotations

import random

import pytest

from radsum.text import (
    TokenizerConfig,
    lcs_length,
    ngrams,
    split_sentences,
    tokenize,
    truncate_tokens,
)

from .oracles import brute_force_lcs


class TestTokenize:
    def test_lowercase_and_punctuation(self):
        assert tokenize("Stable examination.") == ["stable", "examination"]

    def test_empty_input(self):
        assert tokenize("") == []

    def test_whitespace_runs_collapse(self):
        assert tokenize("No  acute\tfindings") == ["no", "acute", "findings"]

    def test_punctuation_splits_tokens(self):
        assert tokenize("chest/abdomen") == ["chest", "abdomen"]

    def test_configurable_normalization(self):
        cfg = TokenizerConfig(lowercase=False, strip_punctuation=False)
        assert tokenize("Stable examination.", cfg) == ["Stable", "examination."]

    def test_never_yields_empty_tokens(self):
        rng = random.Random(4)
        alphabet = "ab .,!?\t\n-:'"
        for _ in range(300):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
            assert all(tok for tok in tokenize(text))


class TestNgrams:
    def test_unigram_counts(self):
        assert ngrams(["a", "b", "a"], 1) == {("a",): 2, ("b",): 1}

    def test_window_longer_than_sequence(self):
        assert ngrams(["a", "b"], 3) == {}

    def test_bigram_counts(self):
        assert ngrams(["a", "b", "a", "b"], 2) == {("a", "b"): 2, ("b", "a"): 1}

    def test_order_below_one_rejected(self):
        with pytest.raises(ValueError):
            ngrams(["a"], 0)

    def test_total_count_identity(self):
        rng = random.Random(9)
        for _ in range(100):
            tokens = [rng.choice("abc") for _ in range(rng.randint(0, 12))]
            n = rng.randint(1, 4)
            total = sum(ngrams(tokens, n).values())
            assert total == max(0, len(tokens) - n + 1)


class TestLcsLength:
    def test_identity(self):
        assert lcs_length(["a", "b", "c"], ["a", "b", "c"]) == 3

    def test_hand_case(self):
        assert lcs_length(["a", "b", "c", "d"], ["a", "c", "d"]) == 3

    def test_disjoint(self):
        assert lcs_length(["a"], ["b"]) == 0

    def test_empty_side(self):
        assert lcs_length([], ["a", "b"]) == 0

    def test_symmetry_and_self_length(self):
        rng = random.Random(3)
        for _ in range(100):
            x = [rng.choice("abcd") for _ in range(rng.randint(0, 8))]
            y = [rng.choice("abcd") for _ in range(rng.randint(0, 8))]
            assert lcs_length(x, y) == lcs_length(y, x)
            assert lcs_length(x, x) == len(x)

    def test_shared_suffix_monotone(self):
        rng = random.Random(5)
        for _ in range(60):
            x = [rng.choice("abc") for _ in range(rng.randint(0, 6))]
            y = [rng.choice("abc") for _ in range(rng.randint(0, 6))]
            suffix = [rng.choice("abc") for _ in range(rng.randint(1, 4))]
            assert lcs_length(x + suffix, y + suffix) >= lcs_length(x, y)

    def test_matches_brute_force_small(self):
        rng = random.Random(7)
        for _ in range(60):
            x = [rng.choice("abc") for _ in range(rng.randint(0, 7))]
            y = [rng.choice("abc") for _ in range(rng.randint(0, 7))]
            assert lcs_length(x, y) == brute_force_lcs(x, y)


class TestSentencesAndTruncation:
    def test_split_on_terminators(self):
        text = "No acute disease. Stable appearance! Effusion resolved?"
        assert split_sentences(text) == [
            "No acute disease.",
            "Stable appearance!",
            "Effusion resolved?",
        ]

    def test_split_on_newlines(self):
        assert split_sentences("one\ntwo\n\nthree") == ["one", "two", "three"]

    def test_truncate_within_budget_is_identity(self):
        text = "Heart  size normal."
        out, cut = truncate_tokens(text, 3)
        assert out == text and cut is False

    def test_truncate_cuts_at_whitespace(self):
        out, cut = truncate_tokens("alpha beta gamma delta", 2)
        assert out == "alpha beta" and cut is True
