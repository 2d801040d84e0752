from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np
import pytest

from radsum.errors import MetricError
from radsum.metrics import (
    BleuConfig,
    MetricConfig,
    RougeConfig,
    bert_score,
    bleu,
    evaluate_pair,
    factual_consistency,
    rouge_l,
    rouge_n,
)
from radsum.providers import ContainmentNli, OneHotEmbedding, OverlapNli

from .oracles import (
    brute_force_greedy_match,
    oracle_bleu,
    oracle_rouge_n,
)

VOCAB = tuple("abcdefgh")


class TestRougeN:
    def test_identity(self):
        tokens = ["the", "cat", "sat"]
        assert rouge_n(tokens, tokens, 1) == 1.0

    def test_partial_unigram_recall(self):
        assert rouge_n(["the", "cat"], ["the", "cat", "sat"], 1) == pytest.approx(2 / 3)

    def test_clipping_limits_repeats(self):
        assert rouge_n(["the", "the", "the"], ["the", "cat"], 1) == 0.5

    def test_reference_too_short(self):
        with pytest.raises(MetricError, match="order 2"):
            rouge_n(["a", "b"], ["a"], 2)

    def test_order_below_one(self):
        with pytest.raises(MetricError):
            rouge_n(["a"], ["a"], 0)

    def test_short_candidate_scores_zero(self):
        assert rouge_n(["a"], ["a", "b", "c"], 2) == 0.0

    def test_matches_scratch_oracle(self):
        rng = random.Random(17)
        for _ in range(120):
            n = rng.randint(1, 3)
            ref = [rng.choice(VOCAB) for _ in range(rng.randint(n, 9))]
            cand = [rng.choice(VOCAB) for _ in range(rng.randint(1, 9))]
            assert rouge_n(cand, ref, n) == pytest.approx(
                oracle_rouge_n(cand, ref, n), abs=1e-12
            )

    def test_invariant_under_token_renaming(self):
        rng = random.Random(23)
        for _ in range(60):
            ref = [rng.choice(VOCAB) for _ in range(rng.randint(2, 8))]
            cand = [rng.choice(VOCAB) for _ in range(rng.randint(1, 8))]
            mapping = dict(zip(VOCAB, rng.sample(VOCAB, len(VOCAB))))
            renamed_ref = [mapping[t] for t in ref]
            renamed_cand = [mapping[t] for t in cand]
            assert rouge_n(cand, ref, 1) == rouge_n(renamed_cand, renamed_ref, 1)


class TestRougeL:
    def test_identity_four_tokens(self):
        scores = rouge_l(["w", "x", "y", "z"], ["w", "x", "y", "z"], 1.0)
        assert (scores.recall, scores.precision, scores.f) == (1.0, 1.0, 1.0)

    def test_hand_worked_case(self):
        scores = rouge_l(["a", "c", "d"], ["a", "b", "c", "d"], 1.0)
        assert scores.recall == pytest.approx(0.75, abs=1e-12)
        assert scores.precision == pytest.approx(1.0, abs=1e-12)
        assert scores.f == pytest.approx(6 / 7, abs=1e-12)

    def test_disjoint_sequences(self):
        scores = rouge_l(["a"], ["b"], 1.0)
        assert (scores.recall, scores.precision, scores.f) == (0.0, 0.0, 0.0)

    def test_empty_inputs_rejected(self):
        with pytest.raises(MetricError):
            rouge_l([], ["a"], 1.0)
        with pytest.raises(MetricError):
            rouge_l(["a"], [], 1.0)

    def test_beta_weighting(self):
        scores = rouge_l(["a", "c", "d"], ["a", "b", "c", "d"], 2.0)
        r, p, b2 = 0.75, 1.0, 4.0
        assert scores.f == pytest.approx((1 + b2) * r * p / (r + b2 * p), abs=1e-12)

    def test_f_is_harmonic_mean_at_beta_one(self):
        rng = random.Random(29)
        for _ in range(100):
            ref = [rng.choice(VOCAB) for _ in range(rng.randint(1, 8))]
            cand = [rng.choice(VOCAB) for _ in range(rng.randint(1, 8))]
            scores = rouge_l(cand, ref, 1.0)
            if scores.recall + scores.precision == 0:
                assert scores.f == 0.0
            else:
                harmonic = (
                    2 * scores.recall * scores.precision
                    / (scores.recall + scores.precision)
                )
                assert scores.f == pytest.approx(harmonic, abs=1e-12)


class TestBleu:
    def test_identity_is_one(self):
        tokens = ["a", "b", "c", "d", "e"]
        assert bleu(tokens, tokens, BleuConfig(max_order=4)) == pytest.approx(1.0)

    def test_brevity_penalty_hand_case(self):
        value = bleu(["a", "b", "c"], ["a", "b", "c", "d"], BleuConfig(max_order=2))
        assert value == pytest.approx(math.exp(1 - 4 / 3), abs=1e-12)

    def test_zero_shared_bigrams_without_smoothing(self):
        value = bleu(["a", "c"], ["a", "b", "c"], BleuConfig(max_order=2))
        assert value == 0.0

    def test_epsilon_smoothing_keeps_score_positive(self):
        cfg = BleuConfig(max_order=2, smoothing="epsilon", epsilon=1e-9)
        value = bleu(["a", "c"], ["a", "b", "c"], cfg)
        assert 0.0 < value < 1.0

    def test_empty_candidate_rejected(self):
        with pytest.raises(MetricError):
            bleu([], ["a"], BleuConfig())

    def test_candidate_shorter_than_order_scores_zero(self):
        assert bleu(["a"], ["a", "b"], BleuConfig(max_order=2)) == 0.0

    def test_config_validation(self):
        with pytest.raises(MetricError):
            BleuConfig(max_order=0)
        with pytest.raises(MetricError):
            BleuConfig(max_order=2, weights=(0.9, 0.2))
        with pytest.raises(MetricError):
            BleuConfig(smoothing="laplace")

    def test_unigram_equal_length_equals_clipped_precision(self):
        rng = random.Random(31)
        cases = 0
        while cases < 50:
            length = rng.randint(1, 8)
            ref = [rng.choice(VOCAB) for _ in range(length)]
            cand = [rng.choice(VOCAB) for _ in range(length)]
            value = bleu(cand, ref, BleuConfig(max_order=1))
            # Hand oracle: clipped unigram precision with BP = 1 at equal lengths.
            matched = sum(
                min(cand.count(tok), ref.count(tok)) for tok in set(cand)
            )
            assert value == pytest.approx(matched / length, abs=1e-12)
            # Same quantity through the recall kernel with the roles swapped.
            assert value == pytest.approx(rouge_n(ref, cand, 1), abs=1e-12)
            cases += 1

    def test_matches_scratch_oracle(self):
        rng = random.Random(37)
        for _ in range(120):
            ref = [rng.choice(VOCAB) for _ in range(rng.randint(1, 9))]
            cand = [rng.choice(VOCAB) for _ in range(rng.randint(1, 9))]
            order = rng.randint(1, 3)
            mine = bleu(cand, ref, BleuConfig(max_order=order))
            assert mine == pytest.approx(
                oracle_bleu(cand, ref, order), abs=1e-9
            )

    def test_invariant_under_token_renaming(self):
        rng = random.Random(41)
        for _ in range(60):
            ref = [rng.choice(VOCAB) for _ in range(rng.randint(2, 8))]
            cand = [rng.choice(VOCAB) for _ in range(rng.randint(2, 8))]
            mapping = dict(zip(VOCAB, rng.sample(VOCAB, len(VOCAB))))
            cfg = BleuConfig(max_order=2, smoothing="epsilon")
            assert bleu(cand, ref, cfg) == bleu(
                [mapping[t] for t in cand], [mapping[t] for t in ref], cfg
            )


class TestBertScore:
    def test_identity(self):
        vectors = np.eye(4)[:3]
        scores = bert_score(vectors, vectors)
        assert (scores.recall, scores.precision, scores.f) == (1.0, 1.0, 1.0)

    def test_one_hot_partial_overlap(self):
        basis = np.eye(3)
        scores = bert_score(basis[[0, 2]], basis[[0, 1, 2]])
        assert scores.recall == pytest.approx(2 / 3, abs=1e-12)
        assert scores.precision == pytest.approx(1.0, abs=1e-12)
        assert scores.f == pytest.approx(0.8, abs=1e-12)

    def test_orthogonal_scores_zero(self):
        basis = np.eye(4)
        scores = bert_score(basis[[0, 1]], basis[[2, 3]])
        assert (scores.recall, scores.precision, scores.f) == (0.0, 0.0, 0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(MetricError, match="dimension"):
            bert_score(np.eye(3), np.eye(4))

    def test_non_unit_vectors_rejected(self):
        bad = np.eye(3) * 2.0
        with pytest.raises(MetricError, match="unit-norm"):
            bert_score(bad, np.eye(3))

    def test_empty_rejected(self):
        with pytest.raises(MetricError):
            bert_score(np.zeros((0, 3)), np.eye(3))

    def test_one_hot_recall_counts_shared_types(self):
        rng = random.Random(43)
        vocab = list(VOCAB)
        basis = np.eye(len(vocab))
        index = {tok: i for i, tok in enumerate(vocab)}
        for _ in range(100):
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 8))]
            cand = [rng.choice(vocab) for _ in range(rng.randint(1, 8))]
            scores = bert_score(basis[[index[t] for t in cand]],
                                basis[[index[t] for t in ref]])
            shared = sum(1 for tok in ref if tok in set(cand))
            assert scores.recall == pytest.approx(shared / len(ref), abs=1e-12)

    def test_matches_brute_force_greedy(self):
        rng = random.Random(47)
        for _ in range(60):
            dim = rng.randint(2, 5)
            cand = np.eye(dim)[[rng.randrange(dim) for _ in range(rng.randint(1, 6))]]
            ref = np.eye(dim)[[rng.randrange(dim) for _ in range(rng.randint(1, 6))]]
            scores = bert_score(cand, ref)
            oracle = brute_force_greedy_match(cand.tolist(), ref.tolist())
            assert scores.recall == pytest.approx(oracle[0], abs=1e-12)
            assert scores.precision == pytest.approx(oracle[1], abs=1e-12)
            assert scores.f == pytest.approx(oracle[2], abs=1e-12)


@dataclass
class RecordingNli:
    """Captures the orientation the metric actually used."""

    last: tuple[str, str] | None = None
    max_in_flight: int | None = None

    def entailment(self, premise: str, hypothesis: str) -> float:
        self.last = (premise, hypothesis)
        return 0.5

    def describe(self) -> dict:
        return {"type": "recording"}


class TestFactualConsistency:
    def test_containment_mock_full_score(self):
        assert factual_consistency("heart is normal today", "heart is normal",
                                   ContainmentNli()) == 1.0

    def test_overlap_mock_zero_without_shared_tokens(self):
        assert factual_consistency("alpha beta", "gamma delta", OverlapNli()) == 0.0

    def test_overlap_mock_half(self):
        assert factual_consistency("a c", "a b", OverlapNli()) == 0.5

    def test_orientation_is_fixed_by_operation(self):
        recorder = RecordingNli()
        factual_consistency("the findings text", "the summary text", recorder)
        assert recorder.last == ("the findings text", "the summary text")

    def test_empty_inputs_rejected(self):
        with pytest.raises(MetricError):
            factual_consistency("", "h", OverlapNli())


class TestEvaluatePair:
    def evaluate_identity(self, text):
        vocab = tuple(sorted(set(text.lower().replace(".", "").split())))
        provider = OneHotEmbedding(vocabulary=vocab)
        return evaluate_pair(text, text, text, provider, OverlapNli())

    def test_identity_scores_one_everywhere(self):
        report = self.evaluate_identity("heart size is normal today")
        assert report.rouge_n[1] == 1.0
        assert report.rouge_n[2] == 1.0
        assert report.rouge_l.f == 1.0
        assert report.bleu == 1.0
        assert report.bert.f == 1.0
        assert report.factual_consistency == 1.0

    def test_composition_matches_standalone_rouge_l(self, hash_embedding, overlap_nli):
        candidate = "the heart and the aorta look fine"
        reference = "the heart aorta look fine today overall"
        report = evaluate_pair(
            candidate, reference, "irrelevant findings heart", hash_embedding, overlap_nli
        )
        standalone = rouge_l(candidate.split(), reference.split(), 1.0)
        assert report.rouge_l == standalone

    def test_deterministic_for_deterministic_providers(self, hash_embedding, overlap_nli):
        args = ("no acute disease", "no acute osseous disease",
                "lungs clear, no acute disease")
        first = evaluate_pair(*args, hash_embedding, overlap_nli)
        second = evaluate_pair(*args, hash_embedding, overlap_nli)
        assert first == second

    def test_submetric_errors_carry_metric_name(self, hash_embedding, overlap_nli):
        with pytest.raises(MetricError, match="rouge-2"):
            evaluate_pair("one", "single", "findings", hash_embedding, overlap_nli)

    def test_empty_candidate_rejected(self, hash_embedding, overlap_nli):
        with pytest.raises(MetricError):
            evaluate_pair(" ", "ref", "findings", hash_embedding, overlap_nli)

    def test_scores_within_ranges(self, hash_embedding, overlap_nli):
        rng = random.Random(53)
        words = ["heart", "lung", "clear", "mass", "left", "right", "stable", "new"]
        for _ in range(40):
            cand = " ".join(rng.choice(words) for _ in range(rng.randint(2, 9)))
            ref = " ".join(rng.choice(words) for _ in range(rng.randint(2, 9)))
            cfg = MetricConfig(bleu=BleuConfig(smoothing="epsilon"))
            report = evaluate_pair(cand, ref, ref, hash_embedding, overlap_nli, cfg)
            for value in report.rouge_n.values():
                assert 0.0 <= value <= 1.0
            assert 0.0 <= report.bleu <= 1.0
            assert 0.0 <= report.factual_consistency <= 1.0
            assert -1.0 <= report.bert.f <= 1.0

    def test_rouge_config_orders_respected(self, hash_embedding, overlap_nli):
        cfg = MetricConfig(rouge=RougeConfig(orders=(1,)))
        report = evaluate_pair("one two", "one two", "one two",
                               hash_embedding, overlap_nli, cfg)
        assert set(report.rouge_n) == {1}
