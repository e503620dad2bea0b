"""Metric-level tests.

The LCS oracle here is deliberately a different algorithm (memoized
recursion over suffix pairs) from the iterative DP in the package, so the
two can check each other.
"""
from __future__ import annotations

import math
import random
import re
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragmark.metrics import (
    DEFAULT_K,
    RAG_CRITERIA,
    GenerationJudgment,
    RetrievalJudgment,
    aggregate_generation,
    aggregate_retrieval,
    hit_rate,
    judge_score,
    lcs_length,
    ndcg,
    normalize,
    recall,
    rouge_l,
    split_segments,
    substring_match,
    tokenize,
    top_k_ids,
)


def oracle_lcs(a, b) -> int:
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def oracle_rouge(candidate: str, reference: str) -> float:
    cand = re.findall(r"\w+", candidate.casefold())
    ref = re.findall(r"\w+", reference.casefold())
    assert ref, "oracle needs a non-empty reference"
    if not cand:
        return 0.0
    lcs = oracle_lcs(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    rec = lcs / len(ref)
    return 2 * precision * rec / (precision + rec)


class TestTokenize:
    def test_casefold_and_punctuation(self):
        assert tokenize("Pavel Durov, founder of Telegram!") == [
            "pavel",
            "durov",
            "founder",
            "of",
            "telegram",
        ]

    def test_empty_and_punctuation_only(self):
        assert tokenize("") == []
        assert tokenize("?!... --") == []

    def test_normalize_joins_with_single_spaces(self):
        assert normalize("  The   Quick,  FOX. ") == "the quick fox"


class TestLcs:
    def test_hand_cases(self):
        assert lcs_length("abcde", "ace") == 3
        assert lcs_length("abc", "xyz") == 0
        assert lcs_length([], ["a"]) == 0
        assert lcs_length(["a", "b"], []) == 0
        assert lcs_length(["x"], ["x"]) == 1

    def test_matches_oracle_on_random_sequences(self):
        rng = random.Random(101)
        for _ in range(300):
            a = [rng.choice("abc") for _ in range(rng.randint(0, 9))]
            b = [rng.choice("abc") for _ in range(rng.randint(0, 9))]
            assert lcs_length(a, b) == oracle_lcs(a, b)

    @given(
        st.lists(st.sampled_from("ab"), max_size=8),
        st.lists(st.sampled_from("ab"), max_size=8),
    )
    def test_symmetric_and_bounded(self, a, b):
        value = lcs_length(a, b)
        assert value == lcs_length(b, a)
        assert 0 <= value <= min(len(a), len(b))


class TestRougeL:
    def test_frozen_values(self):
        # Values computed with the recursive oracle before being pinned here.
        assert rouge_l("the quick brown fox jumps", "the brown fox sleeps") == pytest.approx(
            0.6666666666666665, abs=1e-12
        )
        assert rouge_l(
            "Pavel Durov founded Telegram.", "Telegram was founded by Pavel Durov"
        ) == pytest.approx(0.4, abs=1e-12)
        assert rouge_l("alpha beta gamma", "gamma beta alpha") == pytest.approx(
            0.3333333333333333, abs=1e-12
        )
        assert rouge_l("a b c d e f", "b d f") == pytest.approx(0.6666666666666666, abs=1e-12)

    def test_identical_text_scores_one(self):
        assert rouge_l("Steven Wilson", "Steven Wilson") == 1.0
        assert rouge_l("steven WILSON!", "Steven Wilson") == 1.0

    def test_disjoint_text_scores_zero(self):
        assert rouge_l("completely unrelated words", "Steven Wilson") == 0.0

    def test_empty_candidate_scores_zero(self):
        assert rouge_l("", "Steven Wilson") == 0.0
        assert rouge_l("...", "Steven Wilson") == 0.0

    def test_empty_reference_raises(self):
        with pytest.raises(ValueError):
            rouge_l("anything", "")
        with pytest.raises(ValueError):
            rouge_l("anything", "?!")

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(7)
        words = ["red", "green", "blue", "cyan", "violet"]
        for _ in range(400):
            cand = " ".join(rng.choice(words) for _ in range(rng.randint(0, 8)))
            ref = " ".join(rng.choice(words) for _ in range(rng.randint(1, 8)))
            assert rouge_l(cand, ref) == pytest.approx(oracle_rouge(cand, ref), abs=1e-12)

    @given(st.text(alphabet="ab ", max_size=30), st.text(alphabet="ab ", max_size=30))
    @settings(max_examples=200)
    def test_bounded_and_symmetric(self, cand, ref):
        if not tokenize(ref):
            with pytest.raises(ValueError):
                rouge_l(cand, ref)
            return
        value = rouge_l(cand, ref)
        assert 0.0 <= value <= 1.0
        if tokenize(cand):
            # F1 is symmetric in precision and recall, hence in its arguments.
            assert value == pytest.approx(rouge_l(ref, cand), abs=1e-12)


class TestSubstringMatch:
    def test_split_segments(self):
        assert split_segments("Trigger, Method, ") == ["Trigger", "Method"]
        assert split_segments("China") == ["China"]
        assert split_segments(" , ,") == []

    def test_fraction_of_segments_found(self):
        assert substring_match("the trigger and the method", ["Trigger", "Method"]) == 1.0
        assert substring_match("only the trigger here", ["Trigger", "Method"]) == 0.5
        assert substring_match("nothing relevant", ["Trigger", "Method"]) == 0.0

    def test_matching_ignores_case_and_punctuation(self):
        assert substring_match("It was FAW-Volkswagen.", ["faw volkswagen"]) == 1.0

    def test_containment_is_plain_substring_after_normalization(self):
        # Containment is character-level on the normalized strings.
        assert substring_match("artful dodger", ["art"]) == 1.0
        assert substring_match("state of the art here", ["art"]) == 1.0
        assert substring_match("dodger", ["art"]) == 0.0

    def test_empty_segments_raise(self):
        with pytest.raises(ValueError):
            substring_match("anything", [])
        with pytest.raises(ValueError):
            substring_match("anything", ["", "  "])

    @given(st.lists(st.sampled_from(["alpha", "beta", "gamma"]), min_size=1, max_size=4))
    def test_candidate_containing_all_segments_scores_one(self, segments):
        candidate = " and ".join(segments)
        assert substring_match(candidate, segments) == 1.0


def random_judgment(rng: random.Random, k: int = DEFAULT_K) -> RetrievalJudgment:
    universe = range(20)
    found = [rng.choice(universe) for _ in range(rng.randint(0, 12))]
    relevant = rng.sample(universe, rng.randint(1, 6))
    return RetrievalJudgment(found, relevant, k=k)


class TestTopK:
    def test_dedupe_preserves_first_occurrence(self):
        j = RetrievalJudgment([3, 1, 3, 2, 1, 4, 5, 6], [1], k=5)
        assert top_k_ids(j) == [3, 1, 2, 4, 5]

    def test_short_list_untouched(self):
        j = RetrievalJudgment([9, 8], [1], k=5)
        assert top_k_ids(j) == [9, 8]

    def test_k_validation(self):
        with pytest.raises(ValueError):
            RetrievalJudgment([1], [1], k=0)

    def test_inputs_are_coerced(self):
        j = RetrievalJudgment(iter([1, 2]), iter([2, 3]))
        assert j.found_ids == (1, 2)
        assert j.relevant_ids == frozenset({2, 3})


class TestHitRateAndRecall:
    def test_hand_cases(self):
        assert hit_rate(RetrievalJudgment([1, 2, 3], [3])) == 1.0
        assert hit_rate(RetrievalJudgment([1, 2, 3], [9])) == 0.0
        assert recall(RetrievalJudgment([1, 2, 3], [2, 3, 9])) == pytest.approx(2 / 3)
        assert recall(RetrievalJudgment([], [1])) == 0.0

    def test_rank_beyond_k_does_not_count(self):
        j = RetrievalJudgment([1, 2, 3, 4, 5, 99], [99], k=5)
        assert hit_rate(j) == 0.0
        assert recall(j) == 0.0

    def test_duplicates_shift_ranks_before_cutoff(self):
        # Without dedupe, 99 would fall outside the top 5.
        j = RetrievalJudgment([1, 1, 1, 2, 3, 4, 99], [99], k=5)
        assert hit_rate(j) == 1.0

    def test_empty_relevant_raises(self):
        with pytest.raises(ValueError):
            hit_rate(RetrievalJudgment([1], []))
        with pytest.raises(ValueError):
            recall(RetrievalJudgment([1], []))
        with pytest.raises(ValueError):
            ndcg(RetrievalJudgment([1], []))

    def test_set_arithmetic_oracle(self):
        rng = random.Random(29)
        for _ in range(500):
            j = random_judgment(rng)
            top = set(top_k_ids(j))
            expected_hit = 1.0 if top & j.relevant_ids else 0.0
            expected_recall = len(top & j.relevant_ids) / len(j.relevant_ids)
            assert hit_rate(j) == expected_hit
            assert recall(j) == pytest.approx(expected_recall, abs=1e-12)


class TestNdcg:
    def test_single_relevant_at_rank_one(self):
        assert ndcg(RetrievalJudgment([7, 1, 2], [7])) == pytest.approx(1.0, abs=1e-12)

    def test_single_relevant_at_rank_two(self):
        # 1/log2(3) over an ideal of 1/log2(2).
        assert ndcg(RetrievalJudgment([1, 7, 2], [7])) == pytest.approx(
            0.6309297535714575, abs=1e-12
        )

    def test_two_relevant_at_ranks_one_and_three(self):
        value = ndcg(RetrievalJudgment([7, 1, 8, 2, 3], [7, 8]))
        assert value == pytest.approx(0.9197207891481876, abs=1e-12)

    def test_single_relevant_at_rank_four(self):
        assert ndcg(RetrievalJudgment([1, 2, 3, 7], [7])) == pytest.approx(
            0.43067655807339306, abs=1e-12
        )

    def test_miss_scores_zero(self):
        assert ndcg(RetrievalJudgment([1, 2], [9])) == 0.0
        assert ndcg(RetrievalJudgment([], [9])) == 0.0

    def test_perfect_prefix_scores_one(self):
        rng = random.Random(31)
        for _ in range(50):
            relevant = rng.sample(range(50), rng.randint(1, 5))
            tail = [x for x in range(50, 60)]
            j = RetrievalJudgment(relevant + tail, relevant, k=5)
            assert ndcg(j) == pytest.approx(1.0, abs=1e-12)

    def test_direct_formula_oracle(self):
        rng = random.Random(37)
        for _ in range(500):
            j = random_judgment(rng)
            top = top_k_ids(j)
            dcg = sum(
                1.0 / math.log2(i + 1) for i, d in enumerate(top, 1) if d in j.relevant_ids
            )
            ideal = min(len(j.relevant_ids), j.k)
            idcg = sum(1.0 / math.log2(i + 1) for i in range(1, ideal + 1))
            assert ndcg(j) == pytest.approx(dcg / idcg, abs=1e-12)

    def test_dedupe_never_lowers_any_metric(self):
        rng = random.Random(41)
        for _ in range(300):
            j = random_judgment(rng)
            deduped = RetrievalJudgment(dict.fromkeys(j.found_ids), j.relevant_ids, k=j.k)
            assert hit_rate(j) == hit_rate(deduped)
            assert recall(j) == recall(deduped)
            assert ndcg(j) == pytest.approx(ndcg(deduped), abs=1e-12)


class TestJudgeScore:
    def test_all_top_ratings_score_one(self):
        assert judge_score({c: 2 for c in RAG_CRITERIA}) == 1.0

    def test_all_zero_ratings_score_zero(self):
        assert judge_score({c: 0 for c in RAG_CRITERIA}) == 0.0

    def test_mean_over_criteria(self):
        ratings = {c: 1 for c in RAG_CRITERIA}
        assert judge_score(ratings) == 0.5
        ratings[RAG_CRITERIA[0]] = 2
        assert judge_score(ratings) == pytest.approx((2 + 5) / 6 / 2)

    def test_missing_criterion_raises(self):
        ratings = {c: 2 for c in RAG_CRITERIA[:-1]}
        with pytest.raises(ValueError, match=RAG_CRITERIA[-1]):
            judge_score(ratings)

    def test_out_of_range_rating_raises(self):
        ratings = {c: 2 for c in RAG_CRITERIA}
        ratings[RAG_CRITERIA[2]] = 3
        with pytest.raises(ValueError, match="out of range"):
            judge_score(ratings)

    def test_extra_keys_ignored(self):
        ratings = {c: 2 for c in RAG_CRITERIA}
        ratings["unrelated"] = 99
        assert judge_score(ratings) == 1.0


class TestAggregates:
    def test_retrieval_mean_and_skip_tally(self):
        judgments = [
            RetrievalJudgment([1], [1]),
            RetrievalJudgment([2], [9]),
            RetrievalJudgment([3], []),
        ]
        scores = aggregate_retrieval(judgments)
        assert scores.values["hit_rate"] == 0.5
        assert scores.values["recall"] == 0.5
        assert scores.values["ndcg"] == 0.5
        assert scores.skipped == {"empty_relevant_ids": 1}

    def test_generation_mean_and_skip_tally(self):
        judgments = [
            GenerationJudgment("Steven Wilson", "Steven Wilson"),
            GenerationJudgment("nothing", "Steven Wilson"),
            GenerationJudgment("anything", ""),
        ]
        scores = aggregate_generation(judgments)
        assert scores.values["rouge_l"] == 0.5
        assert scores.values["substring_match"] == 0.5
        assert scores.skipped == {"empty_reference": 1, "empty_segments": 1}

    def test_explicit_segments_override_comma_split(self):
        j = GenerationJudgment("alpha beta", "alpha, beta", reference_segments=("gamma",))
        scores = aggregate_generation([j])
        assert scores.values["substring_match"] == 0.0

    def test_all_unscorable_yields_zero_values(self):
        scores = aggregate_retrieval([RetrievalJudgment([1], [])])
        assert scores.values == {"hit_rate": 0.0, "recall": 0.0, "ndcg": 0.0}
        assert scores.skipped == {"empty_relevant_ids": 1}
