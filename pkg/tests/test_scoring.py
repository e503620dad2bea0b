"""Validation and scoring of answer maps against a dataset revision."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import pytest

from ragmark.backends import RetryPolicy, ScriptedJudge
from ragmark.metrics import RAG_CRITERIA
from ragmark.scoring import (
    ALL_METRICS,
    GENERATION_METRICS,
    RETRIEVAL_METRICS,
    MetricReport,
    build_rag_judge_prompt,
    load_rag_criteria,
    score_submission,
    validate_answers,
)
from ragmark.store.revisions import DatasetRevision, PrivateQARow, QuestionRow, Version

NO_RETRY = RetryPolicy(attempts=1, sleep=lambda _: None)


@dataclass
class Ans:
    found_ids: list = field(default_factory=list)
    model_answer: str = ""


def make_revision() -> DatasetRevision:
    rev = DatasetRevision(
        version=Version(1, 1, 0),
        public_texts=[(0, "Alpha doc"), (1, "Beta doc"), (2, "Gamma doc")],
        public_questions=[
            QuestionRow("0", "Who launched the rocket?", "Simple"),
            QuestionRow("1", "Which bands does Ryan play in?", "Set"),
        ],
        private_mapping=[(10, 0), (11, 1), (12, 2)],
        private_qa=[
            PrivateQARow("0", "SpaceX did it.", ["SpaceX"], [10]),
            PrivateQARow("1", "Trigger and Method.", ["Trigger", "Method"], [11, 12]),
        ],
    )
    rev.validate()
    return rev


def good_answers() -> dict[str, Ans]:
    return {
        "0": Ans(found_ids=[1, 0], model_answer="SpaceX did it."),
        "1": Ans(found_ids=[2], model_answer="Method only"),
    }


class TestValidateAnswers:
    def test_complete_submission_is_ok(self):
        report = validate_answers(good_answers(), make_revision())
        assert report.ok
        assert report.to_dict() == {
            "ok": True,
            "missing_ids": [],
            "extra_ids": [],
            "non_integer_found": {},
            "unknown_public_ids": {},
            "parse_errors": [],
        }

    def test_missing_and_extra_ids(self):
        answers = good_answers()
        del answers["1"]
        answers["7"] = Ans()
        report = validate_answers(answers, make_revision())
        assert report.missing_ids == ["1"]
        assert report.extra_ids == ["7"]
        assert not report.ok

    def test_missing_ids_sort_numerically(self):
        rev = make_revision()
        rev.public_questions = [QuestionRow(str(i), "q", "Simple") for i in (2, 10, 1)]
        rev.private_qa = [PrivateQARow(str(i), "a", ["a"], [10]) for i in (2, 10, 1)]
        report = validate_answers({}, rev)
        assert report.missing_ids == ["1", "2", "10"]

    def test_non_integer_found_ids(self):
        answers = good_answers()
        answers["0"].found_ids = [1, "2", 0]
        report = validate_answers(answers, make_revision())
        assert report.non_integer_found == {"0": ["2"]}
        assert not report.ok

    def test_booleans_are_not_document_ids(self):
        answers = good_answers()
        answers["0"].found_ids = [True]
        report = validate_answers(answers, make_revision())
        assert report.non_integer_found == {"0": [True]}

    def test_unknown_public_ids(self):
        answers = good_answers()
        answers["1"].found_ids = [2, 99, -1]
        report = validate_answers(answers, make_revision())
        assert report.unknown_public_ids == {"1": [99, -1]}

    def test_bad_type_short_circuits_unknown_check(self):
        answers = good_answers()
        answers["0"].found_ids = ["99"]
        report = validate_answers(answers, make_revision())
        assert report.non_integer_found == {"0": ["99"]}
        assert report.unknown_public_ids == {}

    def test_non_text_model_answer(self):
        answers = good_answers()
        answers["0"].model_answer = None
        report = validate_answers(answers, make_revision())
        assert report.parse_errors == ["question 0: model_answer is not text"]

    def test_score_submission_refuses_invalid(self):
        answers = good_answers()
        del answers["0"]
        with pytest.raises(ValueError, match="failed validation"):
            score_submission(answers, make_revision())


# Expected values below are written as explicit formulas over the fixture,
# not copied from the implementation.
NDCG_RANK2_OF_1 = 1 / math.log2(3)
NDCG_RANK1_OF_2 = 1 / (1 + 1 / math.log2(3))
ROUGE_Q1 = 2 * (1 / 2) * (1 / 3) / (1 / 2 + 1 / 3)  # LCS "method" vs 3-token reference


class TestScoreSubmission:
    def test_per_question_rows(self):
        report = score_submission(good_answers(), make_revision(), k=5)
        q0 = report.per_question["0"]
        assert q0["hit_rate"] == 1.0
        assert q0["recall"] == 1.0
        assert q0["ndcg"] == pytest.approx(NDCG_RANK2_OF_1)
        assert q0["rouge_l"] == pytest.approx(1.0)
        assert q0["substring_match"] == 1.0
        assert q0["judge_score"] is None
        q1 = report.per_question["1"]
        assert q1["recall"] == 0.5
        assert q1["ndcg"] == pytest.approx(NDCG_RANK1_OF_2)
        assert q1["rouge_l"] == pytest.approx(ROUGE_Q1)
        assert q1["substring_match"] == 0.5

    def test_per_type_and_overall_aggregates(self):
        report = score_submission(good_answers(), make_revision(), k=5)
        assert set(report.per_type) == {"Simple", "Set"}
        simple, per_set = report.per_type["Simple"], report.per_type["Set"]
        assert simple["recall"] == 1.0
        assert per_set["recall"] == 0.5
        assert report.overall["recall"] == 0.75
        assert report.overall["ndcg"] == pytest.approx((NDCG_RANK2_OF_1 + NDCG_RANK1_OF_2) / 2)
        assert report.overall["rouge_l"] == pytest.approx((1.0 + ROUGE_Q1) / 2)
        assert report.overall["substring_match"] == 0.75
        assert report.revision == "1.1.0"
        assert report.skipped == {}

    def test_k_is_honoured(self):
        answers = good_answers()
        answers["0"].found_ids = [1, 2, 0]
        report = score_submission(answers, make_revision(), k=2)
        assert report.per_question["0"]["hit_rate"] == 0.0
        assert report.per_question["0"]["recall"] == 0.0

    def test_without_judge_note_and_nulls(self):
        report = score_submission(good_answers(), make_revision())
        assert report.judge_note == "judgment-based metrics unavailable without a judge backend"
        assert report.overall["judge_score"] is None
        assert all(report.per_type[t]["judge_score"] is None for t in report.per_type)

    def test_metric_name_families(self):
        report = score_submission(good_answers(), make_revision())
        assert set(report.overall) == set(ALL_METRICS)
        assert set(ALL_METRICS) == set(RETRIEVAL_METRICS) | set(GENERATION_METRICS)


class RecordingJudge(ScriptedJudge):
    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.prompts: list[str] = []

    def rate(self, prompt: str) -> int:
        self.prompts.append(prompt)
        return super().rate(prompt)


class TestJudgeScoring:
    def test_perfect_judge_gives_one(self):
        judge = RecordingJudge(default=2)
        report = score_submission(
            good_answers(), make_revision(), judge=judge, judge_instructions={}, retry=NO_RETRY
        )
        assert report.overall["judge_score"] == 1.0
        assert report.per_question["0"]["judge_score"] == 1.0
        assert report.judge_note is None
        assert len(judge.prompts) == 2 * len(RAG_CRITERIA)

    def test_prompts_carry_criterion_question_and_answers(self):
        judge = RecordingJudge(default=1)
        score_submission(
            good_answers(),
            make_revision(),
            judge=judge,
            judge_instructions={name: f"check {name}" for name in RAG_CRITERIA},
            retry=NO_RETRY,
        )
        first = judge.prompts[0]
        assert first.startswith(f"Criterion: {RAG_CRITERIA[0]}")
        assert f"check {RAG_CRITERIA[0]}" in first
        assert "Question: Who launched the rocket?" in first
        assert "Reference answer: SpaceX did it." in first
        assert "Model answer: SpaceX did it." in first
        seen_criteria = [p.splitlines()[0].removeprefix("Criterion: ") for p in judge.prompts]
        assert seen_criteria == list(RAG_CRITERIA) * 2

    def test_mixed_ratings_average(self):
        # One criterion rated 0, the rest 2: (5*2 + 0) / 6 / 2 = 5/6.
        judge = ScriptedJudge(ratings={f"Criterion: {RAG_CRITERIA[0]}": 0}, default=2)
        report = score_submission(
            good_answers(), make_revision(), judge=judge, judge_instructions={}, retry=NO_RETRY
        )
        assert report.overall["judge_score"] == pytest.approx(5 / 6)

    def test_partial_judge_outage_flags_report(self):
        judge = ScriptedJudge(default=2, fail_on="Ryan play in")
        report = score_submission(
            good_answers(), make_revision(), judge=judge, judge_instructions={}, retry=NO_RETRY
        )
        assert report.skipped == {"judge_failures": 1}
        assert report.judge_note == "partial judge coverage: 1 question(s) unrated"
        assert report.per_question["1"]["judge_score"] is None
        assert report.per_type["Set"]["judge_score"] is None
        assert report.per_type["Simple"]["judge_score"] == 1.0
        assert report.overall["judge_score"] == 1.0  # mean over the rated pool

    def test_out_of_scale_rating_counts_as_failure(self):
        judge = ScriptedJudge(ratings={"Who launched": 5}, default=2)
        report = score_submission(
            good_answers(), make_revision(), judge=judge, judge_instructions={}, retry=NO_RETRY
        )
        assert report.skipped == {"judge_failures": 1}
        assert report.per_question["0"]["judge_score"] is None

    def test_total_outage_leaves_judge_null_everywhere(self):
        judge = ScriptedJudge(default=2, fail_on="Criterion:")
        report = score_submission(
            good_answers(), make_revision(), judge=judge, judge_instructions={}, retry=NO_RETRY
        )
        assert report.skipped == {"judge_failures": 2}
        assert report.judge_note == "partial judge coverage: 2 question(s) unrated"
        assert report.overall["judge_score"] is None


class TestJudgePrompt:
    def test_layout(self):
        prompt = build_rag_judge_prompt("main_idea", "Check the main idea.", "Q?", "ref", "cand")
        lines = prompt.splitlines()
        assert lines[0] == "Criterion: main_idea"
        assert lines[1] == "Check the main idea."
        assert "single digit" in lines[2]
        assert lines[4] == "Question: Q?"
        assert lines[5] == "Reference answer: ref"
        assert lines[6] == "Model answer: cand"

    def test_bundled_catalog_covers_every_criterion(self):
        instructions = load_rag_criteria()
        assert set(RAG_CRITERIA) <= set(instructions)
        assert all(instructions[name].strip() for name in RAG_CRITERIA)


class TestMetricReport:
    def test_dict_round_trip_without_rows(self):
        report = score_submission(good_answers(), make_revision())
        raw = report.to_dict()
        assert "per_question" not in raw
        restored = MetricReport.from_dict(raw)
        assert restored.overall == report.overall
        assert restored.per_type == report.per_type
        assert restored.judge_note == report.judge_note
        assert restored.per_question == {}

    def test_dict_round_trip_with_rows(self):
        report = score_submission(good_answers(), make_revision())
        raw = report.to_dict(include_per_question=True)
        restored = MetricReport.from_dict(raw)
        assert restored == report
