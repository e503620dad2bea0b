"""Submission validation and scoring against a revision.

This is the single implementation both evaluation routes call: the service
feeds it the private splits it guards, the client feeds it locally held
sandbox splits. Retrieval ground truth is resolved internal → public through
the revision's private mapping before any metric sees it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from .backends import JudgeBackend, RetryPolicy
from .metrics import (
    RAG_CRITERIA,
    GenerationJudgment,
    RetrievalJudgment,
    aggregate_generation,
    aggregate_retrieval,
    hit_rate,
    judge_score,
    ndcg,
    recall,
    rouge_l,
    substring_match,
)
from .store.revisions import DatasetRevision

logger = logging.getLogger(__name__)

RETRIEVAL_METRICS = ("hit_rate", "recall", "ndcg")
GENERATION_METRICS = ("rouge_l", "substring_match", "judge_score")
ALL_METRICS = RETRIEVAL_METRICS + GENERATION_METRICS


class AnswerLike(Protocol):
    found_ids: Sequence[int]
    model_answer: str


@dataclass
class ValidationReport:
    """What is wrong with a submission's answers, if anything."""

    missing_ids: list[str] = field(default_factory=list)
    extra_ids: list[str] = field(default_factory=list)
    non_integer_found: dict[str, list] = field(default_factory=dict)
    unknown_public_ids: dict[str, list[int]] = field(default_factory=dict)
    parse_errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.missing_ids
            or self.extra_ids
            or self.non_integer_found
            or self.unknown_public_ids
            or self.parse_errors
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "missing_ids": self.missing_ids,
            "extra_ids": self.extra_ids,
            "non_integer_found": self.non_integer_found,
            "unknown_public_ids": self.unknown_public_ids,
            "parse_errors": self.parse_errors,
        }


def validate_answers(answers: Mapping[str, AnswerLike], rev: DatasetRevision) -> ValidationReport:
    """Check coverage and id sanity of an answers map against a revision."""
    report = ValidationReport()
    expected = {q.question_id for q in rev.public_questions}
    provided = set(answers)
    report.missing_ids = sorted(expected - provided, key=_qid_order)
    report.extra_ids = sorted(provided - expected, key=_qid_order)
    known_publics = {pid for pid, _ in rev.public_texts}
    for qid in sorted(provided & expected, key=_qid_order):
        answer = answers[qid]
        bad = [v for v in answer.found_ids if not isinstance(v, int) or isinstance(v, bool)]
        if bad:
            report.non_integer_found[qid] = bad
            continue
        unknown = [v for v in answer.found_ids if v not in known_publics]
        if unknown:
            report.unknown_public_ids[qid] = unknown
        if not isinstance(answer.model_answer, str):
            report.parse_errors.append(f"question {qid}: model_answer is not text")
    return report


def _qid_order(qid: str):
    return (0, int(qid)) if qid.isdigit() else (1, qid)


@dataclass
class MetricReport:
    """Aggregate, per-type and per-question metric values for one submission."""

    revision: str
    overall: dict[str, float | None]
    per_type: dict[str, dict[str, float | None]]
    per_question: dict[str, dict[str, float | None]]
    skipped: dict[str, int] = field(default_factory=dict)
    judge_note: str | None = None

    def to_dict(self, include_per_question: bool = False) -> dict:
        out = {
            "revision": self.revision,
            "overall": self.overall,
            "per_type": self.per_type,
            "skipped": self.skipped,
            "judge_note": self.judge_note,
        }
        if include_per_question:
            out["per_question"] = self.per_question
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "MetricReport":
        return cls(
            revision=raw["revision"],
            overall=dict(raw["overall"]),
            per_type={k: dict(v) for k, v in raw["per_type"].items()},
            per_question={k: dict(v) for k, v in raw.get("per_question", {}).items()},
            skipped=dict(raw.get("skipped", {})),
            judge_note=raw.get("judge_note"),
        )


def build_rag_judge_prompt(
    criterion_name: str, instruction: str, question: str, reference: str, candidate: str
) -> str:
    return "\n".join(
        [
            f"Criterion: {criterion_name}",
            instruction,
            "Rate 0 (bad), 1 (acceptable) or 2 (good). Reply with a single digit.",
            "",
            f"Question: {question}",
            f"Reference answer: {reference}",
            f"Model answer: {candidate}",
        ]
    )


def _judge_ratings(
    judge: JudgeBackend,
    instructions: Mapping[str, str],
    question: str,
    reference: str,
    candidate: str,
    retry: RetryPolicy,
) -> dict[str, int]:
    ratings: dict[str, int] = {}
    for name in RAG_CRITERIA:
        prompt = build_rag_judge_prompt(name, instructions.get(name, ""), question, reference, candidate)
        value = retry.run(lambda p=prompt: judge.rate(p))
        if value not in (0, 1, 2):
            raise ValueError(f"judge rating out of scale for {name}: {value!r}")
        ratings[name] = value
    return ratings


def load_rag_criteria(locale: str = "en") -> dict[str, str]:
    """Instruction text per end-to-end judge criterion."""
    from .filtering.stages import CriterionCatalog

    catalog = CriterionCatalog.load(f"rag_criteria_{locale}.txt")
    instructions = {c.name: c.instruction for c in catalog.criteria}
    missing = [name for name in RAG_CRITERIA if name not in instructions]
    if missing:
        raise ValueError(f"rag criteria catalog missing: {', '.join(missing)}")
    return instructions


def score_submission(
    answers: Mapping[str, AnswerLike],
    rev: DatasetRevision,
    k: int = 5,
    judge: JudgeBackend | None = None,
    judge_instructions: Mapping[str, str] | None = None,
    retry: RetryPolicy | None = None,
) -> MetricReport:
    """Score a validated answers map against one revision.

    Judge-based scoring runs only when a judge backend is supplied; otherwise
    judge_score stays an explicit null. Per-question judge failures flag the
    report as partial instead of sinking the run.
    """
    report = validate_answers(answers, rev)
    if not report.ok:
        raise ValueError(f"submission failed validation: {report.to_dict()}")
    retry = retry or RetryPolicy()
    mapping = rev.mapping()
    qa_by_id = {row.question_id: row for row in rev.private_qa}
    qtype_by_id = {q.question_id: q.qtype for q in rev.public_questions}
    question_by_id = {q.question_id: q.question for q in rev.public_questions}
    instructions = judge_instructions if judge_instructions is not None else (
        load_rag_criteria() if judge is not None else {}
    )

    retrieval: dict[str, list[RetrievalJudgment]] = {}
    generation: dict[str, list[GenerationJudgment]] = {}
    judge_values: dict[str, list[float]] = {}
    per_question: dict[str, dict[str, float | None]] = {}
    judge_failures = 0
    ordered_ids = [q.question_id for q in rev.public_questions]
    for qid in ordered_ids:
        answer = answers[qid]
        private = qa_by_id[qid]
        qtype = qtype_by_id[qid]
        relevant = {mapping[i] for i in private.relevant_internal_ids}
        rj = RetrievalJudgment(found_ids=answer.found_ids, relevant_ids=relevant, k=k)
        gj = GenerationJudgment(
            candidate=answer.model_answer,
            reference=private.answer,
            reference_segments=tuple(private.answer_entities),
        )
        retrieval.setdefault(qtype, []).append(rj)
        generation.setdefault(qtype, []).append(gj)
        row = _score_one(rj, gj)
        if judge is not None:
            try:
                ratings = _judge_ratings(
                    judge, instructions, question_by_id[qid], private.answer,
                    answer.model_answer, retry,
                )
                value = judge_score(ratings)
                judge_values.setdefault(qtype, []).append(value)
                row["judge_score"] = value
            except Exception as exc:
                judge_failures += 1
                logger.warning("judge failed on question %s: %s", qid, exc)
                row["judge_score"] = None
        else:
            row["judge_score"] = None
        per_question[qid] = row

    def bundle(qtypes: Sequence[str]) -> dict[str, float | None]:
        r = aggregate_retrieval([j for qt in qtypes for j in retrieval.get(qt, [])])
        g = aggregate_generation([j for qt in qtypes for j in generation.get(qt, [])])
        values: dict[str, float | None] = {**r.values, **g.values}
        if judge is None:
            values["judge_score"] = None
        else:
            pool = [v for qt in qtypes for v in judge_values.get(qt, [])]
            values["judge_score"] = sum(pool) / len(pool) if pool else None
        return values

    all_types = sorted({q.qtype for q in rev.public_questions})
    out = MetricReport(
        revision=str(rev.version),
        overall=bundle(all_types),
        per_type={qt: bundle([qt]) for qt in all_types},
        per_question=per_question,
    )
    if judge is None:
        out.judge_note = "judgment-based metrics unavailable without a judge backend"
    elif judge_failures:
        out.skipped["judge_failures"] = judge_failures
        out.judge_note = f"partial judge coverage: {judge_failures} question(s) unrated"
    return out


def _score_one(rj: RetrievalJudgment, gj: GenerationJudgment) -> dict[str, float | None]:
    row: dict[str, float | None] = {
        "hit_rate": hit_rate(rj),
        "recall": recall(rj),
        "ndcg": ndcg(rj),
    }
    try:
        row["rouge_l"] = rouge_l(gj.candidate, gj.reference)
    except ValueError:
        row["rouge_l"] = None
    try:
        row["substring_match"] = substring_match(gj.candidate, gj.reference_segments)
    except ValueError:
        row["substring_match"] = None
    return row


__all__ = [
    "ALL_METRICS",
    "GENERATION_METRICS",
    "MetricReport",
    "RETRIEVAL_METRICS",
    "ValidationReport",
    "build_rag_judge_prompt",
    "load_rag_criteria",
    "score_submission",
    "validate_answers",
]
