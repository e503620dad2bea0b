"""The reference RAG pipeline: retrieve, prompt, generate, package, score."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from ..backends import EmbeddingBackend, RetryPolicy, TextBackend
from ..scoring import MetricReport, score_submission, validate_answers
from ..store.revisions import DatasetRevision, PublicView
from .chunking import chunk_documents
from .prompts import PromptSpec, build_answer_prompt
from .retrieval import DEFAULT_K, build_index, retrieve_top_k

logger = logging.getLogger(__name__)

DEFAULT_RESPONSE_CAP = 4000  # characters; stands in for a token cap


@dataclass
class SubmissionAnswer:
    found_ids: list[int]
    model_answer: str


@dataclass
class Submission:
    """One system's answers for every question of a revision."""

    system_name: str
    retriever_name: str
    generator_name: str
    revision: str
    answers: dict[str, SubmissionAnswer]
    notes: dict[str, str] = field(default_factory=dict, compare=False)

    def to_payload(self) -> dict:
        return {
            "system_name": self.system_name,
            "retriever_name": self.retriever_name,
            "generator_name": self.generator_name,
            "revision": self.revision,
            "answers": {
                qid: {"found_ids": list(a.found_ids), "model_answer": a.model_answer}
                for qid, a in self.answers.items()
            },
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Submission":
        if not isinstance(payload, dict):
            raise ValueError("submission payload must be an object")
        problems = []
        for key in ("system_name", "retriever_name", "generator_name", "revision"):
            if not isinstance(payload.get(key), str) or not payload.get(key):
                problems.append(f"missing or non-text field: {key}")
        answers_raw = payload.get("answers")
        if not isinstance(answers_raw, dict):
            problems.append("missing or malformed answers map")
        if problems:
            raise ValueError("; ".join(problems))
        answers: dict[str, SubmissionAnswer] = {}
        for qid, item in answers_raw.items():
            # qids are decimal strings; never echo other submitted keys back
            label = qid if isinstance(qid, str) and qid.isdigit() else "<non-numeric id>"
            if not isinstance(item, dict) or "found_ids" not in item or "model_answer" not in item:
                problems.append(f"question {label}: needs found_ids and model_answer")
                continue
            found = item["found_ids"]
            if not isinstance(found, list):
                problems.append(f"question {label}: found_ids must be a list")
                continue
            answers[str(qid)] = SubmissionAnswer(
                found_ids=list(found), model_answer=item["model_answer"]
            )
        if problems:
            raise ValueError("; ".join(problems))
        return cls(
            system_name=payload["system_name"],
            retriever_name=payload["retriever_name"],
            generator_name=payload["generator_name"],
            revision=payload["revision"],
            answers=answers,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_payload(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Submission":
        return cls.from_payload(json.loads(Path(path).read_text(encoding="utf-8")))


def run_baseline(
    view: PublicView,
    retriever: EmbeddingBackend,
    generator: TextBackend,
    spec: PromptSpec | None = None,
    k: int = DEFAULT_K,
    response_cap: int = DEFAULT_RESPONSE_CAP,
    system_name: str = "baseline",
    retriever_name: str = "baseline-retriever",
    generator_name: str = "baseline-generator",
    similarity: str = "cosine",
    retry: RetryPolicy | None = None,
) -> Submission:
    """Answer every public question with the retrieve-then-generate baseline.

    Found ids are the public ids of retrieved chunks in rank order (a
    document retrieved twice appears twice). A backend failure on one
    question records an empty answer and a note; the run continues.
    """
    spec = spec or PromptSpec()
    retry = retry or RetryPolicy()
    chunks = chunk_documents(view.texts)
    index = build_index(chunks, retriever, spec, similarity=similarity, retry=retry)
    submission = Submission(
        system_name=system_name,
        retriever_name=retriever_name,
        generator_name=generator_name,
        revision=str(view.version),
        answers={},
    )
    for row in sorted(view.questions, key=lambda q: int(q.question_id)):
        found_ids: list[int] = []
        answer_text = ""
        try:
            top = retrieve_top_k(row.question, index, retriever, spec, k=k, retry=retry)
            found_ids = [c.doc_public_id for c in top]
        except Exception as exc:
            submission.notes[row.question_id] = f"retrieval failed: {exc}"
            logger.warning("question %s: retrieval failed: %s", row.question_id, exc)
            top = []
        if row.question_id not in submission.notes:
            try:
                prompt = build_answer_prompt(row.question, top, spec)
                answer_text = retry.run(lambda p=prompt: generator.complete(p))[:response_cap]
            except Exception as exc:
                submission.notes[row.question_id] = f"generation failed: {exc}"
                logger.warning("question %s: generation failed: %s", row.question_id, exc)
                answer_text = ""
        submission.answers[row.question_id] = SubmissionAnswer(
            found_ids=found_ids, model_answer=answer_text
        )
    return submission


def local_evaluate(sub: Submission, sandbox: DatasetRevision, k: int = DEFAULT_K) -> MetricReport:
    """Score a submission against locally held sandbox splits.

    Produces the same numbers as the evaluation service on identical inputs,
    except judge metrics, which are marked explicitly unsupported here.
    """
    if sub.revision != str(sandbox.version):
        raise ValueError(
            f"submission targets revision {sub.revision}, sandbox is {sandbox.version}"
        )
    report = validate_answers(sub.answers, sandbox)
    if not report.ok:
        raise ValueError(f"submission invalid: {report.to_dict()}")
    result = score_submission(sub.answers, sandbox, k=k, judge=None)
    result.judge_note = "judgment-based metrics are not supported locally"
    return result


def submit(sub: Submission, portal_url: str, timeout: float = 60.0) -> dict:
    """POST a submission to the portal; returns the acknowledgement payload."""
    resp = httpx.post(f"{portal_url.rstrip('/')}/submissions", json=sub.to_payload(), timeout=timeout)
    resp.raise_for_status()
    return resp.json()


__all__ = [
    "DEFAULT_RESPONSE_CAP",
    "Submission",
    "SubmissionAnswer",
    "local_evaluate",
    "run_baseline",
    "submit",
]
