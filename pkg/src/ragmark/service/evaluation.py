"""Submission intake, scoring, approval flow and the published results ledger."""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping
from uuid import uuid4

from ..backends import JudgeBackend, RetryPolicy
from ..client.baseline import Submission, run_baseline
from ..client.prompts import PromptSpec
from ..client.retrieval import DEFAULT_K
from ..scoring import (
    GENERATION_METRICS,
    RETRIEVAL_METRICS,
    MetricReport,
    ValidationReport,
    score_submission,
    validate_answers,
)
from ..store.revisions import DatasetRevision, Version

RESULT_STATUSES = ("pending", "approved", "rejected")


class DecisionConflictError(RuntimeError):
    """Raised when a result that already left the pending state is decided again."""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def split_metrics(values: Mapping[str, float | None]) -> dict:
    """Group a flat metric map into retrieval and generation families."""
    return {
        "retrieval": {name: values[name] for name in RETRIEVAL_METRICS},
        "generation": {name: values[name] for name in GENERATION_METRICS},
    }


def result_payload(report: MetricReport) -> dict:
    """The wire shape of one evaluation: grouped metrics, no private content."""
    payload = split_metrics(report.overall)
    payload["per_type"] = {
        qtype: split_metrics(values) for qtype, values in sorted(report.per_type.items())
    }
    payload["skipped"] = dict(report.skipped)
    payload["judge_note"] = report.judge_note
    return payload


@dataclass
class EvaluationRecord:
    """One scored submission moving through pending -> approved/rejected."""

    result_id: str
    system_name: str
    retriever_name: str
    generator_name: str
    revision: str
    report: MetricReport
    status: str = "pending"
    submitted_at: str = field(default_factory=_now)
    decided_at: str | None = None
    auto: bool = False

    def __post_init__(self) -> None:
        if self.status not in RESULT_STATUSES:
            raise ValueError(f"unknown status: {self.status!r}")

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.system_name, self.retriever_name, self.generator_name, self.revision)

    def status_payload(self) -> dict:
        """Safe public view: names, status and metric numbers only."""
        return {
            "result_id": self.result_id,
            "status": self.status,
            "system_name": self.system_name,
            "retriever_name": self.retriever_name,
            "generator_name": self.generator_name,
            "revision": self.revision,
            "submitted_at": self.submitted_at,
            "decided_at": self.decided_at,
            "auto": self.auto,
            "metrics": result_payload(self.report),
        }


def validate_submission(sub: Submission, rev: DatasetRevision) -> ValidationReport:
    """Format gate before scoring: id coverage, id sanity, revision match."""
    report = validate_answers(sub.answers, rev)
    if sub.revision != str(rev.version):
        report.parse_errors.append(
            f"submission targets revision {sub.revision}, evaluated against {rev.version}"
        )
    return report


def evaluate_submission(
    sub: Submission,
    rev: DatasetRevision,
    judge: JudgeBackend | None = None,
    judge_instructions: Mapping[str, str] | None = None,
    k: int = DEFAULT_K,
    retry: RetryPolicy | None = None,
) -> MetricReport:
    """Score a validated submission against the revision's private splits."""
    if sub.revision != str(rev.version):
        raise ValueError(
            f"submission targets revision {sub.revision}, evaluated against {rev.version}"
        )
    return score_submission(
        sub.answers, rev, k=k, judge=judge, judge_instructions=judge_instructions, retry=retry
    )


def new_record(sub: Submission, report: MetricReport, auto: bool = False) -> EvaluationRecord:
    return EvaluationRecord(
        result_id=uuid4().hex,
        system_name=sub.system_name,
        retriever_name=sub.retriever_name,
        generator_name=sub.generator_name,
        revision=sub.revision,
        report=report,
        auto=auto,
    )


class ResultStore:
    """In-memory registry of evaluation records.

    Every submission gets a fresh record; resubmitting the same
    (system, retriever, generator, revision) key adds a new pending entry
    and never touches previously decided ones.
    """

    def __init__(self) -> None:
        self._records: dict[str, EvaluationRecord] = {}
        self._lock = threading.Lock()

    def add(self, record: EvaluationRecord) -> None:
        with self._lock:
            if record.result_id in self._records:
                raise ValueError(f"result id already registered: {record.result_id}")
            self._records[record.result_id] = record

    def get(self, result_id: str) -> EvaluationRecord:
        with self._lock:
            if result_id not in self._records:
                raise LookupError(f"unknown result id: {result_id}")
            return self._records[result_id]

    def pending(self) -> list[EvaluationRecord]:
        with self._lock:
            rows = [r for r in self._records.values() if r.status == "pending"]
        return sorted(rows, key=lambda r: (r.submitted_at, r.result_id))

    def records_for_key(self, key: tuple[str, str, str, str]) -> list[EvaluationRecord]:
        with self._lock:
            rows = [r for r in self._records.values() if r.key == key]
        return sorted(rows, key=lambda r: (r.submitted_at, r.result_id))

    def decide(self, result_id: str, decision: str, ledger: "ResultsLedger") -> EvaluationRecord:
        """Apply an admin decision; ledger append happens under the same lock."""
        if decision not in ("approve", "reject"):
            raise ValueError(f"decision must be approve or reject, got {decision!r}")
        with self._lock:
            if result_id not in self._records:
                raise LookupError(f"unknown result id: {result_id}")
            record = self._records[result_id]
            if record.status != "pending":
                raise DecisionConflictError(
                    f"result {result_id} already {record.status}, decisions are final"
                )
            if decision == "approve":
                record.status = "approved"
                record.decided_at = _now()
                ledger.append(LedgerEntry.from_record(record))
            else:
                record.status = "rejected"
                record.decided_at = _now()
            return record


def approve_and_publish(
    store: ResultStore, result_id: str, decision: str, ledger: "ResultsLedger"
) -> EvaluationRecord:
    """Decide a pending result. Approval appends to the ledger; rejection only
    records the status. A second decision for the same result errors."""
    return store.decide(result_id, decision, ledger)


@dataclass(frozen=True)
class LedgerEntry:
    """One published (approved) evaluation."""

    result_id: str
    system_name: str
    retriever_name: str
    generator_name: str
    revision: str
    metrics: dict
    approved_at: str
    auto: bool = False

    @classmethod
    def from_record(cls, record: EvaluationRecord) -> "LedgerEntry":
        return cls(
            result_id=record.result_id,
            system_name=record.system_name,
            retriever_name=record.retriever_name,
            generator_name=record.generator_name,
            revision=record.revision,
            metrics=result_payload(record.report),
            approved_at=record.decided_at or _now(),
            auto=record.auto,
        )

    def to_dict(self) -> dict:
        return {
            "result_id": self.result_id,
            "system_name": self.system_name,
            "retriever_name": self.retriever_name,
            "generator_name": self.generator_name,
            "revision": self.revision,
            "metrics": self.metrics,
            "approved_at": self.approved_at,
            "auto": self.auto,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "LedgerEntry":
        return cls(
            result_id=raw["result_id"],
            system_name=raw["system_name"],
            retriever_name=raw["retriever_name"],
            generator_name=raw["generator_name"],
            revision=raw["revision"],
            metrics=raw["metrics"],
            approved_at=raw["approved_at"],
            auto=raw.get("auto", False),
        )


class ResultsLedger:
    """Append-only record of approved results, one JSON object per line."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, entry: LedgerEntry) -> None:
        line = json.dumps(entry.to_dict(), ensure_ascii=False, sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def entries(self, revision: str | None = None) -> list[LedgerEntry]:
        if not self.path.exists():
            return []
        rows = []
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = LedgerEntry.from_dict(json.loads(line))
                if revision is None or entry.revision == revision:
                    rows.append(entry)
        return rows


def _mean(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


def aggregate_actual_versions(entries: Iterable[LedgerEntry], n_recent: int = 3) -> list[dict]:
    """Aggregate view over recent revisions: for each system key, average its
    metrics over the N most recent revisions it has an approved result on.
    Multiple approved entries for one revision collapse to the newest."""
    if n_recent < 1:
        raise ValueError("n_recent must be at least 1")
    by_key: dict[tuple[str, str, str], dict[str, LedgerEntry]] = {}
    for entry in entries:
        key = (entry.system_name, entry.retriever_name, entry.generator_name)
        # ledger order is chronological, so later entries win per revision
        by_key.setdefault(key, {})[entry.revision] = entry
    rows = []
    for key in sorted(by_key):
        per_revision = by_key[key]
        recent = sorted(per_revision, key=Version.parse, reverse=True)[:n_recent]
        picked = [per_revision[rev] for rev in recent]
        row: dict = {
            "system_name": key[0],
            "retriever_name": key[1],
            "generator_name": key[2],
            "revisions": sorted(recent, key=Version.parse),
            "n_revisions": len(recent),
            "retrieval": {},
            "generation": {},
        }
        for name in RETRIEVAL_METRICS:
            row["retrieval"][name] = _mean([e.metrics["retrieval"][name] for e in picked])
        for name in GENERATION_METRICS:
            row["generation"][name] = _mean([e.metrics["generation"][name] for e in picked])
        rows.append(row)
    return rows


@dataclass(frozen=True)
class RegisteredBaseline:
    """A pre-approved pipeline the service may run on its own."""

    system_name: str
    retriever_name: str
    generator_name: str
    retriever: object
    generator: object
    prompt_spec: PromptSpec | None = None
    k: int = DEFAULT_K


def auto_evaluate(
    baseline: RegisteredBaseline,
    rev: DatasetRevision,
    judge: JudgeBackend | None = None,
    judge_instructions: Mapping[str, str] | None = None,
    retry: RetryPolicy | None = None,
) -> tuple[Submission, MetricReport]:
    """Run a registered baseline over the revision's public view and score it.

    Per-question backend hiccups are absorbed by the baseline runner; a dead
    backend (index build impossible) aborts the run by raising, leaving the
    caller to reschedule.
    """
    sub = run_baseline(
        rev.public_view(),
        baseline.retriever,
        baseline.generator,
        spec=baseline.prompt_spec,
        k=baseline.k,
        system_name=baseline.system_name,
        retriever_name=baseline.retriever_name,
        generator_name=baseline.generator_name,
        retry=retry,
    )
    report = evaluate_submission(
        sub, rev, judge=judge, judge_instructions=judge_instructions, retry=retry
    )
    return sub, report


__all__ = [
    "DecisionConflictError",
    "EvaluationRecord",
    "LedgerEntry",
    "RegisteredBaseline",
    "RESULT_STATUSES",
    "ResultStore",
    "ResultsLedger",
    "aggregate_actual_versions",
    "approve_and_publish",
    "auto_evaluate",
    "evaluate_submission",
    "new_record",
    "result_payload",
    "split_metrics",
    "validate_submission",
]
