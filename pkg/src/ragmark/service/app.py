"""HTTP portal: submission intake, status, published results, admin queue.

Response discipline: endpoints return names, statuses, version strings and
metric numbers. Canonical answers, id mappings and submitted answer text are
never serialized into any response, and error paths never echo free-form
request content back to the caller.
"""
from __future__ import annotations

import hmac
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from ..backends import JudgeBackend, RetryPolicy
from ..client.baseline import Submission
from ..client.retrieval import DEFAULT_K
from ..scoring import ValidationReport
from ..store.revisions import DatasetRevision, RevisionStore, Version
from .evaluation import (
    DecisionConflictError,
    ResultStore,
    ResultsLedger,
    aggregate_actual_versions,
    evaluate_submission,
    new_record,
    validate_submission,
)

ENV_ADMIN_TOKEN = "RAGMARK_ADMIN_TOKEN"


@dataclass
class ServiceConfig:
    """Where the service finds its data and how it scores."""

    store_root: str | Path | None = None
    ledger_path: str | Path | None = None
    admin_token: str | None = None
    judge: JudgeBackend | None = None
    judge_instructions: Mapping[str, str] | None = None
    aggregate_recent: int = 3
    k: int = DEFAULT_K
    retry: RetryPolicy | None = None

    def resolved_admin_token(self) -> str | None:
        return self.admin_token or os.environ.get(ENV_ADMIN_TOKEN)


def _sanitize_report(report: ValidationReport) -> dict:
    """Validation report shaped for the wire: ids and counts, no echoed values."""
    return {
        "ok": report.ok,
        "missing_ids": list(report.missing_ids),
        "extra_ids": [qid if qid.isdigit() else "<non-numeric id>" for qid in report.extra_ids],
        "non_integer_found": {qid: len(vals) for qid, vals in report.non_integer_found.items()},
        "unknown_public_ids": {
            qid: list(vals) for qid, vals in report.unknown_public_ids.items()
        },
        "parse_errors": list(report.parse_errors),
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    revisions = RevisionStore(config.store_root)
    ledger_path = Path(config.ledger_path) if config.ledger_path else revisions.root / "results.jsonl"
    ledger = ResultsLedger(ledger_path)
    results = ResultStore()
    cache: dict[str, DatasetRevision] = {}

    app = FastAPI(title="ragmark evaluation service", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.revisions = revisions
    app.state.ledger = ledger
    app.state.results = results

    def load_revision(version: Version) -> DatasetRevision:
        key = str(version)
        if key not in cache:
            try:
                cache[key] = revisions.read(version)
            except FileNotFoundError:
                raise HTTPException(status_code=404, detail=f"unknown revision: {key}")
        return cache[key]

    app.state.load_revision = load_revision

    def parse_version_or_422(raw: object) -> Version:
        if not isinstance(raw, str):
            raise HTTPException(status_code=422, detail="revision must be a version string")
        try:
            return Version.parse(raw)
        except ValueError:
            raise HTTPException(
                status_code=422, detail="revision is not a MAJOR.MINOR.PATCH string"
            )

    async def read_json_body(request: Request) -> dict:
        try:
            payload = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise HTTPException(status_code=400, detail="request body must be JSON")
        if not isinstance(payload, dict):
            raise HTTPException(status_code=400, detail="request body must be a JSON object")
        return payload

    def require_admin(request: Request) -> None:
        token = config.resolved_admin_token()
        if not token:
            raise HTTPException(status_code=403, detail="admin access is not configured")
        header = request.headers.get("authorization", "")
        scheme, _, presented = header.partition(" ")
        if scheme.lower() != "bearer" or not hmac.compare_digest(presented.strip(), token):
            raise HTTPException(status_code=401, detail="admin token required")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/revisions")
    def list_revisions() -> dict:
        rows = [
            {
                "version": entry["version"],
                "sandbox": entry.get("sandbox", False),
                "counts": entry.get("counts", {}),
            }
            for entry in revisions.manifest_entries()
        ]
        return {"revisions": rows}

    @app.post("/submissions", status_code=201)
    async def submit(request: Request) -> dict:
        payload = await read_json_body(request)
        try:
            sub = Submission.from_payload(payload)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={"parse_errors": str(exc).split("; ")})
        version = parse_version_or_422(sub.revision)
        rev = load_revision(version)
        report = validate_submission(sub, rev)
        if not report.ok:
            raise HTTPException(status_code=422, detail={"validation": _sanitize_report(report)})
        metric_report = evaluate_submission(
            sub,
            rev,
            judge=config.judge,
            judge_instructions=config.judge_instructions,
            k=config.k,
            retry=config.retry,
        )
        record = new_record(sub, metric_report)
        results.add(record)
        return {"result_id": record.result_id, "status": record.status}

    @app.get("/submissions/{result_id}")
    def submission_status(result_id: str) -> dict:
        try:
            record = results.get(result_id)
        except LookupError:
            raise HTTPException(status_code=404, detail="unknown result id")
        return record.status_payload()

    @app.get("/results")
    def list_results(request: Request) -> dict:
        raw = request.query_params.get("revision")
        revision = str(parse_version_or_422(raw)) if raw is not None else None
        return {"results": [entry.to_dict() for entry in ledger.entries(revision=revision)]}

    @app.get("/results/aggregate")
    def aggregate(request: Request) -> dict:
        raw = request.query_params.get("n")
        n_recent = config.aggregate_recent
        if raw is not None:
            if not raw.isdigit() or not 1 <= int(raw) <= 100:
                raise HTTPException(
                    status_code=422, detail="n must be a whole number between 1 and 100"
                )
            n_recent = int(raw)
        rows = aggregate_actual_versions(ledger.entries(), n_recent=n_recent)
        return {"aggregates": rows, "n_recent": n_recent}

    @app.get("/admin/pending")
    def admin_pending(request: Request) -> dict:
        require_admin(request)
        return {"pending": [record.status_payload() for record in results.pending()]}

    @app.post("/admin/decide")
    async def admin_decide(request: Request) -> dict:
        require_admin(request)
        payload = await read_json_body(request)
        result_id = payload.get("result_id")
        decision = payload.get("decision")
        if not isinstance(result_id, str):
            raise HTTPException(status_code=422, detail="result_id must be a string")
        if decision not in ("approve", "reject"):
            raise HTTPException(status_code=422, detail="decision must be approve or reject")
        try:
            record = results.decide(result_id, decision, ledger)
        except LookupError:
            raise HTTPException(status_code=404, detail="unknown result id")
        except DecisionConflictError:
            raise HTTPException(status_code=409, detail="result already decided")
        return record.status_payload()

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception) -> JSONResponse:
        # never leak internals (paths, answers, stack frames) through a 500
        return JSONResponse(status_code=500, content={"detail": "internal error"})

    return app


__all__ = ["ENV_ADMIN_TOKEN", "ServiceConfig", "create_app"]
