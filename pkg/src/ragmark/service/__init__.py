"""Evaluation portal: scoring against private splits, approval, results ledger."""
from .app import ENV_ADMIN_TOKEN, ServiceConfig, create_app
from .evaluation import (
    DecisionConflictError,
    EvaluationRecord,
    LedgerEntry,
    RegisteredBaseline,
    RESULT_STATUSES,
    ResultStore,
    ResultsLedger,
    aggregate_actual_versions,
    approve_and_publish,
    auto_evaluate,
    evaluate_submission,
    new_record,
    result_payload,
    split_metrics,
    validate_submission,
)

__all__ = [
    "DecisionConflictError",
    "ENV_ADMIN_TOKEN",
    "EvaluationRecord",
    "LedgerEntry",
    "RESULT_STATUSES",
    "RegisteredBaseline",
    "ResultStore",
    "ResultsLedger",
    "ServiceConfig",
    "aggregate_actual_versions",
    "approve_and_publish",
    "auto_evaluate",
    "create_app",
    "evaluate_submission",
    "new_record",
    "result_payload",
    "split_metrics",
    "validate_submission",
]
