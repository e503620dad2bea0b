"""Corpus ingestion and versioned revision storage."""
from .documents import (
    DocumentRecord,
    IngestReport,
    RawDocument,
    append_corpus,
    clean_text,
    content_hash,
    diff_corpus,
    ingest_documents,
    load_corpus,
)
from .revisions import (
    DatasetRevision,
    ENV_STORE,
    PrivateQARow,
    PublicView,
    QuestionRow,
    RevisionStore,
    SPLIT_NAMES,
    Version,
    assign_public_ids,
    build_revision,
    bump_version,
)

__all__ = [
    "DatasetRevision",
    "DocumentRecord",
    "ENV_STORE",
    "IngestReport",
    "PrivateQARow",
    "PublicView",
    "QuestionRow",
    "RawDocument",
    "RevisionStore",
    "SPLIT_NAMES",
    "Version",
    "append_corpus",
    "assign_public_ids",
    "build_revision",
    "bump_version",
    "clean_text",
    "content_hash",
    "diff_corpus",
    "ingest_documents",
    "load_corpus",
]
