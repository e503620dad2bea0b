"""Corpus ingestion: cleaning, content hashing, deduplication, diffing."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence


@dataclass(frozen=True)
class RawDocument:
    source: str
    text: str


@dataclass
class DocumentRecord:
    """A cleaned corpus document with stable identity."""

    internal_id: int
    text: str
    source: str
    fetched_at: str
    content_hash: str
    public_id: int | None = None


def clean_text(raw: str) -> str:
    """Default cleaner: normalize newlines, strip line tails and outer space."""
    unified = raw.replace("\r\n", "\n").replace("\r", "\n")
    lines = [line.rstrip() for line in unified.split("\n")]
    return "\n".join(lines).strip()


def content_hash(cleaned: str) -> str:
    return hashlib.sha256(cleaned.encode("utf-8")).hexdigest()


@dataclass
class IngestReport:
    records: list[DocumentRecord]
    rejected: list[dict]  # per-item: source, reason
    duplicates: int = 0


def ingest_documents(
    batch: Sequence[RawDocument],
    cleaner: Callable[[str], str] = clean_text,
    start_id: int = 0,
    known_hashes: Iterable[str] = (),
    fetched_at: str | None = None,
) -> IngestReport:
    """Clean a raw batch into records with fresh sequential internal ids.

    Documents that clean to nothing are rejected with a per-item report;
    exact duplicates (same content hash, within the batch or against
    ``known_hashes``) collapse to the first occurrence.
    """
    stamp = fetched_at or datetime.now(timezone.utc).isoformat(timespec="seconds")
    seen: set[str] = set(known_hashes)
    report = IngestReport(records=[], rejected=[])
    next_id = start_id
    for item in batch:
        cleaned = cleaner(item.text)
        if not cleaned:
            report.rejected.append({"source": item.source, "reason": "empty after cleaning"})
            continue
        digest = content_hash(cleaned)
        if digest in seen:
            report.duplicates += 1
            continue
        seen.add(digest)
        report.records.append(
            DocumentRecord(
                internal_id=next_id,
                text=cleaned,
                source=item.source,
                fetched_at=stamp,
                content_hash=digest,
            )
        )
        next_id += 1
    return report


def diff_corpus(prev: set[str], current: Sequence[DocumentRecord]) -> list[DocumentRecord]:
    """Records whose content hash is new relative to the previous lineage."""
    return [record for record in current if record.content_hash not in prev]


def load_corpus(path: str | Path) -> list[DocumentRecord]:
    records = []
    file = Path(path)
    if not file.exists():
        return records
    with open(file, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(DocumentRecord(**json.loads(line)))
    return records


def append_corpus(path: str | Path, records: Sequence[DocumentRecord]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(asdict(record), ensure_ascii=False, sort_keys=True) + "\n")


__all__ = [
    "DocumentRecord",
    "IngestReport",
    "RawDocument",
    "append_corpus",
    "clean_text",
    "content_hash",
    "diff_corpus",
    "ingest_documents",
    "load_corpus",
]
