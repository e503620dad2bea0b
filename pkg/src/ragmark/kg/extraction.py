"""Triplet extraction from documents through a text backend.

The backend answers with one fact per line in ``subject | relation | object``
form. Malformed lines are skipped and counted; a response that yields no
parseable line at all is treated as a malformed payload.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

from ..backends import MalformedOutputError, RetryPolicy, TextBackend
from .types import Entity, Relation, Triplet, unification_key

logger = logging.getLogger(__name__)

EXTRACTION_PROMPT = (
    "Extract factual subject | relation | object triplets from the text below.\n"
    "Write one triplet per line, fields separated by ' | '. Use entity names\n"
    "exactly as they appear in the text.\n\n"
    "Text:\n{text}\n\nTriplets:\n"
)


class SourceDocument(Protocol):
    """Anything carrying an internal document id and cleaned text."""

    internal_id: int
    text: str


@dataclass
class ParsedLines:
    facts: list[tuple[str, str, str]]
    malformed: int
    self_loops: int


def parse_triplet_lines(payload: str) -> ParsedLines:
    """Parse line-oriented backend output, counting rejected lines."""
    facts: list[tuple[str, str, str]] = []
    malformed = 0
    self_loops = 0
    for line in payload.splitlines():
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 3 or not all(parts):
            malformed += 1
            continue
        subject, relation, obj = parts
        if unification_key(subject) == unification_key(obj):
            self_loops += 1
            continue
        facts.append((subject, relation, obj))
    return ParsedLines(facts=facts, malformed=malformed, self_loops=self_loops)


def extract_triplets(
    doc: SourceDocument,
    extractor: TextBackend,
    retry: RetryPolicy | None = None,
) -> list[Triplet]:
    """Extract deduplicated triplets from one document.

    Entity surface forms are kept verbatim from the backend output and every
    triplet carries the document's internal id. Backend transport failures
    surface as BackendError after the bounded retry; a payload with lines but
    no parseable facts raises MalformedOutputError carrying the raw text.
    """
    if not doc.text.strip():
        return []
    retry = retry or RetryPolicy()
    prompt = EXTRACTION_PROMPT.format(text=doc.text)
    payload = retry.run(lambda: extractor.complete(prompt))
    parsed = parse_triplet_lines(payload)
    nonblank = [ln for ln in payload.splitlines() if ln.strip()]
    if nonblank and not parsed.facts and parsed.self_loops == 0:
        raise MalformedOutputError(
            f"no parseable triplet lines in backend output ({parsed.malformed} malformed)",
            raw=payload,
        )
    if parsed.malformed:
        logger.info("doc %d: skipped %d malformed triplet lines", doc.internal_id, parsed.malformed)

    triplets: list[Triplet] = []
    seen: set[tuple[str, str, str]] = set()
    for subject, relation, obj in parsed.facts:
        # Dedup on whitespace-normalized fields, keeping the first occurrence.
        key = (" ".join(subject.split()), " ".join(relation.split()), " ".join(obj.split()))
        if key in seen:
            continue
        seen.add(key)
        triplets.append(
            Triplet(
                subject=Entity(surface_form=subject),
                relation=Relation(label=relation),
                object=Entity(surface_form=obj),
                source_doc=doc.internal_id,
            )
        )
    return triplets


__all__ = ["EXTRACTION_PROMPT", "ParsedLines", "SourceDocument", "extract_triplets", "parse_triplet_lines"]
