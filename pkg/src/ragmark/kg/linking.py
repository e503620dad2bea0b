"""Entity linking: candidate lookup in a vector index and LLM-driven
normalization of triplet slots against those candidates."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..backends import EmbeddingBackend, RetryPolicy, TextBackend
from .types import Entity, Relation, Triplet

logger = logging.getLogger(__name__)

MAX_CANDIDATES = 5

SLOTS = ("subject", "relation", "object")


@dataclass(frozen=True)
class Candidate:
    """A knowledge-base entry proposed for one triplet slot."""

    kb_id: str
    name: str
    score: float


class VectorEntityIndex:
    """Vector index over knowledge-base entries.

    Similarity is cosine by default; ``dot`` is available for synthetic
    setups where raw token-overlap counts are wanted. Ties break on the
    lexicographically smallest knowledge-base id.
    """

    def __init__(self, embedder: EmbeddingBackend, similarity: str = "cosine"):
        if similarity not in ("cosine", "dot"):
            raise ValueError(f"unknown similarity: {similarity!r}")
        self.embedder = embedder
        self.similarity = similarity
        self.ids: list[str] = []
        self.names: list[str] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def build(
        cls,
        entries: Sequence[tuple[str, str]],
        embedder: EmbeddingBackend,
        similarity: str = "cosine",
    ) -> "VectorEntityIndex":
        index = cls(embedder, similarity)
        for kb_id, name in entries:
            index.ids.append(kb_id)
            index.names.append(name)
        if entries:
            index._matrix = np.asarray(embedder.embed([name for _, name in entries]), dtype=float)
        return index

    def _scores(self, vector: np.ndarray) -> np.ndarray:
        assert self._matrix is not None
        scores = self._matrix @ vector
        if self.similarity == "cosine":
            norms = np.linalg.norm(self._matrix, axis=1) * np.linalg.norm(vector)
            with np.errstate(invalid="ignore", divide="ignore"):
                scores = np.where(norms > 0, scores / norms, 0.0)
        return scores

    def match(self, text: str, limit: int = MAX_CANDIDATES) -> list[Candidate]:
        """Closest entries by descending similarity, at most ``limit``."""
        if not self.ids:
            return []
        vector = np.asarray(self.embedder.embed([text])[0], dtype=float)
        scores = self._scores(vector)
        order = sorted(range(len(self.ids)), key=lambda i: (-scores[i], self.ids[i]))
        return [
            Candidate(kb_id=self.ids[i], name=self.names[i], score=float(scores[i]))
            for i in order[:limit]
        ]


def match_entity_candidates(
    entity: Entity, index: VectorEntityIndex, limit: int = MAX_CANDIDATES
) -> list[Candidate]:
    """Up to five closest knowledge-base candidates for an entity."""
    return index.match(entity.normalized_form, limit=limit)


NORMALIZATION_PROMPT = (
    "A fact was extracted from the text below:\n"
    "  {triplet}\n\n"
    "Source text:\n{context}\n\n"
    "For each slot, decide whether to keep the original wording or replace it\n"
    "with one of the numbered knowledge-base candidates.\n"
    "{candidate_block}\n"
    "Answer with one line per slot, either 'slot: keep' or 'slot: <number>'.\n"
)

_DECISION_RE = re.compile(r"^(subject|relation|object)\s*:\s*(keep|\d+)\s*$", re.IGNORECASE)


@dataclass
class SlotDecision:
    slot: str
    original: str
    candidates: list[Candidate]
    choice: str  # "keep", "candidate:<kb_id>", "declined_self_loop" or "failed"
    adopted: Candidate | None = None


@dataclass
class NormalizationRecord:
    """Audit entry for one triplet normalization."""

    triplet: str
    decisions: list[SlotDecision] = field(default_factory=list)
    outcome: str = "ok"  # "ok" or "resolver_failed"
    flagged: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "triplet": self.triplet,
                "outcome": self.outcome,
                "flagged": self.flagged,
                "decisions": [
                    {
                        "slot": d.slot,
                        "original": d.original,
                        "candidates": [[c.kb_id, c.name] for c in d.candidates],
                        "choice": d.choice,
                    }
                    for d in self.decisions
                ],
            },
            ensure_ascii=False,
            sort_keys=True,
        )


class NormalizationAudit:
    """Append-only log of normalization decisions, persistable as JSON lines."""

    def __init__(self):
        self.records: list[NormalizationRecord] = []

    def add(self, record: NormalizationRecord) -> None:
        self.records.append(record)

    def save(self, path: str | Path) -> None:
        with open(path, "a", encoding="utf-8") as fh:
            for record in self.records:
                fh.write(record.to_json() + "\n")


def _candidate_block(cands: dict[str, list[Candidate]], triplet: Triplet) -> str:
    lines = []
    originals = {
        "subject": triplet.subject.normalized_form,
        "relation": triplet.relation.normalized_label,
        "object": triplet.object.normalized_form,
    }
    for slot in SLOTS:
        lines.append(f"{slot} (original: {originals[slot]}):")
        slot_cands = cands.get(slot, [])
        if not slot_cands:
            lines.append("  (no candidates)")
        for num, cand in enumerate(slot_cands, start=1):
            lines.append(f"  {num}. {cand.name} [{cand.kb_id}]")
    return "\n".join(lines)


def _parse_decisions(payload: str) -> dict[str, str]:
    decisions: dict[str, str] = {}
    for line in payload.splitlines():
        m = _DECISION_RE.match(line.strip())
        if m:
            decisions[m.group(1).lower()] = m.group(2).lower()
    if set(decisions) != set(SLOTS):
        raise ValueError(f"resolver answered for slots {sorted(decisions)}, need {list(SLOTS)}")
    return decisions


def normalize_triplet(
    triplet: Triplet,
    cands: dict[str, list[Candidate]],
    resolver: TextBackend,
    context: str,
    audit: NormalizationAudit | None = None,
    retry: RetryPolicy | None = None,
) -> Triplet:
    """Resolve each slot to the original form or exactly one candidate.

    Adopting a candidate rewrites the slot's normalized form and records the
    knowledge-base id in ``kb_match``. Resolver failures leave the triplet
    untouched and flag the audit record. An adoption that would collapse
    subject and object into one entity is declined to preserve the no-self-
    loop invariant.
    """
    retry = retry or RetryPolicy()
    record = NormalizationRecord(triplet=triplet.render())
    prompt = NORMALIZATION_PROMPT.format(
        triplet=triplet.render(),
        context=context,
        candidate_block=_candidate_block(cands, triplet),
    )
    originals = {
        "subject": triplet.subject.normalized_form,
        "relation": triplet.relation.normalized_label,
        "object": triplet.object.normalized_form,
    }
    try:
        payload = retry.run(lambda: resolver.complete(prompt))
        raw_decisions = _parse_decisions(payload)
    except Exception as exc:
        logger.warning("normalization resolver failed, keeping triplet unnormalized: %s", exc)
        record.outcome = "resolver_failed"
        record.flagged = True
        for slot in SLOTS:
            record.decisions.append(
                SlotDecision(slot=slot, original=originals[slot], candidates=cands.get(slot, []), choice="failed")
            )
        if audit is not None:
            audit.add(record)
        return triplet

    adopted: dict[str, Candidate | None] = {}
    for slot in SLOTS:
        slot_cands = cands.get(slot, [])
        choice = raw_decisions[slot]
        picked: Candidate | None = None
        if choice != "keep":
            number = int(choice)
            if 1 <= number <= len(slot_cands):
                picked = slot_cands[number - 1]
        adopted[slot] = picked
        record.decisions.append(
            SlotDecision(
                slot=slot,
                original=originals[slot],
                candidates=slot_cands,
                choice="keep" if picked is None else f"candidate:{picked.kb_id}",
                adopted=picked,
            )
        )

    new_subject = triplet.subject
    new_object = triplet.object
    new_relation = triplet.relation
    if adopted["subject"] is not None:
        cand = adopted["subject"]
        new_subject = Entity(
            surface_form=triplet.subject.surface_form,
            normalized_form=cand.name,
            kb_match=cand.kb_id,
            aliases=set(triplet.subject.aliases) | {triplet.subject.surface_form},
        )
    if adopted["object"] is not None:
        cand = adopted["object"]
        new_object = Entity(
            surface_form=triplet.object.surface_form,
            normalized_form=cand.name,
            kb_match=cand.kb_id,
            aliases=set(triplet.object.aliases) | {triplet.object.surface_form},
        )
    if new_subject.id == new_object.id:
        # Adoption would merge the endpoints; keep the object slot original.
        for d in record.decisions:
            if d.slot == "object":
                d.choice = "declined_self_loop"
                d.adopted = None
        new_object = triplet.object
    if adopted["relation"] is not None:
        cand = adopted["relation"]
        new_relation = Relation(
            label=triplet.relation.label,
            normalized_label=cand.name,
            kb_match=cand.kb_id,
        )
    if audit is not None:
        audit.add(record)
    return replace(triplet, subject=new_subject, relation=new_relation, object=new_object)


__all__ = [
    "Candidate",
    "MAX_CANDIDATES",
    "NORMALIZATION_PROMPT",
    "NormalizationAudit",
    "NormalizationRecord",
    "SlotDecision",
    "VectorEntityIndex",
    "match_entity_candidates",
    "normalize_triplet",
]
