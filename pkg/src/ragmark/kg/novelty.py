"""Novelty filtering: drop facts the knowledge base already contains."""
from __future__ import annotations

import logging
from dataclasses import replace
from typing import Iterable, Protocol

from .types import Triplet

logger = logging.getLogger(__name__)


class KnowledgeBaseLookup(Protocol):
    """Membership test over knowledge-base triples, keyed by kb ids."""

    def contains(self, subject_kb: str, relation_kb: str, object_kb: str) -> bool: ...


class SetKnowledgeBase:
    """In-memory lookup backed by a set of (subject, relation, object) kb ids."""

    def __init__(self, triples: Iterable[tuple[str, str, str]] = ()):
        self.triples = set(triples)

    def add(self, subject_kb: str, relation_kb: str, object_kb: str) -> None:
        self.triples.add((subject_kb, relation_kb, object_kb))

    def contains(self, subject_kb: str, relation_kb: str, object_kb: str) -> bool:
        return (subject_kb, relation_kb, object_kb) in self.triples


def filter_novel(triplets: Iterable[Triplet], kb: KnowledgeBaseLookup) -> list[Triplet]:
    """Keep triplets absent from the knowledge base.

    A triplet is discarded only when all three slots resolved to kb entries
    and the kb holds that exact triple. Anything less leaves novelty in
    doubt, and doubtful facts are kept. A lookup failure also keeps the
    triplet, marked ``novelty_indeterminate`` instead of ``novel``.
    """
    kept: list[Triplet] = []
    for t in triplets:
        s_kb = t.subject.kb_match
        r_kb = t.relation.kb_match
        o_kb = t.object.kb_match
        if s_kb is not None and r_kb is not None and o_kb is not None:
            try:
                known = kb.contains(s_kb, r_kb, o_kb)
            except Exception as exc:
                logger.warning("kb lookup failed for %s: %s", t.render(), exc)
                kept.append(replace(t, novel=False, novelty_indeterminate=True))
                continue
            if known:
                continue
        kept.append(replace(t, novel=True, novelty_indeterminate=False))
    return kept


__all__ = ["KnowledgeBaseLookup", "SetKnowledgeBase", "filter_novel"]
