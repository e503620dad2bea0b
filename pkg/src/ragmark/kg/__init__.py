"""Knowledge-graph construction: extraction, linking, novelty, storage."""
from .extraction import EXTRACTION_PROMPT, ParsedLines, extract_triplets, parse_triplet_lines
from .linking import (
    Candidate,
    NormalizationAudit,
    VectorEntityIndex,
    match_entity_candidates,
    normalize_triplet,
)
from .novelty import KnowledgeBaseLookup, SetKnowledgeBase, filter_novel
from .types import Entity, KnowledgeGraph, Relation, Triplet, unification_key

__all__ = [
    "Candidate",
    "EXTRACTION_PROMPT",
    "Entity",
    "KnowledgeBaseLookup",
    "KnowledgeGraph",
    "NormalizationAudit",
    "ParsedLines",
    "Relation",
    "SetKnowledgeBase",
    "Triplet",
    "VectorEntityIndex",
    "extract_triplets",
    "filter_novel",
    "match_entity_candidates",
    "normalize_triplet",
    "parse_triplet_lines",
    "unification_key",
]
