"""Exhaustive enumeration of question-template subgraphs.

Four structural templates are supported. Simple takes one triplet; Set takes
a maximal fan-out of triplets sharing a relation and one endpoint; MultiHop
and Conditional take two triplets meeting at exactly one entity, differing
in which entity carries the answer.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .kg.types import Entity, KnowledgeGraph, Triplet, unification_key

ROLE_QUESTION = "question_slot"
ROLE_ANSWER = "answer_slot"
ROLE_SHARED = "shared"
ROLE_BRIDGE = "bridge"


class QuestionType(str, Enum):
    SIMPLE = "Simple"
    SET = "Set"
    MULTI_HOP = "MultiHop"
    CONDITIONAL = "Conditional"


@dataclass(frozen=True)
class EnumerationLimits:
    """Caps on enumeration output.

    ``max_set_fanout`` drops Set groups larger than the cap rather than
    truncating them, so every emitted set answer stays complete.
    ``max_subgraphs`` keeps the first N subgraphs of the deterministic
    ordering.
    """

    max_set_fanout: int | None = None
    max_subgraphs: int | None = None

    def __post_init__(self):
        if self.max_set_fanout is not None and self.max_set_fanout < 2:
            raise ValueError("max_set_fanout must be >= 2")
        if self.max_subgraphs is not None and self.max_subgraphs < 0:
            raise ValueError("max_subgraphs must be >= 0")


def _order_key(t: Triplet) -> tuple:
    # (relation, object id) ordering per the determinism contract; subject id
    # and source doc break residual ties.
    return (unification_key(t.relation.normalized_label), t.object.id, t.subject.id, t.source_doc)


@dataclass(frozen=True)
class Subgraph:
    """A template match: ordered triplets plus an entity-id role map."""

    qtype: QuestionType
    triplets: tuple[Triplet, ...]
    roles: dict[str, str]

    def entities(self) -> dict[str, Entity]:
        out: dict[str, Entity] = {}
        for t in self.triplets:
            out.setdefault(t.subject.id, t.subject)
            out.setdefault(t.object.id, t.object)
        return out

    def entities_with_role(self, *roles: str) -> list[Entity]:
        """Entities holding any of the given roles, in triplet order."""
        out: list[Entity] = []
        seen: set[str] = set()
        for t in self.triplets:
            for ent in (t.subject, t.object):
                if ent.id in seen:
                    continue
                if self.roles.get(ent.id) in roles:
                    out.append(ent)
                    seen.add(ent.id)
        return out

    def source_docs(self) -> set[int]:
        return {t.source_doc for t in self.triplets}

    def check_template(self) -> None:
        """Assert the structural invariant of this subgraph's template."""
        ids = set(self.entities())
        if set(self.roles) != ids:
            raise AssertionError("role map does not cover exactly the subgraph entities")
        counts = {role: list(self.roles.values()).count(role) for role in set(self.roles.values())}
        if self.qtype is QuestionType.SIMPLE:
            assert len(self.triplets) == 1, "Simple takes exactly one triplet"
            assert counts == {ROLE_QUESTION: 1, ROLE_ANSWER: 1}
        elif self.qtype is QuestionType.SET:
            assert len(self.triplets) >= 2, "Set takes at least two triplets"
            rel_keys = {unification_key(t.relation.normalized_label) for t in self.triplets}
            assert len(rel_keys) == 1, "Set triplets share one relation"
            assert counts.get(ROLE_SHARED) == 1 and counts.get(ROLE_ANSWER, 0) >= 2
        elif self.qtype is QuestionType.MULTI_HOP:
            assert len(self.triplets) == 2
            self._assert_single_intersection()
            assert counts == {ROLE_BRIDGE: 1, ROLE_ANSWER: 1, ROLE_QUESTION: 1}
        elif self.qtype is QuestionType.CONDITIONAL:
            assert len(self.triplets) == 2
            self._assert_single_intersection()
            assert counts == {ROLE_ANSWER: 1, ROLE_QUESTION: 2}

    def _assert_single_intersection(self) -> None:
        first, second = self.triplets
        shared = {first.subject.id, first.object.id} & {second.subject.id, second.object.id}
        assert len(shared) == 1, "triplets must intersect at exactly one entity"


def _simple_subgraphs(g: KnowledgeGraph) -> list[Subgraph]:
    out = []
    for t in sorted(g.triplets, key=_order_key):
        out.append(
            Subgraph(
                qtype=QuestionType.SIMPLE,
                triplets=(t,),
                roles={t.subject.id: ROLE_QUESTION, t.object.id: ROLE_ANSWER},
            )
        )
    return out


def _set_subgraphs(g: KnowledgeGraph, max_fanout: int | None) -> list[Subgraph]:
    out = []
    for entity_id in sorted(g.entities):
        for side in ("subject", "object"):
            groups: dict[str, list[Triplet]] = {}
            for t in g.incident(entity_id):
                anchor = t.subject if side == "subject" else t.object
                if anchor.id != entity_id:
                    continue
                groups.setdefault(unification_key(t.relation.normalized_label), []).append(t)
            for rel_key in sorted(groups):
                members = sorted(groups[rel_key], key=_order_key)
                others = {(t.object if side == "subject" else t.subject).id for t in members}
                if len(others) < 2:
                    continue  # a fan-out needs at least two distinct answers
                if max_fanout is not None and len(members) > max_fanout:
                    continue  # oversize groups dropped whole, never truncated
                roles = {entity_id: ROLE_SHARED}
                roles.update({other: ROLE_ANSWER for other in others})
                out.append(Subgraph(qtype=QuestionType.SET, triplets=tuple(members), roles=roles))
    return out


def _intersecting_pairs(g: KnowledgeGraph) -> list[tuple[str, Triplet, Triplet]]:
    """All triplet pairs meeting at exactly one entity, found at that entity."""
    pairs = []
    for entity_id in sorted(g.entities):
        incident = sorted(g.incident(entity_id), key=_order_key)
        for i in range(len(incident)):
            for j in range(i + 1, len(incident)):
                first, second = incident[i], incident[j]
                shared = {first.subject.id, first.object.id} & {
                    second.subject.id,
                    second.object.id,
                }
                if shared == {entity_id}:
                    pairs.append((entity_id, first, second))
    return pairs


def _other_endpoint(t: Triplet, entity_id: str) -> Entity:
    return t.object if t.subject.id == entity_id else t.subject


def _multi_hop_subgraphs(g: KnowledgeGraph) -> list[Subgraph]:
    out = []
    for bridge_id, first, second in _intersecting_pairs(g):
        answer = _other_endpoint(first, bridge_id)
        question = _other_endpoint(second, bridge_id)
        out.append(
            Subgraph(
                qtype=QuestionType.MULTI_HOP,
                triplets=(first, second),
                roles={
                    bridge_id: ROLE_BRIDGE,
                    answer.id: ROLE_ANSWER,
                    question.id: ROLE_QUESTION,
                },
            )
        )
    return out


def _conditional_subgraphs(g: KnowledgeGraph) -> list[Subgraph]:
    out = []
    for shared_id, first, second in _intersecting_pairs(g):
        out.append(
            Subgraph(
                qtype=QuestionType.CONDITIONAL,
                triplets=(first, second),
                roles={
                    shared_id: ROLE_ANSWER,
                    _other_endpoint(first, shared_id).id: ROLE_QUESTION,
                    _other_endpoint(second, shared_id).id: ROLE_QUESTION,
                },
            )
        )
    return out


def enumerate_subgraphs(
    g: KnowledgeGraph,
    qtype: QuestionType,
    limits: EnumerationLimits | None = None,
) -> list[Subgraph]:
    """All template matches for one question type, deterministically ordered.

    The output under caps is always an ordered subset of the uncapped output:
    oversize Set groups are dropped whole and ``max_subgraphs`` keeps a
    prefix.
    """
    g.check_consistent()
    limits = limits or EnumerationLimits()
    if qtype is QuestionType.SIMPLE:
        subgraphs = _simple_subgraphs(g)
    elif qtype is QuestionType.SET:
        subgraphs = _set_subgraphs(g, limits.max_set_fanout)
    elif qtype is QuestionType.MULTI_HOP:
        subgraphs = _multi_hop_subgraphs(g)
    elif qtype is QuestionType.CONDITIONAL:
        subgraphs = _conditional_subgraphs(g)
    else:  # pragma: no cover - closed enumeration
        raise ValueError(f"unknown question type: {qtype!r}")
    if limits.max_subgraphs is not None:
        subgraphs = subgraphs[: limits.max_subgraphs]
    return subgraphs


def count_template_matches(g: KnowledgeGraph) -> dict[QuestionType, int]:
    """Uncapped match counts per question type."""
    return {qtype: len(enumerate_subgraphs(g, qtype)) for qtype in QuestionType}


__all__ = [
    "EnumerationLimits",
    "QuestionType",
    "ROLE_ANSWER",
    "ROLE_BRIDGE",
    "ROLE_QUESTION",
    "ROLE_SHARED",
    "Subgraph",
    "count_template_matches",
    "enumerate_subgraphs",
]
