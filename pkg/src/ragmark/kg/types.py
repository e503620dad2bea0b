"""Knowledge-graph domain types: entities, relations, triplets, the graph."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

SNAPSHOT_FORMAT = "kg-snapshot/1"


def unification_key(text: str) -> str:
    """Entity identity: lowercased, whitespace-collapsed normalized form."""
    return " ".join(text.casefold().split())


@dataclass
class Entity:
    """A graph node. ``id`` is the unification key of the normalized form."""

    surface_form: str
    normalized_form: str = ""
    kb_match: str | None = None
    aliases: set[str] = field(default_factory=set)

    def __post_init__(self):
        if not self.normalized_form:
            self.normalized_form = self.surface_form
        if self.surface_form and not self.normalized_form.strip():
            raise ValueError("normalized_form must be non-empty for a non-empty surface form")

    @property
    def id(self) -> str:
        return unification_key(self.normalized_form)


@dataclass
class Relation:
    label: str
    normalized_label: str = ""
    kb_match: str | None = None

    def __post_init__(self):
        if not self.normalized_label:
            self.normalized_label = self.label
        if not self.normalized_label.strip():
            raise ValueError("normalized_label must be non-empty")


@dataclass
class Triplet:
    """A subject-relation-object fact with document provenance."""

    subject: Entity
    relation: Relation
    object: Entity
    source_doc: int
    novel: bool = False
    novelty_indeterminate: bool = False

    def __post_init__(self):
        if self.subject.id == self.object.id:
            raise ValueError(f"self-loop triplet rejected: {self.subject.normalized_form!r}")

    def key(self) -> tuple[str, str, str, int]:
        """Identity used for deduplication and deterministic ordering."""
        return (
            self.subject.id,
            unification_key(self.relation.normalized_label),
            self.object.id,
            self.source_doc,
        )

    def render(self) -> str:
        return f"{self.subject.normalized_form} | {self.relation.normalized_label} | {self.object.normalized_form}"


class KnowledgeGraph:
    """Entity-unified triplet store with an adjacency index.

    Writes go through ``merge`` under a single-writer contract; concurrent
    reads are safe once merging is done. Entities with the same unification
    key collapse into one node whose aliases accumulate the surface variants.
    """

    def __init__(self):
        self.entities: dict[str, Entity] = {}
        self.triplets: list[Triplet] = []
        self.adjacency: dict[str, list[int]] = {}
        self._keys: set[tuple] = set()

    def __len__(self) -> int:
        return len(self.triplets)

    def __iter__(self) -> Iterator[Triplet]:
        return iter(self.triplets)

    def _intern(self, entity: Entity) -> Entity:
        existing = self.entities.get(entity.id)
        if existing is None:
            stored = Entity(
                surface_form=entity.surface_form,
                normalized_form=entity.normalized_form,
                kb_match=entity.kb_match,
                aliases=set(entity.aliases) | {entity.surface_form},
            )
            self.entities[stored.id] = stored
            return stored
        existing.aliases |= entity.aliases | {entity.surface_form}
        if existing.kb_match is None and entity.kb_match is not None:
            existing.kb_match = entity.kb_match
        return existing

    def merge(self, triplets: Iterable[Triplet]) -> int:
        """Add a batch of triplets, unifying entities. Returns count added.

        Duplicate facts (same subject, relation, object and source document)
        are ignored.
        """
        added = 0
        for t in triplets:
            key = t.key()
            if key in self._keys:
                continue
            subject = self._intern(t.subject)
            obj = self._intern(t.object)
            stored = replace(t, subject=subject, object=obj)
            index = len(self.triplets)
            self.triplets.append(stored)
            self._keys.add(key)
            self.adjacency.setdefault(subject.id, []).append(index)
            self.adjacency.setdefault(obj.id, []).append(index)
            added += 1
        return added

    def rebuild_adjacency(self) -> dict[str, list[int]]:
        """Recompute the adjacency index from the triplet list."""
        adjacency: dict[str, list[int]] = {}
        for index, t in enumerate(self.triplets):
            adjacency.setdefault(t.subject.id, []).append(index)
            adjacency.setdefault(t.object.id, []).append(index)
        return adjacency

    def check_consistent(self) -> None:
        """Verify endpoint membership and adjacency by rebuild-and-compare."""
        for t in self.triplets:
            if t.subject.id not in self.entities or t.object.id not in self.entities:
                raise AssertionError(f"triplet endpoint missing from entity set: {t.render()}")
        if self.rebuild_adjacency() != self.adjacency:
            raise AssertionError("stored adjacency differs from rebuilt index")

    def incident(self, entity_id: str) -> list[Triplet]:
        return [self.triplets[i] for i in self.adjacency.get(entity_id, [])]

    # Snapshot format: one JSON document with an entities section and a
    # triplets section, stable field order, entities sorted by id.
    def to_snapshot(self) -> str:
        entities = [
            {
                "id": e.id,
                "surface_form": e.surface_form,
                "normalized_form": e.normalized_form,
                "kb_match": e.kb_match,
                "aliases": sorted(e.aliases),
            }
            for e in sorted(self.entities.values(), key=lambda e: e.id)
        ]
        triplets = [
            {
                "subject": t.subject.id,
                "relation": {
                    "label": t.relation.label,
                    "normalized_label": t.relation.normalized_label,
                    "kb_match": t.relation.kb_match,
                },
                "object": t.object.id,
                "source_doc": t.source_doc,
                "novel": t.novel,
                "novelty_indeterminate": t.novelty_indeterminate,
            }
            for t in self.triplets
        ]
        doc = {"format": SNAPSHOT_FORMAT, "entities": entities, "triplets": triplets}
        return json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_snapshot(cls, text: str) -> "KnowledgeGraph":
        doc = json.loads(text)
        if doc.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"unsupported snapshot format: {doc.get('format')!r}")
        graph = cls()
        by_id: dict[str, Entity] = {}
        for row in doc["entities"]:
            entity = Entity(
                surface_form=row["surface_form"],
                normalized_form=row["normalized_form"],
                kb_match=row["kb_match"],
                aliases=set(row["aliases"]),
            )
            by_id[row["id"]] = entity
        for row in doc["triplets"]:
            relation = Relation(
                label=row["relation"]["label"],
                normalized_label=row["relation"]["normalized_label"],
                kb_match=row["relation"]["kb_match"],
            )
            graph.merge(
                [
                    Triplet(
                        subject=by_id[row["subject"]],
                        relation=relation,
                        object=by_id[row["object"]],
                        source_doc=row["source_doc"],
                        novel=row["novel"],
                        novelty_indeterminate=row.get("novelty_indeterminate", False),
                    )
                ]
            )
        return graph

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_snapshot(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeGraph":
        return cls.from_snapshot(Path(path).read_text(encoding="utf-8"))


__all__ = [
    "Entity",
    "KnowledgeGraph",
    "Relation",
    "SNAPSHOT_FORMAT",
    "Triplet",
    "unification_key",
]
