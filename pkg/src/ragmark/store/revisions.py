"""Versioned benchmark revisions: split construction, ID obfuscation,
serialization, and the append-only release manifest.

A revision is four split files. The two public splits expose obfuscated
document ids and answer-free questions; the two private splits hold the
id mapping and the canonical answers and stay service-side. Sandbox
revisions reuse the same format with every split public.
"""
from __future__ import annotations

import hashlib
import json
import os
import random
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from ..qagen import QAPair
from ..sampling import QuestionType
from .documents import DocumentRecord

ENV_STORE = "RAGMARK_STORE"
SPLIT_NAMES = ("public_texts", "public_questions", "private_mapping", "private_qa")

_VERSION_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)$")


@dataclass(frozen=True, order=True)
class Version:
    major: int
    minor: int
    patch: int

    @classmethod
    def parse(cls, text: str) -> "Version":
        m = _VERSION_RE.match(text.strip())
        if not m:
            raise ValueError(f"unparseable version: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)), int(m.group(3)))

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"


def bump_version(latest: Version | str) -> Version:
    """Release rule: increment the minor segment, reset patch."""
    if isinstance(latest, str):
        latest = Version.parse(latest)
    return Version(latest.major, latest.minor + 1, 0)


def assign_public_ids(records: Sequence[DocumentRecord], seed: int) -> dict[int, int]:
    """Seeded pseudorandom bijection internal_id -> 0..n−1.

    The mapping must live only in the private split; its whole point is that
    public ordering says nothing about internal ordering.
    """
    internal_ids = [r.internal_id for r in records]
    if len(set(internal_ids)) != len(internal_ids):
        raise ValueError("duplicate internal_ids in record batch")
    permutation = list(range(len(records)))
    random.Random(seed).shuffle(permutation)
    return {internal: permutation[i] for i, internal in enumerate(sorted(internal_ids))}


@dataclass
class QuestionRow:
    question_id: str
    question: str
    qtype: str


@dataclass
class PrivateQARow:
    question_id: str
    answer: str
    answer_entities: list[str]
    relevant_internal_ids: list[int]


@dataclass
class PublicView:
    """The two user-visible splits of a revision."""

    version: Version
    texts: list[tuple[int, str]]
    questions: list[QuestionRow]


@dataclass
class DatasetRevision:
    """One immutable benchmark snapshot: four splits plus its version."""

    version: Version
    public_texts: list[tuple[int, str]] = field(default_factory=list)
    public_questions: list[QuestionRow] = field(default_factory=list)
    private_mapping: list[tuple[int, int]] = field(default_factory=list)
    private_qa: list[PrivateQARow] = field(default_factory=list)

    def mapping(self) -> dict[int, int]:
        return dict(self.private_mapping)

    def public_view(self) -> PublicView:
        return PublicView(
            version=self.version,
            texts=list(self.public_texts),
            questions=list(self.public_questions),
        )

    def validate(self) -> None:
        public_ids = [pid for pid, _ in self.public_texts]
        if len(set(public_ids)) != len(public_ids):
            raise ValueError("duplicate public_id in public_texts")
        mapping_publics = [pub for _, pub in self.private_mapping]
        if sorted(mapping_publics) != sorted(public_ids):
            raise ValueError("private_mapping must map onto public_texts ids exactly once each")
        internals = [internal for internal, _ in self.private_mapping]
        if len(set(internals)) != len(internals):
            raise ValueError("duplicate internal_id in private_mapping")
        mapping = self.mapping()
        public_set = set(public_ids)
        qa_by_id = {row.question_id: row for row in self.private_qa}
        if sorted(qa_by_id) != sorted(q.question_id for q in self.public_questions):
            raise ValueError("public_questions and private_qa must cover the same question ids")
        for row in self.private_qa:
            for internal in row.relevant_internal_ids:
                if internal not in mapping:
                    raise ValueError(
                        f"question {row.question_id}: relevant internal id {internal} not in private_mapping"
                    )
                if mapping[internal] not in public_set:
                    raise ValueError(
                        f"question {row.question_id}: mapped public id {mapping[internal]} missing from public_texts"
                    )
        for q in self.public_questions:
            answer = qa_by_id[q.question_id].answer
            if answer and answer.casefold() in q.question.casefold():
                raise ValueError(f"question {q.question_id} leaks its canonical answer")

    # ---- serialization: schema-headed tab-separated splits ----------------

    def to_split_texts(self) -> dict[str, str]:
        splits = {
            "public_texts": (
                ("public_id", "text"),
                [(pid, text) for pid, text in self.public_texts],
            ),
            "public_questions": (
                ("question_id", "question", "qtype"),
                [(q.question_id, q.question, q.qtype) for q in self.public_questions],
            ),
            "private_mapping": (
                ("internal_id", "public_id"),
                [(internal, public) for internal, public in self.private_mapping],
            ),
            "private_qa": (
                ("question_id", "answer", "answer_entities", "relevant_internal_ids"),
                [
                    (r.question_id, r.answer, r.answer_entities, r.relevant_internal_ids)
                    for r in self.private_qa
                ],
            ),
        }
        out = {}
        for name, (columns, rows) in splits.items():
            lines = [
                f"# split: {name}",
                f"# revision: {self.version}",
                "# columns: " + "\t".join(columns),
            ]
            for row in rows:
                lines.append("\t".join(json.dumps(cell, ensure_ascii=False, sort_keys=True) for cell in row))
            out[name] = "\n".join(lines) + "\n"
        return out

    @classmethod
    def from_split_texts(cls, texts: Mapping[str, str]) -> "DatasetRevision":
        missing = [name for name in SPLIT_NAMES if name not in texts]
        if missing:
            raise ValueError(f"missing splits: {', '.join(missing)}")
        parsed: dict[str, list[list]] = {}
        version: Version | None = None
        for name in SPLIT_NAMES:
            lines = texts[name].splitlines()
            if len(lines) < 3 or not lines[0].startswith("# split: ") or not lines[2].startswith("# columns: "):
                raise ValueError(f"split {name}: malformed schema header")
            header_name = lines[0][len("# split: ") :].strip()
            if header_name != name:
                raise ValueError(f"split {name}: header names {header_name!r}")
            split_version = Version.parse(lines[1][len("# revision: ") :].strip())
            if version is not None and split_version != version:
                raise ValueError(f"split {name}: version {split_version} disagrees with {version}")
            version = split_version
            parsed[name] = [
                [json.loads(cell) for cell in line.split("\t")] for line in lines[3:] if line
            ]
        assert version is not None
        rev = cls(
            version=version,
            public_texts=[(int(pid), text) for pid, text in parsed["public_texts"]],
            public_questions=[QuestionRow(*row) for row in parsed["public_questions"]],
            private_mapping=[(int(a), int(b)) for a, b in parsed["private_mapping"]],
            private_qa=[PrivateQARow(*row) for row in parsed["private_qa"]],
        )
        return rev


def build_revision(
    testset: Mapping[QuestionType, Sequence[QAPair]],
    docs: Sequence[DocumentRecord],
    latest: Version | str,
    seed: int,
) -> DatasetRevision:
    """Assemble the four splits from a finalized test set and its documents.

    Question ids are decimal strings counting from "0" across the four types
    in fixed type order. Relevant documents are each pair's source documents,
    kept as internal ids in the private split only.
    """
    by_internal = {d.internal_id: d for d in docs}
    mapping = assign_public_ids(docs, seed)
    version = bump_version(latest)
    rev = DatasetRevision(version=version)
    rev.public_texts = sorted(
        ((mapping[d.internal_id], d.text) for d in docs), key=lambda row: row[0]
    )
    rev.private_mapping = sorted(mapping.items())
    counter = 0
    for qt in QuestionType:
        for qa in testset.get(qt, ()):  # finalized pools arrive presorted
            qid = str(counter)
            counter += 1
            for internal in sorted(qa.source_docs):
                if internal not in by_internal:
                    raise ValueError(
                        f"question {qid} ({qa.pair_id or 'unnamed pair'}) references "
                        f"missing document {internal}"
                    )
            rev.public_questions.append(
                QuestionRow(question_id=qid, question=qa.question, qtype=qt.value)
            )
            rev.private_qa.append(
                PrivateQARow(
                    question_id=qid,
                    answer=qa.answer,
                    answer_entities=[e.normalized_form for e in qa.answer_entities],
                    relevant_internal_ids=sorted(qa.source_docs),
                )
            )
    if not rev.public_questions:
        raise ValueError("refusing to build a revision with an empty test set")
    rev.validate()
    return rev


class RevisionStore:
    """File layout and manifest handling under a storage root.

    Layout: revisions/<version>/<split>.tsv, sandbox/<version>/<split>.tsv,
    manifest.jsonl (append-only), corpus.jsonl (ingested documents).
    """

    def __init__(self, root: str | Path | None = None):
        resolved = root or os.environ.get(ENV_STORE)
        if not resolved:
            raise ValueError(f"no storage root: pass one or set {ENV_STORE}")
        self.root = Path(resolved)

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.jsonl"

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus.jsonl"

    def revision_dir(self, version: Version | str, sandbox: bool = False) -> Path:
        return self.root / ("sandbox" if sandbox else "revisions") / str(version)

    def write(self, rev: DatasetRevision, sandbox: bool = False) -> Path:
        """Serialize a revision immutably and append it to the manifest."""
        rev.validate()
        target = self.revision_dir(rev.version, sandbox)
        if target.exists():
            raise FileExistsError(f"revision {rev.version} already released; revisions are immutable")
        target.mkdir(parents=True)
        texts = rev.to_split_texts()
        digests = {}
        for name in SPLIT_NAMES:
            data = texts[name].encode("utf-8")
            (target / f"{name}.tsv").write_bytes(data)
            digests[name] = hashlib.sha256(data).hexdigest()
        entry = {
            "version": str(rev.version),
            "sandbox": sandbox,
            "released_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "content_roots": digests,
            "question_count": len(rev.public_questions),
            "document_count": len(rev.public_texts),
        }
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.manifest_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
        return target

    def read(self, version: Version | str, sandbox: bool = False) -> DatasetRevision:
        target = self.revision_dir(version, sandbox)
        if not target.exists():
            raise FileNotFoundError(f"no {'sandbox ' if sandbox else ''}revision {version} under {self.root}")
        texts = {name: (target / f"{name}.tsv").read_text(encoding="utf-8") for name in SPLIT_NAMES}
        rev = DatasetRevision.from_split_texts(texts)
        rev.validate()
        return rev

    def read_public(self, version: Version | str, sandbox: bool = False) -> PublicView:
        """Load only the two public splits, the way a submitting user would."""
        target = self.revision_dir(version, sandbox)
        if not target.exists():
            raise FileNotFoundError(f"no revision {version} under {self.root}")
        texts_lines = (target / "public_texts.tsv").read_text(encoding="utf-8").splitlines()
        questions_lines = (target / "public_questions.tsv").read_text(encoding="utf-8").splitlines()
        parsed_version = Version.parse(texts_lines[1][len("# revision: ") :].strip())
        texts = [
            (int(json.loads(a)), json.loads(b))
            for a, b in (line.split("\t") for line in texts_lines[3:] if line)
        ]
        questions = [
            QuestionRow(*(json.loads(cell) for cell in line.split("\t")))
            for line in questions_lines[3:]
            if line
        ]
        return PublicView(version=parsed_version, texts=texts, questions=questions)

    def manifest_entries(self) -> list[dict]:
        if not self.manifest_path.exists():
            return []
        with open(self.manifest_path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def latest_version(self, sandbox: bool = False) -> Version | None:
        versions = [
            Version.parse(e["version"])
            for e in self.manifest_entries()
            if bool(e.get("sandbox")) == sandbox
        ]
        return max(versions) if versions else None


__all__ = [
    "DatasetRevision",
    "ENV_STORE",
    "PrivateQARow",
    "PublicView",
    "QuestionRow",
    "RevisionStore",
    "SPLIT_NAMES",
    "Version",
    "assign_public_ids",
    "build_revision",
    "bump_version",
]
