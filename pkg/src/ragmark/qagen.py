"""Question/answer generation from typed subgraphs.

A subgraph is rendered into a locale-specific prompt; the generation backend
replies with ``Question:``/``Answer:`` lines. The question type and answer
entities come from the subgraph alone, never from the backend.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .backends import MalformedOutputError, RetryPolicy, TextBackend
from .kg.types import Entity
from .sampling import (
    ROLE_ANSWER,
    ROLE_BRIDGE,
    ROLE_QUESTION,
    ROLE_SHARED,
    QuestionType,
    Subgraph,
)

MAX_REGEN_ATTEMPTS = 2


class MalformedGenerationError(MalformedOutputError):
    """Backend reply lacked a non-empty question or answer."""


@dataclass
class QAPair:
    """A generated question with its canonical answer and provenance."""

    question: str
    answer: str
    answer_entities: list[Entity]
    qtype: QuestionType
    subgraph: Subgraph
    source_docs: set[int]
    verdicts: list = field(default_factory=list)
    pair_id: str = ""

    def __post_init__(self):
        if not self.question.strip() or not self.answer.strip():
            raise ValueError("question and answer must be non-empty")


_SECTION_RE = re.compile(r"^\[(\w+)\]\s*$")


class PromptCatalog:
    """Locale-keyed generation prompt templates, one section per qtype."""

    def __init__(self, sections: dict[str, str]):
        missing = [qt.value for qt in QuestionType if qt.value not in sections]
        if missing:
            raise ValueError(f"prompt catalog missing sections: {', '.join(missing)}")
        self.sections = sections

    @classmethod
    def parse(cls, text: str) -> "PromptCatalog":
        sections: dict[str, list[str]] = {}
        current: list[str] | None = None
        for line in text.splitlines():
            if line.startswith("#") and current is None:
                continue
            m = _SECTION_RE.match(line)
            if m:
                current = sections.setdefault(m.group(1), [])
                continue
            if current is not None:
                current.append(line)
        return cls({name: "\n".join(lines).strip() for name, lines in sections.items()})

    @classmethod
    def load(cls, locale: str = "en") -> "PromptCatalog":
        name = f"generation_{locale}.txt"
        ref = resources.files("ragmark") / "catalogs" / name
        try:
            text = ref.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ValueError(f"no generation prompt catalog for locale {locale!r}")
        return cls.parse(text)

    @classmethod
    def from_file(cls, path: str | Path) -> "PromptCatalog":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


def _names(entities: list[Entity]) -> str:
    return ", ".join(e.normalized_form for e in entities)


def build_generation_prompt(sg: Subgraph, catalog: PromptCatalog | None = None) -> str:
    """Render the template-specific prompt for one subgraph.

    Deterministic for a fixed subgraph: triplets are already in the
    subgraph's canonical order and all slot values derive from it.
    """
    catalog = catalog or PromptCatalog.load()
    template = catalog.sections[sg.qtype.value]
    slots: dict[str, str] = {
        "qtype": sg.qtype.value,
        "triplets": "\n".join(t.render() for t in sg.triplets),
    }
    if sg.qtype is QuestionType.SIMPLE:
        slots["question_entity"] = _names(sg.entities_with_role(ROLE_QUESTION))
        slots["answer_entity"] = _names(sg.entities_with_role(ROLE_ANSWER))
    elif sg.qtype is QuestionType.SET:
        slots["shared_entity"] = _names(sg.entities_with_role(ROLE_SHARED))
        slots["answer_entities"] = _names(sg.entities_with_role(ROLE_ANSWER))
    elif sg.qtype is QuestionType.MULTI_HOP:
        slots["bridge_entity"] = _names(sg.entities_with_role(ROLE_BRIDGE))
        slots["answer_entity"] = _names(sg.entities_with_role(ROLE_ANSWER))
        slots["question_entity"] = _names(sg.entities_with_role(ROLE_QUESTION))
    else:
        slots["shared_entity"] = _names(sg.entities_with_role(ROLE_ANSWER))
        slots["condition_entities"] = _names(sg.entities_with_role(ROLE_QUESTION))
    return template.format(**slots)


_QUESTION_RE = re.compile(r"^\s*Question\s*:\s*(.*)$", re.IGNORECASE)
_ANSWER_RE = re.compile(r"^\s*Answer\s*:\s*(.*)$", re.IGNORECASE)


def parse_generation_reply(payload: str) -> tuple[str, str]:
    """Extract the first Question:/Answer: lines from a backend reply."""
    question = answer = ""
    for line in payload.splitlines():
        if not question:
            m = _QUESTION_RE.match(line)
            if m:
                question = m.group(1).strip()
                continue
        if not answer:
            m = _ANSWER_RE.match(line)
            if m:
                answer = m.group(1).strip()
    if not question or not answer:
        raise MalformedGenerationError(
            "backend reply lacks a non-empty Question:/Answer: pair", raw=payload
        )
    return question, answer


def generate_qa(
    sg: Subgraph,
    gen: TextBackend,
    catalog: PromptCatalog | None = None,
    regen_attempts: int = 0,
    retry: RetryPolicy | None = None,
    pair_id: str = "",
) -> QAPair:
    """Generate one QA pair for a subgraph.

    ``regen_attempts`` extra generations (at most 2) are allowed when the
    reply is malformed; the downstream filter cascade, not regeneration, is
    the quality gate.
    """
    if not 0 <= regen_attempts <= MAX_REGEN_ATTEMPTS:
        raise ValueError(f"regen_attempts must be in 0..{MAX_REGEN_ATTEMPTS}")
    sg.check_template()
    retry = retry or RetryPolicy()
    prompt = build_generation_prompt(sg, catalog)
    last_error: MalformedGenerationError | None = None
    for _ in range(regen_attempts + 1):
        payload = retry.run(lambda: gen.complete(prompt))
        try:
            question, answer = parse_generation_reply(payload)
        except MalformedGenerationError as exc:
            last_error = exc
            continue
        return QAPair(
            question=question,
            answer=answer,
            answer_entities=sg.entities_with_role(ROLE_ANSWER),
            qtype=sg.qtype,
            subgraph=sg,
            source_docs=sg.source_docs(),
            pair_id=pair_id,
        )
    assert last_error is not None
    raise last_error


__all__ = [
    "MAX_REGEN_ATTEMPTS",
    "MalformedGenerationError",
    "PromptCatalog",
    "QAPair",
    "build_generation_prompt",
    "generate_qa",
    "parse_generation_reply",
]
