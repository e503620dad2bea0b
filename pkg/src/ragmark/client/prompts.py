"""Prompt construction for the baseline generator."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .chunking import Chunk

DEFAULT_TEMPLATE = (
    "Answer the question using the provided context. Give me only an answer. "
    "<context> {context} </context> Question: {question} Answer:"
)
DEFAULT_QUERY_PREFIX = "search_query:"
DEFAULT_DOC_PREFIX = "search_document:"
DEFAULT_MAX_CONTEXT_CHARS = 8000


@dataclass(frozen=True)
class PromptSpec:
    """Template plus embedding prefixes and the context budget."""

    template: str = DEFAULT_TEMPLATE
    query_prefix: str = DEFAULT_QUERY_PREFIX
    doc_prefix: str = DEFAULT_DOC_PREFIX
    max_context_chars: int = DEFAULT_MAX_CONTEXT_CHARS

    def __post_init__(self):
        for slot in ("{context}", "{question}"):
            if self.template.count(slot) != 1:
                raise ValueError(f"template must contain {slot} exactly once")
        if self.max_context_chars <= 0:
            raise ValueError("max_context_chars must be positive")


def build_answer_prompt(question: str, chunks: Sequence[Chunk], spec: PromptSpec) -> str:
    """Fill the template, truncating context from the tail to fit the budget.

    Whole chunks are dropped from the end first; the last surviving chunk is
    then cut at the character level. The question is never truncated, so a
    budget too small even for an empty context is an error.
    """
    texts = [c.text for c in chunks]

    def render(parts: Sequence[str]) -> str:
        return spec.template.format(context="\n".join(parts), question=question)

    if len(render([])) > spec.max_context_chars:
        raise ValueError("max_context_chars cannot accommodate the question and template")
    while texts:
        overflow = len(render(texts)) - spec.max_context_chars
        if overflow <= 0:
            break
        if len(texts[-1]) > overflow:
            texts[-1] = texts[-1][: len(texts[-1]) - overflow]
        else:
            texts.pop()
    return render(texts)


__all__ = [
    "DEFAULT_DOC_PREFIX",
    "DEFAULT_MAX_CONTEXT_CHARS",
    "DEFAULT_QUERY_PREFIX",
    "DEFAULT_TEMPLATE",
    "PromptSpec",
    "build_answer_prompt",
]
