"""Participant-side tools: chunking, prompting, retrieval, baseline runs."""
from .baseline import (
    DEFAULT_RESPONSE_CAP,
    Submission,
    SubmissionAnswer,
    local_evaluate,
    run_baseline,
    submit,
)
from .chunking import STRIDE, WINDOW, Chunk, chunk_documents
from .prompts import (
    DEFAULT_DOC_PREFIX,
    DEFAULT_MAX_CONTEXT_CHARS,
    DEFAULT_QUERY_PREFIX,
    DEFAULT_TEMPLATE,
    PromptSpec,
    build_answer_prompt,
)
from .retrieval import DEFAULT_K, ChunkIndex, build_index, retrieve_top_k

__all__ = [
    "Chunk",
    "ChunkIndex",
    "DEFAULT_DOC_PREFIX",
    "DEFAULT_K",
    "DEFAULT_MAX_CONTEXT_CHARS",
    "DEFAULT_QUERY_PREFIX",
    "DEFAULT_RESPONSE_CAP",
    "DEFAULT_TEMPLATE",
    "PromptSpec",
    "STRIDE",
    "Submission",
    "SubmissionAnswer",
    "WINDOW",
    "build_answer_prompt",
    "build_index",
    "chunk_documents",
    "local_evaluate",
    "retrieve_top_k",
    "run_baseline",
    "submit",
]
