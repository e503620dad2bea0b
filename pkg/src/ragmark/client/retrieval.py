"""Vector index over chunks and top-k retrieval."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..backends import EmbeddingBackend, RetryPolicy
from .chunking import Chunk
from .prompts import PromptSpec

logger = logging.getLogger(__name__)

DEFAULT_K = 5


@dataclass
class ChunkIndex:
    """Chunk vectors embedded with the document prefix."""

    chunks: list[Chunk]
    matrix: np.ndarray  # one row per chunk
    similarity: str = "cosine"
    failed: list[tuple[Chunk, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.chunks)


def build_index(
    chunks: Sequence[Chunk],
    embedder: EmbeddingBackend,
    spec: PromptSpec,
    similarity: str = "cosine",
    retry: RetryPolicy | None = None,
) -> ChunkIndex:
    """Embed doc_prefix + chunk text for every chunk.

    The whole batch is retried first; if it keeps failing, chunks are
    embedded one by one so a single poisonous chunk cannot sink the index.
    Chunks that still fail are dropped and reported on the index.
    """
    if similarity not in ("cosine", "dot"):
        raise ValueError(f"unknown similarity: {similarity!r}")
    retry = retry or RetryPolicy()
    chunks = list(chunks)
    texts = [spec.doc_prefix + c.text for c in chunks]
    failed: list[tuple[Chunk, str]] = []
    if not chunks:
        return ChunkIndex(chunks=[], matrix=np.zeros((0, 0)), similarity=similarity)
    try:
        vectors = retry.run(lambda: embedder.embed(texts))
        kept = chunks
    except Exception:
        logger.warning("batch embedding failed; falling back to per-chunk embedding")
        vectors = []
        kept = []
        for chunk, text in zip(chunks, texts):
            try:
                vectors.append(retry.run(lambda t=text: embedder.embed([t])[0]))
                kept.append(chunk)
            except Exception as exc:
                failed.append((chunk, str(exc)))
    if not kept:
        raise RuntimeError(f"embedding failed for every chunk ({len(failed)} failures)")
    return ChunkIndex(
        chunks=list(kept), matrix=np.asarray(vectors, dtype=float), similarity=similarity, failed=failed
    )


def retrieve_top_k(
    question: str,
    index: ChunkIndex,
    embedder: EmbeddingBackend,
    spec: PromptSpec,
    k: int = DEFAULT_K,
    retry: RetryPolicy | None = None,
) -> list[Chunk]:
    """The k most similar chunks for query_prefix + question.

    Ties break on (doc_public_id, start) so rankings are reproducible.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        return []
    retry = retry or RetryPolicy()
    vector = np.asarray(retry.run(lambda: embedder.embed([spec.query_prefix + question])[0]), dtype=float)
    scores = index.matrix @ vector
    if index.similarity == "cosine":
        norms = np.linalg.norm(index.matrix, axis=1) * np.linalg.norm(vector)
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(norms > 0, scores / norms, 0.0)
    order = sorted(
        range(len(index)),
        key=lambda i: (-scores[i], index.chunks[i].doc_public_id, index.chunks[i].start),
    )
    return [index.chunks[i] for i in order[:k]]


__all__ = ["ChunkIndex", "DEFAULT_K", "build_index", "retrieve_top_k"]
