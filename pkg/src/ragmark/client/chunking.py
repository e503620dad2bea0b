"""Character-window document chunking."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

WINDOW = 500
STRIDE = 400


@dataclass(frozen=True)
class Chunk:
    """A half-open [start, end) character slice of one public document."""

    doc_public_id: int
    start: int
    end: int
    text: str

    def __post_init__(self):
        if self.end - self.start != len(self.text):
            raise ValueError("chunk span does not match its text length")


def chunk_documents(
    docs: Sequence[tuple[int, str]], window: int = WINDOW, stride: int = STRIDE
) -> list[Chunk]:
    """Slice documents into fixed windows.

    With the default window 500 and stride 400, consecutive chunks of a
    document overlap by exactly 100 characters; the final chunk may be
    shorter. Every character is covered.
    """
    if window <= 0 or stride <= 0 or stride > window:
        raise ValueError("need 0 < stride <= window")
    chunks: list[Chunk] = []
    for public_id, text in docs:
        if not text:
            continue
        start = 0
        while True:
            end = min(start + window, len(text))
            chunks.append(Chunk(doc_public_id=public_id, start=start, end=end, text=text[start:end]))
            if end >= len(text):
                break
            start += stride
    return chunks


__all__ = ["Chunk", "STRIDE", "WINDOW", "chunk_documents"]
