"""Retrieval and generation metrics.

Retrieval is scored per query from an ordered list of retrieved document
public ids against a ground-truth set, cut off at the top k after removing
duplicates (the submission format allows repeats). Generation is scored
against the canonical answer by LCS-based ROUGE-L, by the fraction of
reference segments present verbatim, and by an averaged judge rating.

All scores live in [0, 1]. Corpus-level values are plain means over queries;
queries that cannot be scored (empty ground truth, empty reference) are
skipped and tallied instead of polluting the mean.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

DEFAULT_K = 5

# The six judge criteria used for end-to-end answer quality.
RAG_CRITERIA = (
    "fluff",
    "fact_consistency",
    "extraction_correctness",
    "completeness",
    "factual_accuracy",
    "main_idea",
)


@dataclass(frozen=True)
class RetrievalJudgment:
    """One query's retrieval output against its ground truth."""

    found_ids: tuple[int, ...]
    relevant_ids: frozenset[int]
    k: int = DEFAULT_K

    def __init__(self, found_ids: Iterable[int], relevant_ids: Iterable[int], k: int = DEFAULT_K):
        if k < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "found_ids", tuple(found_ids))
        object.__setattr__(self, "relevant_ids", frozenset(relevant_ids))
        object.__setattr__(self, "k", k)


@dataclass(frozen=True)
class GenerationJudgment:
    """One query's generated answer against the canonical reference."""

    candidate: str
    reference: str
    reference_segments: tuple[str, ...] = ()


def top_k_ids(judgment: RetrievalJudgment) -> list[int]:
    """Deduplicate found ids preserving first occurrence, then cut at k."""
    seen: set[int] = set()
    out: list[int] = []
    for doc_id in judgment.found_ids:
        if doc_id not in seen:
            seen.add(doc_id)
            out.append(doc_id)
        if len(out) == judgment.k:
            break
    return out


def _require_relevant(judgment: RetrievalJudgment) -> None:
    if not judgment.relevant_ids:
        raise ValueError("relevant_ids must be non-empty for scoring")


def hit_rate(judgment: RetrievalJudgment) -> float:
    """1.0 if any relevant document is in the top k, else 0.0."""
    _require_relevant(judgment)
    top = top_k_ids(judgment)
    return 1.0 if any(d in judgment.relevant_ids for d in top) else 0.0


def recall(judgment: RetrievalJudgment) -> float:
    """Fraction of relevant documents present in the top k."""
    _require_relevant(judgment)
    top = set(top_k_ids(judgment))
    return len(top & judgment.relevant_ids) / len(judgment.relevant_ids)


def ndcg(judgment: RetrievalJudgment) -> float:
    """Binary-relevance NDCG over the deduplicated top k.

    DCG credits each relevant document 1/log2(rank + 1) at its 1-based rank;
    the ideal DCG packs min(|relevant|, k) relevant documents into the top
    ranks.
    """
    _require_relevant(judgment)
    top = top_k_ids(judgment)
    dcg = sum(
        1.0 / math.log2(rank + 1)
        for rank, doc_id in enumerate(top, start=1)
        if doc_id in judgment.relevant_ids
    )
    ideal_hits = min(len(judgment.relevant_ids), judgment.k)
    idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, ideal_hits + 1))
    return dcg / idcg if idcg > 0 else 0.0


_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Casefold, drop punctuation, split on whitespace."""
    return _TOKEN_RE.findall(text.casefold())


def normalize(text: str) -> str:
    """Normalized form used for substring checks: tokens joined by one space."""
    return " ".join(tokenize(text))


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Length of the longest common subsequence of two token sequences."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0] * (len(b) + 1)
        for j, y in enumerate(b):
            if x == y:
                curr[j + 1] = prev[j] + 1
            else:
                cl, cu = curr[j], prev[j + 1]
                curr[j + 1] = cl if cl >= cu else cu
        prev = curr
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> float:
    """LCS-based F1 between candidate and reference token sequences.

    Raises ValueError when the reference has no tokens; callers aggregating
    over a corpus should skip such queries.
    """
    ref = tokenize(reference)
    if not ref:
        raise ValueError("reference is empty after tokenization")
    cand = tokenize(candidate)
    if not cand:
        return 0.0
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    rec = lcs / len(ref)
    return 2 * precision * rec / (precision + rec)


def split_segments(reference: str) -> list[str]:
    """Default reference segments: the answer split on commas."""
    return [part.strip() for part in reference.split(",") if part.strip()]


def substring_match(candidate: str, reference_segments: Sequence[str]) -> float:
    """Fraction of reference segments present in the normalized candidate.

    Raises ValueError on an empty segment list; aggregators skip the query.
    """
    segments = [normalize(s) for s in reference_segments]
    segments = [s for s in segments if s]
    if not segments:
        raise ValueError("no reference segments to match")
    cand = normalize(candidate)
    hits = sum(1 for s in segments if s in cand)
    return hits / len(segments)


def judge_score(ratings: Mapping[str, int], criteria: Sequence[str] = RAG_CRITERIA) -> float:
    """Mean of per-criterion ratings on the 0..2 scale, normalized to [0, 1]."""
    missing = [c for c in criteria if c not in ratings]
    if missing:
        raise ValueError(f"missing criterion ratings: {', '.join(missing)}")
    for crit in criteria:
        if ratings[crit] not in (0, 1, 2):
            raise ValueError(f"rating for {crit} out of range: {ratings[crit]!r}")
    return sum(ratings[c] for c in criteria) / len(criteria) / 2.0


@dataclass
class CorpusScores:
    """Mean metric values plus a tally of queries skipped as unscorable."""

    values: dict[str, float] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)


def aggregate_retrieval(judgments: Iterable[RetrievalJudgment]) -> CorpusScores:
    """Mean hit rate, recall and NDCG; queries without ground truth are tallied."""
    scores = {"hit_rate": [], "recall": [], "ndcg": []}
    skipped = 0
    for judgment in judgments:
        if not judgment.relevant_ids:
            skipped += 1
            continue
        scores["hit_rate"].append(hit_rate(judgment))
        scores["recall"].append(recall(judgment))
        scores["ndcg"].append(ndcg(judgment))
    out = CorpusScores()
    out.values = {name: (sum(vals) / len(vals) if vals else 0.0) for name, vals in scores.items()}
    if skipped:
        out.skipped["empty_relevant_ids"] = skipped
    return out


def aggregate_generation(judgments: Iterable[GenerationJudgment]) -> CorpusScores:
    """Mean ROUGE-L and substring match; unscorable queries are tallied."""
    rouge_vals: list[float] = []
    sm_vals: list[float] = []
    skipped_ref = 0
    skipped_seg = 0
    for judgment in judgments:
        try:
            rouge_vals.append(rouge_l(judgment.candidate, judgment.reference))
        except ValueError:
            skipped_ref += 1
        segments = judgment.reference_segments or tuple(split_segments(judgment.reference))
        try:
            sm_vals.append(substring_match(judgment.candidate, segments))
        except ValueError:
            skipped_seg += 1
    out = CorpusScores()
    out.values = {
        "rouge_l": sum(rouge_vals) / len(rouge_vals) if rouge_vals else 0.0,
        "substring_match": sum(sm_vals) / len(sm_vals) if sm_vals else 0.0,
    }
    if skipped_ref:
        out.skipped["empty_reference"] = skipped_ref
    if skipped_seg:
        out.skipped["empty_segments"] = skipped_seg
    return out


__all__ = [
    "CorpusScores",
    "DEFAULT_K",
    "GenerationJudgment",
    "RAG_CRITERIA",
    "RetrievalJudgment",
    "aggregate_generation",
    "aggregate_retrieval",
    "hit_rate",
    "judge_score",
    "lcs_length",
    "ndcg",
    "normalize",
    "recall",
    "rouge_l",
    "split_segments",
    "substring_match",
    "tokenize",
    "top_k_ids",
]
