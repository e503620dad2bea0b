"""The filter cascade: five stages in fixed order, a corpus-level trim
barrier, and the final per-type quota cut."""
from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from ..backends import AcceptabilityScorer, EntityRecognizer, JudgeBackend, RetryPolicy, TextBackend
from ..qagen import QAPair
from ..sampling import QuestionType
from .presence import compute_presence
from .stages import (
    CriterionCatalog,
    FilterConfig,
    FilterVerdict,
    check_named_entities,
    closed_book_check,
    graph_correspondence,
    judge_filter,
    load_qa_criteria,
    score_acceptability,
)

logger = logging.getLogger(__name__)

DEFAULT_QUOTA = 150


class QuotaShortfallError(ValueError):
    """Some question type's pool is smaller than the release quota."""

    def __init__(self, deficient: dict[QuestionType, int], quota: int):
        self.deficient = deficient
        self.quota = quota
        listing = ", ".join(f"{qt.value} has {n}" for qt, n in sorted(deficient.items(), key=lambda kv: kv[0].value))
        super().__init__(f"pools below quota {quota}: {listing}")


@dataclass
class FilterBackends:
    """Model endpoints the cascade talks to."""

    scorer: AcceptabilityScorer
    ner: EntityRecognizer
    probes: Sequence[TextBackend]
    judge: JudgeBackend
    qa_catalog: CriterionCatalog | None = None
    retry: RetryPolicy | None = None


@dataclass
class CascadeResult:
    passed: dict[QuestionType, list[QAPair]] = field(
        default_factory=lambda: {qt: [] for qt in QuestionType}
    )
    rejected: list[QAPair] = field(default_factory=list)
    quarantined: list[QAPair] = field(default_factory=list)
    audit: list[dict] = field(default_factory=list)

    def save_audit(self, path: str | Path) -> None:
        with open(path, "a", encoding="utf-8") as fh:
            for record in self.audit:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def trim_extremes(
    scored_pairs: Sequence[tuple[QAPair, float]], fraction: float
) -> list[QAPair]:
    """Drop ⌊fraction·n⌋ pairs from each tail of the score ordering.

    Ties order by pair id so the cut is deterministic; survivors keep their
    input order.
    """
    if not 0.0 <= fraction < 0.5:
        raise ValueError(f"fraction must be in [0, 0.5), got {fraction}")
    n = len(scored_pairs)
    cut_each = math.floor(fraction * n)
    if cut_each == 0:
        return [qa for qa, _ in scored_pairs]
    order = sorted(range(n), key=lambda i: (scored_pairs[i][1], scored_pairs[i][0].pair_id))
    dropped = set(order[:cut_each]) | set(order[n - cut_each :])
    return [qa for i, (qa, _) in enumerate(scored_pairs) if i not in dropped]


def finalize_testset(
    pools: Mapping[QuestionType, Sequence[QAPair]],
    quota: int = DEFAULT_QUOTA,
    seed: int = 0,
) -> dict[QuestionType, list[QAPair]]:
    """Seeded uniform sample of exactly ``quota`` pairs per question type."""
    deficient = {
        qt: len(pools.get(qt, ())) for qt in QuestionType if len(pools.get(qt, ())) < quota
    }
    if deficient:
        raise QuotaShortfallError(deficient, quota)
    rng = random.Random(seed)
    testset: dict[QuestionType, list[QAPair]] = {}
    for qt in QuestionType:
        pool = sorted(pools[qt], key=lambda qa: qa.pair_id)
        chosen = rng.sample(pool, quota)
        testset[qt] = sorted(chosen, key=lambda qa: qa.pair_id)
    return testset


def run_cascade(
    pairs: Sequence[QAPair],
    doc_texts: Mapping[int, str],
    backends: FilterBackends,
    config: FilterConfig | None = None,
) -> CascadeResult:
    """Filter pairs through all five stages.

    Cheap stages run first and short-circuit; graph-correspondence scores of
    Simple and MultiHop pairs are collected corpus-wide, their extreme tails
    trimmed, and only then does the judge stage spend backend calls.
    Indeterminate outcomes quarantine the pair for a later run.
    """
    config = config or FilterConfig()
    catalog = backends.qa_catalog or load_qa_criteria()
    retry = backends.retry or RetryPolicy()
    result = CascadeResult()

    def record(qa: QAPair, verdict: FilterVerdict) -> None:
        qa.verdicts.append(verdict)
        result.audit.append(
            {
                "pair_id": qa.pair_id,
                "qtype": qa.qtype.value,
                "stage": verdict.stage,
                "passed": verdict.passed,
                "score": verdict.score,
                "details": verdict.details,
                "indeterminate": verdict.indeterminate,
            }
        )

    def quarantine(qa: QAPair, stage: str, details: str) -> None:
        record(qa, FilterVerdict(stage=stage, passed=False, details=details, indeterminate=True))
        result.quarantined.append(qa)

    survivors: list[tuple[QAPair, float]] = []
    for qa in pairs:
        # Stage 1: linguistic acceptability of the question.
        try:
            score = score_acceptability(qa.question, backends.scorer)
        except Exception as exc:
            quarantine(qa, "acceptability", f"scorer failed: {exc}")
            continue
        verdict = FilterVerdict(
            stage="acceptability",
            passed=score >= config.acceptability_threshold,
            score=score,
            details="" if score >= config.acceptability_threshold else f"score {score:.3f} below threshold",
        )
        record(qa, verdict)
        if not verdict.passed:
            result.rejected.append(qa)
            continue

        # Stage 2: the pair must mention a named entity from its sources.
        texts = [doc_texts[d] for d in sorted(qa.source_docs) if d in doc_texts]
        check = check_named_entities(qa, texts, backends.ner)
        verdict = FilterVerdict(
            stage="ner",
            passed=check.passed,
            details=("fallback recognizer used; " if check.used_fallback else "")
            + (f"matched: {', '.join(check.matched)}" if check.matched else "no source entity found"),
        )
        record(qa, verdict)
        if not verdict.passed:
            result.rejected.append(qa)
            continue

        # Stage 3: context-free probes must not already answer the question.
        cb = closed_book_check(qa, backends.probes, ratio=config.closed_book_ratio)
        if cb.indeterminate:
            quarantine(qa, "closed_book", f"all {cb.failures} probes failed")
            continue
        verdict = FilterVerdict(
            stage="closed_book",
            passed=bool(cb.retained),
            score=max(cb.scores) if cb.scores else None,
            details="" if cb.retained else "answerable without context",
        )
        record(qa, verdict)
        if not verdict.passed:
            result.rejected.append(qa)
            continue

        # Stage 4: entity positions must match the template.
        coeffs = compute_presence(qa)
        verdict = graph_correspondence(qa, coeffs, config)
        record(qa, verdict)
        if not verdict.passed:
            result.rejected.append(qa)
            continue
        survivors.append((qa, verdict.score if verdict.score is not None else 0.0))

    # Corpus-level barrier: trim score tails of Simple and MultiHop pools.
    trimmed_survivors: list[QAPair] = []
    for qt in QuestionType:
        of_type = [(qa, s) for qa, s in survivors if qa.qtype is qt]
        if qt in (QuestionType.SIMPLE, QuestionType.MULTI_HOP):
            kept = trim_extremes(of_type, config.trim_fraction)
            kept_ids = {id(qa) for qa in kept}
            for qa, s in of_type:
                if id(qa) not in kept_ids:
                    record(
                        qa,
                        FilterVerdict(
                            stage="graph_correspondence",
                            passed=False,
                            score=s,
                            details="trimmed: presence score in extreme tail",
                        ),
                    )
                    result.rejected.append(qa)
            trimmed_survivors.extend(kept)
        else:
            trimmed_survivors.extend(qa for qa, _ in of_type)

    # Stage 5: the judge rates all eight criteria.
    for qa in trimmed_survivors:
        doc = "\n\n".join(doc_texts[d] for d in sorted(qa.source_docs) if d in doc_texts)
        try:
            ratings, passed = judge_filter(qa, doc, backends.judge, catalog, retry)
        except Exception as exc:
            quarantine(qa, "judge", f"judge failed: {exc}")
            continue
        verdict = FilterVerdict(
            stage="judge",
            passed=passed,
            score=sum(ratings.ratings.values()) / (2 * len(ratings.ratings)),
            details=json.dumps(ratings.ratings, sort_keys=True),
        )
        record(qa, verdict)
        if passed:
            result.passed[qa.qtype].append(qa)
        else:
            result.rejected.append(qa)
    logger.info(
        "cascade: %d in, %s passed, %d rejected, %d quarantined",
        len(pairs),
        {qt.value: len(v) for qt, v in result.passed.items()},
        len(result.rejected),
        len(result.quarantined),
    )
    return result


__all__ = [
    "CascadeResult",
    "DEFAULT_QUOTA",
    "FilterBackends",
    "QuotaShortfallError",
    "finalize_testset",
    "run_cascade",
    "trim_extremes",
]
