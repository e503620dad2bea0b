"""QA filter cascade: acceptability, named entities, closed-book probing,
graph correspondence, judge criteria; plus trimming and the quota cut."""
from .cascade import (
    CascadeResult,
    DEFAULT_QUOTA,
    FilterBackends,
    QuotaShortfallError,
    finalize_testset,
    run_cascade,
    trim_extremes,
)
from .presence import PresenceCoefficients, compute_presence, levenshtein, presence_coefficient
from .stages import (
    QA_CRITERIA,
    STAGES,
    ClosedBookResult,
    Criterion,
    CriterionCatalog,
    FilterConfig,
    FilterVerdict,
    JudgeRatings,
    NamedEntityCheck,
    build_judge_prompt,
    check_named_entities,
    closed_book_check,
    graph_correspondence,
    judge_filter,
    load_qa_criteria,
    score_acceptability,
)

__all__ = [
    "CascadeResult",
    "ClosedBookResult",
    "Criterion",
    "CriterionCatalog",
    "DEFAULT_QUOTA",
    "FilterBackends",
    "FilterConfig",
    "FilterVerdict",
    "JudgeRatings",
    "NamedEntityCheck",
    "PresenceCoefficients",
    "QA_CRITERIA",
    "QuotaShortfallError",
    "STAGES",
    "build_judge_prompt",
    "check_named_entities",
    "closed_book_check",
    "compute_presence",
    "finalize_testset",
    "graph_correspondence",
    "judge_filter",
    "levenshtein",
    "load_qa_criteria",
    "presence_coefficient",
    "run_cascade",
    "score_acceptability",
    "trim_extremes",
]
