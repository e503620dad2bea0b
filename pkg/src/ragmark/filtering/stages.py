"""The five QA filter stages.

Each stage is a pure check over one pair (graph correspondence additionally
feeds a corpus-level trim). Backend outages never silently drop a pair:
stages either fall back (named-entity check) or report indeterminate so the
cascade can quarantine the pair for a later run.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from ..backends import (
    AcceptabilityScorer,
    CapitalizedSpanRecognizer,
    EntityRecognizer,
    JudgeBackend,
    MalformedOutputError,
    RetryPolicy,
    TextBackend,
)
from ..metrics import split_segments, substring_match
from ..qagen import QAPair
from ..sampling import ROLE_ANSWER, ROLE_BRIDGE, ROLE_QUESTION, ROLE_SHARED, QuestionType
from .presence import PresenceCoefficients

STAGES = ("acceptability", "ner", "closed_book", "graph_correspondence", "judge")

QA_CRITERIA = (
    "question_literacy",
    "question_clarity",
    "question_naturalness",
    "context_sufficiency",
    "context_necessity",
    "answer_literacy",
    "answer_correctness",
    "answer_uniqueness",
)


@dataclass
class FilterVerdict:
    """One stage's outcome for one pair."""

    stage: str
    passed: bool
    score: float | None = None
    details: str = ""
    indeterminate: bool = False

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown filter stage: {self.stage!r}")


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for the cascade. Defaults are decisions, not paper values."""

    acceptability_threshold: float = 0.5
    closed_book_ratio: float = 1.0
    theta: float = 0.75
    theta_bridge: float = 0.75
    trim_fraction: float = 0.05


def score_acceptability(question: str, scorer: AcceptabilityScorer) -> float:
    """Linguistic-acceptability score in [0, 1]. Pass rule: score ≥ threshold."""
    value = scorer.score(question)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"acceptability score out of [0, 1]: {value}")
    return value


@dataclass
class NamedEntityCheck:
    passed: bool
    used_fallback: bool = False
    matched: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


def check_named_entities(
    qa: QAPair,
    doc_texts: Sequence[str],
    ner: EntityRecognizer,
    fallback: EntityRecognizer | None = None,
) -> NamedEntityCheck:
    """True iff some recognized entity from the sources occurs in the pair.

    Matching casefolds both sides. If the recognizer fails, the capitalized-
    span heuristic takes over and the result is flagged.
    """
    used_fallback = False
    spans: list[str] = []
    try:
        for text in doc_texts:
            spans.extend(ner.entities(text))
    except Exception:
        used_fallback = True
        backup = fallback or CapitalizedSpanRecognizer()
        spans = []
        for text in doc_texts:
            spans.extend(backup.entities(text))
    question = qa.question.casefold()
    answer = qa.answer.casefold()
    matched = tuple(
        dict.fromkeys(s for s in spans if s and (s.casefold() in question or s.casefold() in answer))
    )
    return NamedEntityCheck(passed=bool(matched), used_fallback=used_fallback, matched=matched)


@dataclass
class ClosedBookResult:
    """Outcome of probing context-free models with the bare question."""

    retained: bool | None  # None = indeterminate (every probe failed)
    scores: list[float] = field(default_factory=list)
    failures: int = 0

    @property
    def indeterminate(self) -> bool:
        return self.retained is None


def closed_book_check(
    qa: QAPair,
    probes: Sequence[TextBackend],
    match: Callable[[str, str], float] | None = None,
    ratio: float = 1.0,
) -> ClosedBookResult:
    """Discard pairs answerable without context.

    Each probe sees only the question. The pair is discarded iff any probe's
    answer matches the canonical answer with score ≥ ratio; failed probes are
    skipped, and the stage is indeterminate when no probe answered.
    """
    if not probes:
        raise ValueError("closed_book_check needs at least one probe")

    def default_match(candidate: str, reference: str) -> float:
        segments = split_segments(reference)
        if not segments:
            return 0.0
        return substring_match(candidate, segments)

    matcher = match or default_match
    scores: list[float] = []
    failures = 0
    for probe in probes:
        try:
            reply = probe.complete(qa.question)
        except Exception:
            failures += 1
            continue
        scores.append(matcher(reply, qa.answer))
    if not scores:
        return ClosedBookResult(retained=None, failures=failures)
    return ClosedBookResult(
        retained=not any(s >= ratio for s in scores), scores=scores, failures=failures
    )


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def graph_correspondence(
    qa: QAPair, coeffs: PresenceCoefficients, config: FilterConfig | None = None
) -> FilterVerdict:
    """Check that entities appear exactly where the template puts them.

    Set and Conditional require high average presence of the question-side
    entities in the question and of the answer entities in the answer.
    Simple requires each entity mentioned exactly once across the pair:
    its better-side coefficient ≥ θ and the other side < θ; the verdict
    score (mean of better sides) feeds corpus-level trimming. MultiHop
    applies the Simple rule to the two single-connection entities and
    additionally requires the bridge entity absent from both texts.
    """
    config = config or FilterConfig()
    roles = qa.subgraph.roles
    for entity_id in qa.subgraph.entities():
        if entity_id not in coeffs.q_presence:
            raise ValueError(f"missing presence coefficients for entity {entity_id!r}")
    theta = config.theta
    names = {eid: e.normalized_form for eid, e in qa.subgraph.entities().items()}

    def single_connection_ok(entity_id: str) -> tuple[bool, float]:
        q, a = coeffs.q_presence[entity_id], coeffs.a_presence[entity_id]
        better, worse = max(q, a), min(q, a)
        return better >= theta and worse < theta, better

    if qa.qtype in (QuestionType.SET, QuestionType.CONDITIONAL):
        q_side = [eid for eid, role in roles.items() if role in (ROLE_QUESTION, ROLE_SHARED)]
        a_side = [eid for eid, role in roles.items() if role == ROLE_ANSWER]
        avg_q = _mean([coeffs.q_presence[eid] for eid in q_side])
        avg_a = _mean([coeffs.a_presence[eid] for eid in a_side])
        passed = avg_q >= theta and avg_a >= theta
        details = []
        if avg_q < theta:
            details.append(f"question-side presence {avg_q:.3f} < {theta}")
        if avg_a < theta:
            details.append(f"answer-side presence {avg_a:.3f} < {theta}")
        return FilterVerdict(
            stage="graph_correspondence",
            passed=passed,
            score=min(avg_q, avg_a),
            details="; ".join(details),
        )

    if qa.qtype is QuestionType.SIMPLE:
        oks, betters, details = [], [], []
        for entity_id in roles:
            ok, better = single_connection_ok(entity_id)
            oks.append(ok)
            betters.append(better)
            if not ok:
                details.append(f"entity {names[entity_id]!r} not mentioned exactly once")
        return FilterVerdict(
            stage="graph_correspondence",
            passed=all(oks),
            score=_mean(betters),
            details="; ".join(details),
        )

    # MultiHop
    bridge_id = next(eid for eid, role in roles.items() if role == ROLE_BRIDGE)
    singles = [eid for eid, role in roles.items() if role in (ROLE_ANSWER, ROLE_QUESTION)]
    details = []
    oks, betters = [], []
    for entity_id in singles:
        ok, better = single_connection_ok(entity_id)
        oks.append(ok)
        betters.append(better)
        if not ok:
            details.append(f"entity {names[entity_id]!r} not mentioned exactly once")
    bridge_presence = max(coeffs.q_presence[bridge_id], coeffs.a_presence[bridge_id])
    bridge_ok = bridge_presence < config.theta_bridge
    if not bridge_ok:
        details.append(
            f"bridge-violation: {names[bridge_id]!r} present with coefficient "
            f"{bridge_presence:.3f} >= {config.theta_bridge}"
        )
    return FilterVerdict(
        stage="graph_correspondence",
        passed=all(oks) and bridge_ok,
        score=_mean(betters),
        details="; ".join(details),
    )


@dataclass(frozen=True)
class Criterion:
    name: str
    include_answer: bool
    instruction: str


_SECTION_RE = re.compile(r"^\[([\w-]+)\]\s*$")
_ANSWER_FLAG_RE = re.compile(r"^answer\s*:\s*(include|omit)\s*$", re.IGNORECASE)


class CriterionCatalog:
    """Judge criteria loaded from a sectioned text file."""

    def __init__(self, criteria: list[Criterion]):
        self.criteria = list(criteria)
        self.names = tuple(c.name for c in self.criteria)

    @classmethod
    def parse(cls, text: str) -> "CriterionCatalog":
        criteria: list[Criterion] = []
        name: str | None = None
        include_answer = False
        lines: list[str] = []

        def flush():
            if name is not None:
                criteria.append(
                    Criterion(name=name, include_answer=include_answer, instruction="\n".join(lines).strip())
                )

        for line in text.splitlines():
            m = _SECTION_RE.match(line)
            if m:
                flush()
                name, include_answer, lines = m.group(1), False, []
                continue
            if name is None:
                continue  # preamble/comments
            flag = _ANSWER_FLAG_RE.match(line)
            if flag:
                include_answer = flag.group(1).lower() == "include"
                continue
            lines.append(line)
        flush()
        return cls(criteria)

    @classmethod
    def load(cls, name: str) -> "CriterionCatalog":
        ref = resources.files("ragmark") / "catalogs" / name
        return cls.parse(ref.read_text(encoding="utf-8"))

    @classmethod
    def from_file(cls, path: str | Path) -> "CriterionCatalog":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


def load_qa_criteria(locale: str = "en") -> CriterionCatalog:
    catalog = CriterionCatalog.load(f"qa_criteria_{locale}.txt")
    if set(catalog.names) != set(QA_CRITERIA):
        raise ValueError(
            f"qa criteria catalog must define exactly {sorted(QA_CRITERIA)}, got {sorted(catalog.names)}"
        )
    return catalog


@dataclass
class JudgeRatings:
    """Integer ratings in {0, 1, 2} for all eight QA criteria."""

    ratings: dict[str, int]

    def __post_init__(self):
        if set(self.ratings) != set(QA_CRITERIA):
            missing = sorted(set(QA_CRITERIA) - set(self.ratings))
            extra = sorted(set(self.ratings) - set(QA_CRITERIA))
            raise ValueError(f"criteria mismatch: missing {missing}, extra {extra}")
        for crit, value in self.ratings.items():
            if value not in (0, 1, 2):
                raise ValueError(f"rating for {crit} out of range: {value!r}")

    @property
    def passed(self) -> bool:
        return min(self.ratings.values()) >= 1


def build_judge_prompt(criterion: Criterion, qa: QAPair, doc: str) -> str:
    lines = [
        f"Criterion: {criterion.name}",
        criterion.instruction,
        "Rate 0 (bad), 1 (acceptable) or 2 (good). Reply with a single digit.",
        "",
        "Context:",
        doc,
        "",
        f"Question: {qa.question}",
    ]
    if criterion.include_answer:
        lines.append(f"Answer: {qa.answer}")
    return "\n".join(lines)


def judge_filter(
    qa: QAPair,
    doc: str,
    judge: JudgeBackend,
    catalog: CriterionCatalog | None = None,
    retry: RetryPolicy | None = None,
) -> tuple[JudgeRatings, bool]:
    """Rate the pair on all eight criteria; pass iff every rating ≥ 1.

    Backend failure on any criterion propagates so the cascade can hold the
    pair indeterminate instead of deciding on partial ratings.
    """
    catalog = catalog or load_qa_criteria()
    if set(catalog.names) != set(QA_CRITERIA):
        raise ValueError("judge catalog must cover exactly the eight QA criteria")
    retry = retry or RetryPolicy()
    ratings: dict[str, int] = {}
    for criterion in catalog.criteria:
        prompt = build_judge_prompt(criterion, qa, doc)
        value = retry.run(lambda p=prompt: judge.rate(p))
        if value not in (0, 1, 2):
            raise MalformedOutputError(
                f"judge rating for {criterion.name} out of scale: {value!r}", raw=str(value)
            )
        ratings[criterion.name] = value
    result = JudgeRatings(ratings=ratings)
    return result, result.passed


__all__ = [
    "ClosedBookResult",
    "Criterion",
    "CriterionCatalog",
    "FilterConfig",
    "FilterVerdict",
    "JudgeRatings",
    "NamedEntityCheck",
    "QA_CRITERIA",
    "STAGES",
    "build_judge_prompt",
    "check_named_entities",
    "closed_book_check",
    "graph_correspondence",
    "judge_filter",
    "load_qa_criteria",
    "score_acceptability",
]
