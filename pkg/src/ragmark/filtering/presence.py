"""Fuzzy entity-presence scoring via scaled Levenshtein over text windows."""
from __future__ import annotations

from dataclasses import dataclass

from ..qagen import QAPair

WINDOW_SLACK = 2


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert/delete/substitute, unit costs)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        curr = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cost = 0 if x == y else 1
            curr[j] = min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
        prev = curr
    return prev[-1]


def presence_coefficient(entity_form: str, target: str) -> float:
    """How close the entity name comes to some substring of the target.

    Score is max over candidate windows w of 1 − lev(e, w)/max(|e|, |w|),
    computed on casefolded text. Candidate windows have lengths within
    WINDOW_SLACK of |e| (clamped to ≥ 1). A target shorter than every window
    is compared whole. Empty target scores 0.
    """
    if not entity_form:
        raise ValueError("entity form must be non-empty")
    if not target:
        return 0.0
    e = entity_form.casefold()
    t = target.casefold()
    if e in t:
        return 1.0
    lengths = range(max(1, len(e) - WINDOW_SLACK), len(e) + WINDOW_SLACK + 1)
    best = 0.0
    any_window = False
    for width in lengths:
        if width > len(t):
            continue
        any_window = True
        for start in range(len(t) - width + 1):
            window = t[start : start + width]
            score = 1.0 - levenshtein(e, window) / max(len(e), width)
            if score > best:
                best = score
    if not any_window:
        best = 1.0 - levenshtein(e, t) / max(len(e), len(t))
    return max(0.0, best)


@dataclass
class PresenceCoefficients:
    """Per-entity question/answer presence for one QA pair."""

    q_presence: dict[str, float]
    a_presence: dict[str, float]

    def __post_init__(self):
        for table in (self.q_presence, self.a_presence):
            for entity_id, value in table.items():
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"presence for {entity_id!r} out of [0, 1]: {value}")
        if set(self.q_presence) != set(self.a_presence):
            raise ValueError("q_presence and a_presence must cover the same entities")


def compute_presence(qa: QAPair) -> PresenceCoefficients:
    """Presence coefficients for every entity of the pair's subgraph."""
    q: dict[str, float] = {}
    a: dict[str, float] = {}
    for entity_id, entity in qa.subgraph.entities().items():
        q[entity_id] = presence_coefficient(entity.normalized_form, qa.question)
        a[entity_id] = presence_coefficient(entity.normalized_form, qa.answer)
    return PresenceCoefficients(q_presence=q, a_presence=a)


__all__ = [
    "PresenceCoefficients",
    "WINDOW_SLACK",
    "compute_presence",
    "levenshtein",
    "presence_coefficient",
]
