"""Pluggable model backends and deterministic stand-ins.

Every model the pipeline talks to (triplet extractor, normalizer, QA
generator, acceptability scorer, NER, closed-book probes, judge, embedder)
is reached through one of the small interfaces below. Production deployments
point them at HTTP services; tests and the bundled fixtures use the scripted
and hash-based implementations, which are fully deterministic.
"""
from __future__ import annotations

import hashlib
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence, TypeVar

T = TypeVar("T")

import httpx


class BackendError(RuntimeError):
    """A backend call failed after exhausting retries."""


class MalformedOutputError(ValueError):
    """Backend answered, but the payload could not be parsed.

    Carries the raw payload for diagnostics.
    """

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


@dataclass
class RetryPolicy:
    """Bounded retry with exponential backoff for transient backend failures."""

    attempts: int = 3
    base_delay: float = 0.5
    sleep: Callable[[float], None] = time.sleep

    def run(self, call: Callable[[], T]) -> T:
        last: Exception | None = None
        for attempt in range(self.attempts):
            try:
                return call()
            except MalformedOutputError:
                raise
            except Exception as exc:  # transient transport or server error
                last = exc
                if attempt + 1 < self.attempts:
                    self.sleep(self.base_delay * (2**attempt))
        raise BackendError(f"backend failed after {self.attempts} attempts: {last}") from last


class TextBackend(Protocol):
    """Request/response text service: one prompt in, one completion out."""

    def complete(self, prompt: str) -> str: ...


class EmbeddingBackend(Protocol):
    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


class AcceptabilityScorer(Protocol):
    """Scores a sentence for linguistic acceptability in [0, 1]."""

    def score(self, text: str) -> float: ...


class EntityRecognizer(Protocol):
    """Returns named-entity surface forms found in a text."""

    def entities(self, text: str) -> list[str]: ...


class JudgeBackend(Protocol):
    """Rates one criterion prompt on the 0..2 integer scale."""

    def rate(self, prompt: str) -> int: ...


class HttpTextBackend:
    """Text backend over HTTP: POST {"prompt": ...} -> {"text": ...}."""

    def __init__(self, url: str, timeout: float = 60.0, retry: RetryPolicy | None = None):
        self.url = url
        self.timeout = timeout
        self.retry = retry or RetryPolicy()

    def complete(self, prompt: str) -> str:
        def call() -> str:
            resp = httpx.post(self.url, json={"prompt": prompt}, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["text"]

        return self.retry.run(call)


class HttpEmbeddingBackend:
    """Embedder over HTTP: POST {"texts": [...]} -> {"vectors": [[...], ...]}."""

    def __init__(self, url: str, timeout: float = 60.0, retry: RetryPolicy | None = None):
        self.url = url
        self.timeout = timeout
        self.retry = retry or RetryPolicy()

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        def call() -> list[list[float]]:
            resp = httpx.post(self.url, json={"texts": list(texts)}, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["vectors"]

        return self.retry.run(call)


class HttpScorer:
    """Acceptability scorer over HTTP: POST {"text": ...} -> {"score": ...}."""

    def __init__(self, url: str, timeout: float = 60.0, retry: RetryPolicy | None = None):
        self.url = url
        self.timeout = timeout
        self.retry = retry or RetryPolicy()

    def score(self, text: str) -> float:
        def call() -> float:
            resp = httpx.post(self.url, json={"text": text}, timeout=self.timeout)
            resp.raise_for_status()
            return float(resp.json()["score"])

        return self.retry.run(call)


class HttpRecognizer:
    """NER over HTTP: POST {"text": ...} -> {"entities": [...]}."""

    def __init__(self, url: str, timeout: float = 60.0, retry: RetryPolicy | None = None):
        self.url = url
        self.timeout = timeout
        self.retry = retry or RetryPolicy()

    def entities(self, text: str) -> list[str]:
        def call() -> list[str]:
            resp = httpx.post(self.url, json={"text": text}, timeout=self.timeout)
            resp.raise_for_status()
            return [str(e) for e in resp.json()["entities"]]

        return self.retry.run(call)


class HttpJudge:
    """Judge over HTTP: POST {"prompt": ...} -> {"rating": 0|1|2}."""

    def __init__(self, url: str, timeout: float = 60.0, retry: RetryPolicy | None = None):
        self.url = url
        self.timeout = timeout
        self.retry = retry or RetryPolicy()

    def rate(self, prompt: str) -> int:
        def call() -> int:
            resp = httpx.post(self.url, json={"prompt": prompt}, timeout=self.timeout)
            resp.raise_for_status()
            return int(resp.json()["rating"])

        return self.retry.run(call)


class ScriptedBackend:
    """Deterministic text backend driven by a response table or queue.

    ``responses`` maps a prompt substring to the reply; the first matching
    key wins, in insertion order. ``queue`` entries, when given, are consumed
    one per call before the table is consulted. Unmatched prompts raise, so
    fixtures fail loudly instead of inventing output.
    """

    def __init__(
        self,
        responses: dict[str, str] | None = None,
        queue: Sequence[str] | None = None,
        default: str | None = None,
    ):
        self.responses = dict(responses or {})
        self._queue = list(queue or [])
        self.default = default
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if self._queue:
            return self._queue.pop(0)
        for key, reply in self.responses.items():
            if key in prompt:
                return reply
        if self.default is not None:
            return self.default
        raise BackendError(f"no scripted response for prompt: {prompt[:120]!r}")


class FlakyBackend:
    """Fails ``failures`` times, then delegates. For retry-policy tests."""

    def __init__(self, inner: TextBackend, failures: int):
        self.inner = inner
        self.failures = failures
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        if self.calls <= self.failures:
            raise ConnectionError("simulated transient failure")
        return self.inner.complete(prompt)


_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


class HashEmbedder:
    """Deterministic embedder: bag of hashed tokens in a fixed-size vector.

    Identical texts embed identically; texts sharing tokens overlap in the
    hashed dimensions, so dot products count shared tokens (modulo rare hash
    collisions at the configured dimensionality).
    """

    def __init__(self, dim: int = 512):
        self.dim = dim

    def _bucket(self, token: str) -> int:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dim

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            vec = [0.0] * self.dim
            for tok in set(_tokens(text)):
                vec[self._bucket(tok)] += 1.0
            out.append(vec)
        return out


@dataclass
class ConstantScorer:
    """Acceptability scorer returning a fixed value."""

    value: float = 1.0

    def score(self, text: str) -> float:
        return self.value


@dataclass
class TableScorer:
    """Acceptability scorer with per-text overrides and a default."""

    table: dict[str, float] = field(default_factory=dict)
    default: float = 1.0

    def score(self, text: str) -> float:
        return self.table.get(text, self.default)


class CapitalizedSpanRecognizer:
    """Heuristic NER fallback: maximal runs of two or more capitalized tokens."""

    _WORD = re.compile(r"\S+")

    def entities(self, text: str) -> list[str]:
        spans: list[str] = []
        run: list[str] = []
        for match in self._WORD.finditer(text):
            word = match.group(0).strip(".,;:!?()[]\"'")
            if word[:1].isupper():
                run.append(word)
            else:
                if len(run) >= 2:
                    spans.append(" ".join(run))
                run = []
        if len(run) >= 2:
            spans.append(" ".join(run))
        return spans


@dataclass
class ScriptedRecognizer:
    """NER stand-in returning a fixed entity list per text, else a default set."""

    table: dict[str, list[str]] = field(default_factory=dict)
    default: list[str] = field(default_factory=list)
    fail: bool = False

    def entities(self, text: str) -> list[str]:
        if self.fail:
            raise BackendError("simulated recognizer outage")
        return self.table.get(text, list(self.default))


@dataclass
class ScriptedJudge:
    """Judge backend rating by criterion-name match inside the prompt."""

    ratings: dict[str, int] = field(default_factory=dict)
    default: int = 2
    fail_on: str | None = None

    def rate(self, prompt: str) -> int:
        if self.fail_on is not None and self.fail_on in prompt:
            raise BackendError("simulated judge outage")
        for key, rating in self.ratings.items():
            if key in prompt:
                return rating
        return self.default


__all__ = [
    "AcceptabilityScorer",
    "BackendError",
    "CapitalizedSpanRecognizer",
    "ConstantScorer",
    "EmbeddingBackend",
    "EntityRecognizer",
    "FlakyBackend",
    "HashEmbedder",
    "HttpEmbeddingBackend",
    "HttpJudge",
    "HttpRecognizer",
    "HttpScorer",
    "HttpTextBackend",
    "JudgeBackend",
    "MalformedOutputError",
    "RetryPolicy",
    "ScriptedBackend",
    "ScriptedJudge",
    "ScriptedRecognizer",
    "TableScorer",
    "TextBackend",
]
