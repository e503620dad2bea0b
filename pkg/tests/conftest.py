"""Shared fixture machinery: a synthetic corpus with scripted backends.

Each fixture document describes one tiny world with eight two-token entity
names, chosen so every structural template occurs a known number of times:
per document the extractor yields 5 triplets, giving 5 Simple, 1 Set,
2 MultiHop and 2 Conditional subgraphs. The generation backend follows the
instructions inside the prompt it receives, so questions mention exactly the
entities their template designates.
"""
from __future__ import annotations

import re

import pytest

from ragmark.backends import (
    CapitalizedSpanRecognizer,
    ConstantScorer,
    ScriptedBackend,
    ScriptedJudge,
)
from ragmark.client.baseline import Submission, SubmissionAnswer
from ragmark.filtering.cascade import FilterBackends
from ragmark.pipeline import PipelineBackends, PipelineConfig, ReleaseSummary, release_increment
from ragmark.store.documents import RawDocument
from ragmark.store.revisions import DatasetRevision, RevisionStore

FIXTURE_NAMES = [
    "Arden", "Bryce", "Calder", "Dorian", "Elvan", "Farrow", "Gable", "Hollis",
    "Ilford", "Juno", "Kestrel", "Lorne", "Marlow", "Nerissa", "Orin", "Peralta",
    "Quimby", "Rosow", "Selby", "Tamsin", "Umber", "Vance", "Welles", "Xanthe",
    "Yardley", "Zephyr", "Abbott", "Briar", "Corwin", "Delmar",
]

_SLOT_RES = {
    "Simple": (
        re.compile(r'must mention "(?P<q>[^"]+)"'),
        re.compile(r'correct answer is "(?P<a>[^"]+)"'),
    ),
    "Set": (
        re.compile(r'must mention "(?P<q>[^"]+)"'),
        re.compile(r"correct answer lists: (?P<a>.+)\."),
    ),
    "MultiHop": (
        re.compile(r'fact mentioning\s+"(?P<q>[^"]+)"'),
        re.compile(r'correct answer is "(?P<a>[^"]+)"'),
    ),
    "Conditional": (
        re.compile(r"combine both conditions \((?P<q>[^)]+)\)"),
        re.compile(r'correct answer is "(?P<a>[^"]+)"'),
    ),
}

_QUESTION_FORMS = {
    "Simple": "Which entity is directly linked with {q} in the records?",
    "Set": "Which entries does {q} account for as a complete group?",
    "MultiHop": "Which entity connects through two steps from {q}?",
    "Conditional": "Which single entity satisfies both of these: {q}?",
}


class TemplateFollowingGenerator:
    """Deterministic generation backend that obeys its own prompt."""

    def complete(self, prompt: str) -> str:
        first = prompt.splitlines()[0]
        match = re.search(r"Write one (\w+) question", first)
        if not match:
            raise AssertionError(f"unrecognized generation prompt: {first!r}")
        qtype = match.group(1)
        q_re, a_re = _SLOT_RES[qtype]
        q_slot = q_re.search(prompt).group("q")
        answer = a_re.search(prompt).group("a").strip()
        question = _QUESTION_FORMS[qtype].format(q=q_slot)
        return f"Question: {question}\nAnswer: {answer}"


def fixture_doc_text(name: str) -> str:
    return (
        f"{name} Institute sits on {name} Plateau, according to the annual review. "
        f"{name} Collective produces {name} Engine and {name} Lantern. "
        f"{name} Observatory is based at {name} Summit and is operated by {name} Foundation."
    )


def fixture_extractor_reply(name: str) -> str:
    return "\n".join(
        [
            f"{name} Institute | located on | {name} Plateau",
            f"{name} Collective | produces | {name} Engine",
            f"{name} Collective | produces | {name} Lantern",
            f"{name} Observatory | based at | {name} Summit",
            f"{name} Observatory | operated by | {name} Foundation",
        ]
    )


def fixture_batch(names: list[str]) -> list[RawDocument]:
    return [RawDocument(source=f"doc-{name}", text=fixture_doc_text(name)) for name in names]


def fixture_backends(names: list[str]) -> PipelineBackends:
    return PipelineBackends(
        extractor=ScriptedBackend(
            responses={f"{name} Institute": fixture_extractor_reply(name) for name in names}
        ),
        generator=TemplateFollowingGenerator(),
        filters=FilterBackends(
            scorer=ConstantScorer(1.0),
            ner=CapitalizedSpanRecognizer(),
            probes=[ScriptedBackend(default="beyond my knowledge")],
            judge=ScriptedJudge(default=2),
        ),
    )


def build_release(
    store_root,
    names: list[str],
    quota: int,
    seed: int = 13,
    mirror_sandbox: bool = True,
) -> tuple[RevisionStore, ReleaseSummary]:
    store = RevisionStore(store_root)
    summary = release_increment(
        store,
        fixture_batch(names),
        fixture_backends(names),
        PipelineConfig(seed=seed, quota=quota),
        mirror_sandbox=mirror_sandbox,
    )
    return store, summary


def oracle_submission(
    rev: DatasetRevision,
    system_name: str = "oracle",
    retriever_name: str = "oracle-retriever",
    generator_name: str = "oracle-generator",
) -> Submission:
    """Ground-truth answers straight from the private splits."""
    mapping = rev.mapping()
    answers = {
        row.question_id: SubmissionAnswer(
            found_ids=[mapping[i] for i in row.relevant_internal_ids],
            model_answer=row.answer,
        )
        for row in rev.private_qa
    }
    return Submission(
        system_name=system_name,
        retriever_name=retriever_name,
        generator_name=generator_name,
        revision=str(rev.version),
        answers=answers,
    )


@pytest.fixture(scope="session")
def small_release(tmp_path_factory):
    """Six-document release mirrored into the sandbox stream (quota 3)."""
    root = tmp_path_factory.mktemp("small-store")
    return build_release(root, FIXTURE_NAMES[:6], quota=3)
