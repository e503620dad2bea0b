"""End-to-end benchmark construction: corpus increment to released revision."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .backends import RetryPolicy, TextBackend
from .filtering.cascade import (
    DEFAULT_QUOTA,
    CascadeResult,
    FilterBackends,
    finalize_testset,
    run_cascade,
)
from .filtering.stages import FilterConfig
from .kg.extraction import extract_triplets
from .kg.linking import (
    NormalizationAudit,
    VectorEntityIndex,
    match_entity_candidates,
    normalize_triplet,
)
from .kg.novelty import KnowledgeBaseLookup, SetKnowledgeBase, filter_novel
from .kg.types import KnowledgeGraph, Triplet
from .qagen import MalformedGenerationError, PromptCatalog, QAPair, generate_qa
from .sampling import EnumerationLimits, QuestionType, enumerate_subgraphs
from .store.documents import DocumentRecord, RawDocument, append_corpus, ingest_documents, load_corpus
from .store.revisions import DatasetRevision, RevisionStore, build_revision

logger = logging.getLogger(__name__)


@dataclass
class PipelineBackends:
    """Every model endpoint the construction pipeline may call."""

    extractor: TextBackend
    generator: TextBackend
    filters: FilterBackends
    resolver: TextBackend | None = None
    entity_index: VectorEntityIndex | None = None
    relation_index: VectorEntityIndex | None = None
    kb: KnowledgeBaseLookup | None = None
    gen_catalog: PromptCatalog | None = None
    retry: RetryPolicy | None = None


@dataclass
class PipelineConfig:
    seed: int = 0
    quota: int = DEFAULT_QUOTA
    regen_attempts: int = 0
    limits: EnumerationLimits | None = None
    filters: FilterConfig = field(default_factory=FilterConfig)


@dataclass
class GraphBuild:
    graph: KnowledgeGraph
    audit: NormalizationAudit
    extracted: int = 0
    discarded_known: int = 0


@dataclass
class BenchmarkBuild:
    graph_build: GraphBuild
    subgraph_counts: dict[QuestionType, int]
    generated: int
    generation_failures: int
    cascade: CascadeResult
    testset: dict[QuestionType, list[QAPair]]


def build_graph(
    records: Sequence[DocumentRecord],
    backends: PipelineBackends,
) -> GraphBuild:
    """Extract, normalize against the knowledge base, keep the novel facts."""
    build = GraphBuild(graph=KnowledgeGraph(), audit=NormalizationAudit())
    normalize = backends.resolver is not None and (
        backends.entity_index is not None or backends.relation_index is not None
    )
    triplets: list[Triplet] = []
    for record in records:
        extracted = extract_triplets(record, backends.extractor, retry=backends.retry)
        build.extracted += len(extracted)
        for t in extracted:
            if normalize:
                cands = {
                    "subject": match_entity_candidates(t.subject, backends.entity_index)
                    if backends.entity_index
                    else [],
                    "relation": backends.relation_index.match(t.relation.normalized_label)
                    if backends.relation_index
                    else [],
                    "object": match_entity_candidates(t.object, backends.entity_index)
                    if backends.entity_index
                    else [],
                }
                t = normalize_triplet(
                    t,
                    cands,
                    backends.resolver,
                    context=record.text,
                    audit=build.audit,
                    retry=backends.retry,
                )
            triplets.append(t)
    kb = backends.kb if backends.kb is not None else SetKnowledgeBase()
    novel = filter_novel(triplets, kb)
    build.discarded_known = len(triplets) - len(novel)
    build.graph.merge(novel)
    return build


def generate_pairs(
    graph: KnowledgeGraph,
    backends: PipelineBackends,
    config: PipelineConfig | None = None,
) -> tuple[list[QAPair], dict[QuestionType, int], int]:
    """Enumerate template subgraphs and generate one QA pair per subgraph.

    Pair ids are assigned per type in enumeration order, so downstream
    tie-breaks and sampling are reproducible run to run.
    """
    config = config or PipelineConfig()
    pairs: list[QAPair] = []
    counts: dict[QuestionType, int] = {}
    failures = 0
    for qtype in QuestionType:
        subgraphs = enumerate_subgraphs(graph, qtype, limits=config.limits)
        counts[qtype] = len(subgraphs)
        for i, sg in enumerate(subgraphs):
            pair_id = f"{qtype.value.lower()}-{i:05d}"
            try:
                pairs.append(
                    generate_qa(
                        sg,
                        backends.generator,
                        catalog=backends.gen_catalog,
                        regen_attempts=config.regen_attempts,
                        retry=backends.retry,
                        pair_id=pair_id,
                    )
                )
            except MalformedGenerationError as exc:
                failures += 1
                logger.warning("subgraph %s: generation failed: %s", pair_id, exc)
    return pairs, counts, failures


def build_benchmark(
    records: Sequence[DocumentRecord],
    backends: PipelineBackends,
    config: PipelineConfig | None = None,
) -> BenchmarkBuild:
    """The full construction pass over one corpus increment."""
    config = config or PipelineConfig()
    graph_build = build_graph(records, backends)
    pairs, counts, failures = generate_pairs(graph_build.graph, backends, config)
    doc_texts = {record.internal_id: record.text for record in records}
    cascade = run_cascade(pairs, doc_texts, backends.filters, config.filters)
    testset = finalize_testset(cascade.passed, quota=config.quota, seed=config.seed)
    return BenchmarkBuild(
        graph_build=graph_build,
        subgraph_counts=counts,
        generated=len(pairs),
        generation_failures=failures,
        cascade=cascade,
        testset=testset,
    )


@dataclass
class ReleaseSummary:
    revision: DatasetRevision
    build: BenchmarkBuild
    new_records: list[DocumentRecord]
    duplicates: int
    rejected: int


def ingest_increment(store: RevisionStore, batch: Sequence[RawDocument]) -> "IngestOutcome":
    """Clean and dedup a raw batch against the store's corpus lineage."""
    existing = load_corpus(store.corpus_path)
    known = {record.content_hash for record in existing}
    next_id = max((record.internal_id for record in existing), default=-1) + 1
    report = ingest_documents(batch, start_id=next_id, known_hashes=known)
    append_corpus(store.corpus_path, report.records)
    return IngestOutcome(
        records=report.records, duplicates=report.duplicates, rejected=len(report.rejected)
    )


@dataclass
class IngestOutcome:
    records: list[DocumentRecord]
    duplicates: int
    rejected: int


def release_increment(
    store: RevisionStore,
    batch: Sequence[RawDocument],
    backends: PipelineBackends,
    config: PipelineConfig | None = None,
    sandbox: bool = False,
    mirror_sandbox: bool = False,
) -> ReleaseSummary:
    """Ingest a batch, build the benchmark over it, and release a revision.

    ``sandbox`` routes the release to the sandbox stream instead; with
    ``mirror_sandbox`` the same revision is additionally written there, giving
    users a fully local replica of exactly what the service scores against.
    """
    config = config or PipelineConfig()
    outcome = ingest_increment(store, batch)
    if not outcome.records:
        raise ValueError("nothing to release: batch contained no new documents")
    build = build_benchmark(outcome.records, backends, config)
    latest = store.latest_version(sandbox=sandbox) or "1.0.0"
    revision = build_revision(build.testset, outcome.records, latest, seed=config.seed)
    store.write(revision, sandbox=sandbox)
    if mirror_sandbox and not sandbox:
        store.write(revision, sandbox=True)
    return ReleaseSummary(
        revision=revision,
        build=build,
        new_records=outcome.records,
        duplicates=outcome.duplicates,
        rejected=outcome.rejected,
    )


__all__ = [
    "BenchmarkBuild",
    "GraphBuild",
    "IngestOutcome",
    "PipelineBackends",
    "PipelineConfig",
    "ReleaseSummary",
    "build_benchmark",
    "build_graph",
    "generate_pairs",
    "ingest_increment",
    "release_increment",
]
