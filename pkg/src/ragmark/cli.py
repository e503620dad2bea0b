"""Command line front door: store management, baseline runs, scoring, serving."""
from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import click

from .backends import (
    CapitalizedSpanRecognizer,
    ConstantScorer,
    HashEmbedder,
    HttpEmbeddingBackend,
    HttpJudge,
    HttpRecognizer,
    HttpScorer,
    HttpTextBackend,
    ScriptedBackend,
    ScriptedJudge,
)
from .client.baseline import Submission, SubmissionAnswer, local_evaluate, run_baseline
from .client.baseline import submit as post_submission
from .client.prompts import PromptSpec
from .filtering.cascade import FilterBackends
from .filtering.stages import FilterConfig
from .pipeline import PipelineBackends, PipelineConfig, ingest_increment, release_increment
from .qagen import PromptCatalog
from .report import write_report
from .sampling import EnumerationLimits
from .scoring import MetricReport
from .store.documents import RawDocument, ingest_documents, load_corpus
from .store.revisions import SPLIT_NAMES, RevisionStore, Version


def _read_batch(paths: tuple[str, ...]) -> list[RawDocument]:
    """Each path is one raw text document; .jsonl files carry one doc per line."""
    batch: list[RawDocument] = []
    for raw in paths:
        path = Path(raw)
        if path.suffix == ".jsonl":
            for i, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
                if not line.strip():
                    continue
                row = json.loads(line)
                batch.append(RawDocument(source=row.get("source", f"{path}:{i}"), text=row["text"]))
        else:
            batch.append(RawDocument(source=str(path), text=path.read_text(encoding="utf-8")))
    return batch


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _text_backend(cfg: dict):
    kind = cfg.get("kind", "http")
    if kind == "http":
        return HttpTextBackend(cfg["url"], timeout=cfg.get("timeout", 60.0))
    if kind == "scripted":
        table = json.loads(Path(cfg["file"]).read_text(encoding="utf-8")) if "file" in cfg else {}
        return ScriptedBackend(responses=table, default=cfg.get("default"))
    raise click.ClickException(f"unknown text backend kind: {kind}")


def _embedder(cfg: dict):
    kind = cfg.get("kind", "hash")
    if kind == "hash":
        return HashEmbedder(dim=cfg.get("dim", 512))
    if kind == "http":
        return HttpEmbeddingBackend(cfg["url"], timeout=cfg.get("timeout", 60.0))
    raise click.ClickException(f"unknown embedder kind: {kind}")


def _scorer(cfg: dict):
    kind = cfg.get("kind", "constant")
    if kind == "constant":
        return ConstantScorer(value=cfg.get("value", 1.0))
    if kind == "http":
        return HttpScorer(cfg["url"], timeout=cfg.get("timeout", 60.0))
    raise click.ClickException(f"unknown scorer kind: {kind}")


def _recognizer(cfg: dict):
    kind = cfg.get("kind", "capitalized")
    if kind == "capitalized":
        return CapitalizedSpanRecognizer()
    if kind == "http":
        return HttpRecognizer(cfg["url"], timeout=cfg.get("timeout", 60.0))
    raise click.ClickException(f"unknown recognizer kind: {kind}")


def _judge(cfg: dict):
    kind = cfg.get("kind", "constant")
    if kind == "constant":
        return ScriptedJudge(default=cfg.get("rating", 2))
    if kind == "http":
        return HttpJudge(cfg["url"], timeout=cfg.get("timeout", 60.0))
    raise click.ClickException(f"unknown judge kind: {kind}")


def _prompt_spec(config: dict) -> PromptSpec:
    prompt = config.get("prompt", {})
    spec = PromptSpec()
    return PromptSpec(
        template=prompt.get("template", spec.template),
        query_prefix=prompt.get("query_prefix", spec.query_prefix),
        doc_prefix=prompt.get("doc_prefix", spec.doc_prefix),
        max_context_chars=prompt.get("max_context_chars", spec.max_context_chars),
    )


def _pipeline_backends(config: dict) -> PipelineBackends:
    backends = config.get("backends", {})
    for required in ("extractor", "generator"):
        if required not in backends:
            raise click.ClickException(f"config must define backends.{required}")
    probes = [_text_backend(p) for p in backends.get("probes", [])]
    if not probes:
        raise click.ClickException("config must define at least one backends.probes entry")
    locale = config.get("pipeline", {}).get("locale", "en")
    filters = FilterBackends(
        scorer=_scorer(backends.get("scorer", {})),
        ner=_recognizer(backends.get("ner", {})),
        probes=probes,
        judge=_judge(backends.get("judge", {})),
    )
    return PipelineBackends(
        extractor=_text_backend(backends["extractor"]),
        generator=_text_backend(backends["generator"]),
        filters=filters,
        gen_catalog=PromptCatalog.load(locale),
    )


def _pipeline_config(config: dict, seed: int | None, quota: int | None) -> PipelineConfig:
    pipe = config.get("pipeline", {})
    limits = None
    if pipe.get("max_set_fanout") or pipe.get("max_subgraphs"):
        limits = EnumerationLimits(
            max_set_fanout=pipe.get("max_set_fanout"),
            max_subgraphs=pipe.get("max_subgraphs"),
        )
    filters = FilterConfig(
        acceptability_threshold=pipe.get("acceptability_threshold", 0.5),
        closed_book_ratio=pipe.get("closed_book_ratio", 1.0),
        theta=pipe.get("theta", 0.75),
        theta_bridge=pipe.get("theta_bridge", 0.75),
        trim_fraction=pipe.get("trim_fraction", 0.05),
    )
    return PipelineConfig(
        seed=seed if seed is not None else pipe.get("seed", 0),
        quota=quota if quota is not None else pipe.get("quota", 150),
        regen_attempts=pipe.get("regen_attempts", 0),
        limits=limits,
        filters=filters,
    )


@click.group()
def main() -> None:
    """Versioned RAG benchmark tooling."""


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--store", required=True, type=click.Path(), help="Storage root directory.")
def ingest(paths: tuple[str, ...], store: str) -> None:
    """Clean documents into the corpus lineage, deduplicating by content."""
    outcome = ingest_increment(RevisionStore(store), _read_batch(paths))
    click.echo(
        f"ingested {len(outcome.records)} new, "
        f"{outcome.duplicates} duplicate(s), {outcome.rejected} rejected"
    )


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--store", required=True, type=click.Path())
def diff(paths: tuple[str, ...], store: str) -> None:
    """Show which documents would be new relative to the stored corpus."""
    revision_store = RevisionStore(store)
    known = {r.content_hash for r in load_corpus(revision_store.corpus_path)}
    report = ingest_documents(_read_batch(paths), known_hashes=known)
    for record in report.records:
        click.echo(f"new: {record.source}")
    click.echo(f"{len(report.records)} new, {report.duplicates} already known")


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--store", required=True, type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Public-id shuffle seed.")
@click.option("--quota", type=int, default=None, help="Questions per type.")
@click.option("--sandbox", is_flag=True, help="Release into the sandbox stream.")
@click.option("--mirror-sandbox", is_flag=True, help="Also write the revision as a sandbox copy.")
def release(
    paths: tuple[str, ...],
    store: str,
    config_path: str,
    seed: int | None,
    quota: int | None,
    sandbox: bool,
    mirror_sandbox: bool,
) -> None:
    """Build and release a new benchmark revision from a document increment."""
    config = _load_config(config_path)
    summary = release_increment(
        RevisionStore(store),
        _read_batch(paths),
        _pipeline_backends(config),
        _pipeline_config(config, seed, quota),
        sandbox=sandbox,
        mirror_sandbox=mirror_sandbox,
    )
    build = summary.build
    click.echo(f"released revision {summary.revision.version}")
    click.echo(
        f"documents: {len(summary.new_records)} new, "
        f"{summary.duplicates} duplicate(s), {summary.rejected} rejected"
    )
    click.echo(
        f"triplets: {build.graph_build.extracted} extracted, "
        f"{build.graph_build.discarded_known} already known"
    )
    for qtype, count in sorted(build.subgraph_counts.items(), key=lambda kv: kv[0].value):
        click.echo(f"subgraphs[{qtype.value}]: {count}")
    click.echo(
        f"pairs: {build.generated} generated, {build.generation_failures} malformed, "
        f"{len(build.cascade.rejected)} filtered out, {len(build.cascade.quarantined)} quarantined"
    )
    for qtype in sorted(build.testset, key=lambda qt: qt.value):
        click.echo(f"testset[{qtype.value}]: {len(build.testset[qtype])}")


@main.command()
@click.option("--store", required=True, type=click.Path())
@click.option("--version", "version_str", default=None, help="Defaults to the latest revision.")
@click.option("--sandbox", is_flag=True, help="Fetch from the sandbox stream (all four splits).")
@click.option("--out", "out_dir", required=True, type=click.Path())
def fetch(store: str, version_str: str | None, sandbox: bool, out_dir: str) -> None:
    """Copy a revision's split files into a local directory."""
    revision_store = RevisionStore(store)
    version = Version.parse(version_str) if version_str else revision_store.latest_version(sandbox=sandbox)
    if version is None:
        raise click.ClickException("store has no released revisions")
    source = revision_store.revision_dir(version, sandbox)
    if not source.is_dir():
        raise click.ClickException(f"revision {version} not found")
    names = SPLIT_NAMES if sandbox else ("public_texts", "public_questions")
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    for name in names:
        shutil.copyfile(source / f"{name}.tsv", target / f"{name}.tsv")
    click.echo(f"fetched {version} ({len(names)} split files) into {target}")


@main.command()
@click.option("--store", required=True, type=click.Path())
@click.option("--version", "version_str", default=None)
@click.option("--sandbox", is_flag=True, help="Run over the sandbox stream.")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--k", type=int, default=None, help="Chunks retrieved per question.")
def baseline(
    store: str, version_str: str | None, sandbox: bool, config_path: str, out_path: str, k: int | None
) -> None:
    """Run the retrieve-then-generate baseline and write a submission file."""
    config = _load_config(config_path)
    backends = config.get("backends", {})
    if "generator" not in backends:
        raise click.ClickException("config must define backends.generator")
    revision_store = RevisionStore(store)
    version = Version.parse(version_str) if version_str else revision_store.latest_version(sandbox=sandbox)
    if version is None:
        raise click.ClickException("store has no released revisions")
    view = revision_store.read_public(version, sandbox=sandbox)
    names = config.get("names", {})
    sub = run_baseline(
        view,
        retriever=_embedder(backends.get("embedder", {})),
        generator=_text_backend(backends["generator"]),
        spec=_prompt_spec(config),
        k=k if k is not None else config.get("k", 5),
        response_cap=config.get("response_cap", 4000),
        system_name=names.get("system", "baseline"),
        retriever_name=names.get("retriever", "baseline-retriever"),
        generator_name=names.get("generator", "baseline-generator"),
        similarity=config.get("similarity", "cosine"),
    )
    sub.save(out_path)
    failed = len(sub.notes)
    click.echo(f"answered {len(sub.answers)} question(s), {failed} failure note(s)")
    click.echo(f"submission written to {out_path}")


@main.command()
@click.argument("answers_path", type=click.Path(exists=True))
@click.option("--revision", required=True, help="Revision the answers target.")
@click.option("--system", required=True)
@click.option("--retriever", required=True)
@click.option("--generator", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def package(
    answers_path: str, revision: str, system: str, retriever: str, generator: str, out_path: str
) -> None:
    """Wrap a raw answers map into a named, submittable file."""
    raw = json.loads(Path(answers_path).read_text(encoding="utf-8"))
    answers = {
        str(qid): SubmissionAnswer(
            found_ids=list(item["found_ids"]), model_answer=item["model_answer"]
        )
        for qid, item in raw.items()
    }
    sub = Submission(
        system_name=system,
        retriever_name=retriever,
        generator_name=generator,
        revision=str(Version.parse(revision)),
        answers=answers,
    )
    sub.save(out_path)
    click.echo(f"packaged {len(answers)} answer(s) into {out_path}")


@main.command(name="submit")
@click.argument("submission_path", type=click.Path(exists=True))
@click.option("--url", required=True, help="Evaluation service base URL.")
def submit_cmd(submission_path: str, url: str) -> None:
    """Send a submission file to the evaluation service."""
    sub = Submission.load(submission_path)
    ack = post_submission(sub, url)
    click.echo(json.dumps(ack, indent=2, sort_keys=True))


@main.command(name="sandbox-eval")
@click.argument("submission_path", type=click.Path(exists=True))
@click.option("--store", required=True, type=click.Path())
@click.option("--k", type=int, default=5)
@click.option("--out", "out_path", default=None, type=click.Path(), help="Write metrics JSON here.")
@click.option("--report-dir", default=None, type=click.Path(), help="Render table and figures here.")
def sandbox_eval(
    submission_path: str, store: str, k: int, out_path: str | None, report_dir: str | None
) -> None:
    """Score a submission against locally held sandbox splits."""
    sub = Submission.load(submission_path)
    revision_store = RevisionStore(store)
    rev = revision_store.read(Version.parse(sub.revision), sandbox=True)
    result = local_evaluate(sub, rev, k=k)
    click.echo(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    if out_path:
        Path(out_path).write_text(
            json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        click.echo(f"metrics written to {out_path}")
    if report_dir:
        written = write_report(result, report_dir)
        for path in written["tables"] + written["figures"]:
            click.echo(f"report file: {path}")


@main.command()
@click.option("--metrics", "metrics_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
def report(metrics_path: str, out_dir: str) -> None:
    """Render a saved metrics JSON as a delimited table plus figures."""
    raw = json.loads(Path(metrics_path).read_text(encoding="utf-8"))
    written = write_report(MetricReport.from_dict(raw), out_dir)
    for path in written["tables"] + written["figures"]:
        click.echo(f"report file: {path}")


@main.command()
@click.option("--store", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--ledger", "ledger_path", default=None, type=click.Path())
@click.option("--aggregate-n", type=int, default=3, help="Revisions per aggregate row.")
@click.option("--k", type=int, default=5)
def serve(
    store: str, host: str, port: int, ledger_path: str | None, aggregate_n: int, k: int
) -> None:
    """Run the evaluation service (admin token from RAGMARK_ADMIN_TOKEN)."""
    import uvicorn

    from .service.app import ServiceConfig, create_app

    app = create_app(
        ServiceConfig(store_root=store, ledger_path=ledger_path, aggregate_recent=aggregate_n, k=k)
    )
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
