"""Corpus ingestion and revision store tests."""
from __future__ import annotations

import hashlib
import json
import random

import pytest

from ragmark.kg.types import Entity, KnowledgeGraph, Relation, Triplet
from ragmark.qagen import QAPair
from ragmark.sampling import ROLE_ANSWER, QuestionType, enumerate_subgraphs
from ragmark.store.documents import (
    DocumentRecord,
    RawDocument,
    append_corpus,
    clean_text,
    content_hash,
    diff_corpus,
    ingest_documents,
    load_corpus,
)
from ragmark.store.revisions import (
    ENV_STORE,
    SPLIT_NAMES,
    DatasetRevision,
    RevisionStore,
    Version,
    assign_public_ids,
    build_revision,
    bump_version,
)


class TestCleanText:
    def test_newline_normalization_and_strip(self):
        assert clean_text("a\r\nb\rc\n") == "a\nb\nc"
        assert clean_text("  line one   \nline two\t\n\n") == "line one\nline two"
        assert clean_text(" \n \t ") == ""

    def test_interior_blank_lines_survive(self):
        assert clean_text("para one\n\npara two") == "para one\n\npara two"


class TestContentHash:
    def test_deterministic_and_content_sensitive(self):
        assert content_hash("abc") == content_hash("abc")
        assert content_hash("abc") != content_hash("abd")
        assert len(content_hash("abc")) == 64


class TestIngestDocuments:
    def batch(self):
        return [
            RawDocument(source="s1", text="First document.\r\n"),
            RawDocument(source="s2", text="   \n"),
            RawDocument(source="s3", text="Second document."),
            RawDocument(source="s4", text="First document."),
        ]

    def test_ids_cleaning_rejections_duplicates(self):
        report = ingest_documents(self.batch(), start_id=10, fetched_at="2026-01-01T00:00:00+00:00")
        assert [r.internal_id for r in report.records] == [10, 11]
        assert [r.text for r in report.records] == ["First document.", "Second document."]
        assert report.rejected == [{"source": "s2", "reason": "empty after cleaning"}]
        assert report.duplicates == 1
        assert all(r.fetched_at == "2026-01-01T00:00:00+00:00" for r in report.records)
        assert all(r.content_hash == content_hash(r.text) for r in report.records)

    def test_known_hashes_suppress_previously_seen_content(self):
        first = ingest_documents(self.batch())
        known = {r.content_hash for r in first.records}
        again = ingest_documents(self.batch(), start_id=50, known_hashes=known)
        assert again.records == []
        # s1 and s3 repeat known content; s4 repeats s1 within the batch.
        assert again.duplicates == 3

    def test_diff_corpus(self):
        report = ingest_documents(self.batch())
        prev = {report.records[0].content_hash}
        fresh = diff_corpus(prev, report.records)
        assert [r.source for r in fresh] == ["s3"]

    def test_corpus_file_round_trip(self, tmp_path):
        report = ingest_documents(self.batch(), fetched_at="2026-01-01T00:00:00+00:00")
        path = tmp_path / "nested" / "corpus.jsonl"
        append_corpus(path, report.records[:1])
        append_corpus(path, report.records[1:])
        assert load_corpus(path) == report.records
        assert load_corpus(tmp_path / "absent.jsonl") == []


class TestVersion:
    def test_parse_and_str(self):
        v = Version.parse(" 1.10.0 ")
        assert (v.major, v.minor, v.patch) == (1, 10, 0)
        assert str(v) == "1.10.0"

    def test_invalid_forms_rejected(self):
        for bad in ("1.2", "v1.2.3", "1.2.3.4", "", "1.-2.0", "one.two.three"):
            with pytest.raises(ValueError):
                Version.parse(bad)

    def test_numeric_ordering(self):
        assert Version.parse("1.10.0") > Version.parse("1.9.9")
        assert Version.parse("2.0.0") > Version.parse("1.99.99")
        ordered = sorted(
            Version.parse(s) for s in ("1.11.0", "1.2.0", "2.1.0", "1.10.0")
        )
        assert [str(v) for v in ordered] == ["1.2.0", "1.10.0", "1.11.0", "2.1.0"]


class TestBumpVersion:
    def test_minor_increment_resets_patch(self):
        assert str(bump_version("1.10.0")) == "1.11.0"
        assert str(bump_version("2.9.0")) == "2.10.0"
        assert str(bump_version(Version(1, 0, 7))) == "1.1.0"

    def test_random_versions_follow_the_rule(self):
        rng = random.Random(23)
        for _ in range(100):
            v = Version(rng.randint(0, 9), rng.randint(0, 99), rng.randint(0, 9))
            bumped = bump_version(v)
            assert bumped.major == v.major
            assert bumped.minor == v.minor + 1
            assert bumped.patch == 0


def make_record(internal_id, text=None):
    body = text or f"Document body number {internal_id}."
    return DocumentRecord(
        internal_id=internal_id,
        text=body,
        source=f"src-{internal_id}",
        fetched_at="2026-01-01T00:00:00+00:00",
        content_hash=content_hash(body),
    )


def spearman(mapping: dict[int, int]) -> float:
    ordered = sorted(mapping)
    n = len(ordered)
    d2 = sum((rank - mapping[internal]) ** 2 for rank, internal in enumerate(ordered))
    return 1 - 6 * d2 / (n * (n * n - 1))


class TestAssignPublicIds:
    def test_bijection_onto_dense_range(self):
        records = [make_record(i) for i in (3, 7, 11, 20)]
        mapping = assign_public_ids(records, seed=1)
        assert set(mapping) == {3, 7, 11, 20}
        assert sorted(mapping.values()) == [0, 1, 2, 3]

    def test_deterministic_per_seed(self):
        records = [make_record(i) for i in range(30)]
        assert assign_public_ids(records, seed=5) == assign_public_ids(records, seed=5)
        assert assign_public_ids(records, seed=5) != assign_public_ids(records, seed=6)

    def test_duplicate_internal_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate internal_ids"):
            assign_public_ids([make_record(1), make_record(1)], seed=0)

    def test_public_order_uncorrelated_with_internal_order(self):
        records = [make_record(i) for i in range(1000)]
        rho = spearman(assign_public_ids(records, seed=7))
        assert abs(rho) < 0.5

    def test_record_order_does_not_matter(self):
        records = [make_record(i) for i in range(20)]
        shuffled = list(reversed(records))
        assert assign_public_ids(records, seed=9) == assign_public_ids(shuffled, seed=9)


def make_pair(qtype, question, answer, *triplets, pair_id):
    g = KnowledgeGraph()
    g.merge(triplets)
    subgraphs = enumerate_subgraphs(g, qtype)
    assert len(subgraphs) == 1
    sg = subgraphs[0]
    return QAPair(
        question=question,
        answer=answer,
        answer_entities=sg.entities_with_role(ROLE_ANSWER),
        qtype=qtype,
        subgraph=sg,
        source_docs=sg.source_docs(),
        pair_id=pair_id,
    )


def make_triplet(subject, relation, obj, doc):
    return Triplet(
        subject=Entity(surface_form=subject),
        relation=Relation(label=relation),
        object=Entity(surface_form=obj),
        source_doc=doc,
    )


def sample_testset():
    return {
        QuestionType.SIMPLE: [
            make_pair(
                QuestionType.SIMPLE,
                "Who launched Falcon Heavy?",
                "SpaceX",
                make_triplet("Falcon Heavy", "launched by", "SpaceX", doc=0),
                pair_id="simple-00000",
            ),
            make_pair(
                QuestionType.SIMPLE,
                "Where is FAW headquartered?",
                "China",
                make_triplet("FAW", "headquartered in", "China", doc=1),
                pair_id="simple-00001",
            ),
        ],
        QuestionType.CONDITIONAL: [
            make_pair(
                QuestionType.CONDITIONAL,
                "Who plays guitar and was born in Ukraine?",
                "Roman Miroshnichenko",
                make_triplet("Roman Miroshnichenko", "plays", "guitar", doc=2),
                make_triplet("Roman Miroshnichenko", "born in", "Ukraine", doc=3),
                pair_id="conditional-00000",
            ),
        ],
    }


def sample_revision(seed=3):
    docs = [make_record(i) for i in range(4)]
    return build_revision(sample_testset(), docs, "1.0.0", seed=seed), docs


class TestBuildRevision:
    def test_question_ids_count_across_types_in_order(self):
        rev, _ = sample_revision()
        assert [q.question_id for q in rev.public_questions] == ["0", "1", "2"]
        assert [q.qtype for q in rev.public_questions] == ["Simple", "Simple", "Conditional"]
        assert str(rev.version) == "1.1.0"

    def test_private_rows_align_with_questions(self):
        rev, _ = sample_revision()
        by_id = {r.question_id: r for r in rev.private_qa}
        assert by_id["0"].answer == "SpaceX"
        assert by_id["0"].relevant_internal_ids == [0]
        assert by_id["2"].answer == "Roman Miroshnichenko"
        assert by_id["2"].relevant_internal_ids == [2, 3]
        assert by_id["2"].answer_entities == ["Roman Miroshnichenko"]

    def test_public_texts_sorted_by_public_id_with_full_mapping(self):
        rev, docs = sample_revision()
        assert [pid for pid, _ in rev.public_texts] == [0, 1, 2, 3]
        mapping = rev.mapping()
        assert sorted(mapping) == [d.internal_id for d in docs]
        by_internal = {d.internal_id: d.text for d in docs}
        for internal, public in mapping.items():
            assert dict(rev.public_texts)[public] == by_internal[internal]

    def test_dangling_document_reference_rejected(self):
        docs = [make_record(0)]  # pairs also reference docs 1..3
        with pytest.raises(ValueError, match="missing document"):
            build_revision(sample_testset(), docs, "1.0.0", seed=0)

    def test_empty_testset_refused(self):
        with pytest.raises(ValueError, match="empty test set"):
            build_revision({}, [make_record(0)], "1.0.0", seed=0)

    def test_answer_leaking_into_question_rejected(self):
        leaking = {
            QuestionType.SIMPLE: [
                make_pair(
                    QuestionType.SIMPLE,
                    "Is SpaceX who launched Falcon Heavy?",
                    "SpaceX",
                    make_triplet("Falcon Heavy", "launched by", "SpaceX", doc=0),
                    pair_id="simple-00000",
                )
            ]
        }
        with pytest.raises(ValueError, match="leaks"):
            build_revision(leaking, [make_record(0)], "1.0.0", seed=0)

    def test_insertion_order_of_testset_mapping_is_irrelevant(self):
        docs = [make_record(i) for i in range(4)]
        testset = sample_testset()
        scrambled = {
            QuestionType.CONDITIONAL: testset[QuestionType.CONDITIONAL],
            QuestionType.SIMPLE: testset[QuestionType.SIMPLE],
        }
        a = build_revision(testset, docs, "1.0.0", seed=3)
        b = build_revision(scrambled, docs, "1.0.0", seed=3)
        assert a.to_split_texts() == b.to_split_texts()


class TestSplitSerialization:
    def test_headers_and_trailing_newline(self):
        rev, _ = sample_revision()
        texts = rev.to_split_texts()
        assert set(texts) == set(SPLIT_NAMES)
        for name, body in texts.items():
            lines = body.splitlines()
            assert lines[0] == f"# split: {name}"
            assert lines[1] == "# revision: 1.1.0"
            assert lines[2].startswith("# columns: ")
            assert body.endswith("\n")

    def test_cells_are_json_so_tabs_and_newlines_survive(self):
        docs = [make_record(0, text="tab\there\nand a second line")]
        testset = {
            QuestionType.SIMPLE: [
                make_pair(
                    QuestionType.SIMPLE,
                    "Who launched Falcon Heavy?",
                    "SpaceX",
                    make_triplet("Falcon Heavy", "launched by", "SpaceX", doc=0),
                    pair_id="simple-00000",
                )
            ]
        }
        rev = build_revision(testset, docs, "1.0.0", seed=0)
        restored = DatasetRevision.from_split_texts(rev.to_split_texts())
        assert restored.public_texts[0][1] == "tab\there\nand a second line"

    def test_round_trip_is_byte_identical(self):
        rev, _ = sample_revision()
        texts = rev.to_split_texts()
        assert DatasetRevision.from_split_texts(texts).to_split_texts() == texts

    def test_missing_split_rejected(self):
        rev, _ = sample_revision()
        texts = rev.to_split_texts()
        del texts["private_qa"]
        with pytest.raises(ValueError, match="missing splits: private_qa"):
            DatasetRevision.from_split_texts(texts)

    def test_version_disagreement_rejected(self):
        rev, _ = sample_revision()
        texts = rev.to_split_texts()
        texts["private_qa"] = texts["private_qa"].replace("# revision: 1.1.0", "# revision: 9.9.9")
        with pytest.raises(ValueError, match="disagrees"):
            DatasetRevision.from_split_texts(texts)

    def test_header_name_mismatch_rejected(self):
        rev, _ = sample_revision()
        texts = rev.to_split_texts()
        texts["private_qa"] = texts["private_qa"].replace(
            "# split: private_qa", "# split: public_texts"
        )
        with pytest.raises(ValueError, match="header names"):
            DatasetRevision.from_split_texts(texts)


class TestRevisionValidate:
    def test_duplicate_public_id(self):
        rev, _ = sample_revision()
        rev.public_texts[1] = (0, rev.public_texts[1][1])
        with pytest.raises(ValueError, match="duplicate public_id"):
            rev.validate()

    def test_mapping_must_cover_public_ids(self):
        rev, _ = sample_revision()
        rev.private_mapping = rev.private_mapping[:-1]
        with pytest.raises(ValueError, match="map onto public_texts"):
            rev.validate()

    def test_question_sets_must_match(self):
        rev, _ = sample_revision()
        rev.private_qa = rev.private_qa[:-1]
        with pytest.raises(ValueError, match="same question ids"):
            rev.validate()

    def test_relevant_ids_must_resolve(self):
        rev, _ = sample_revision()
        rev.private_qa[0].relevant_internal_ids = [99]
        with pytest.raises(ValueError, match="not in private_mapping"):
            rev.validate()


class TestRevisionStore:
    def test_write_read_round_trip(self, tmp_path):
        rev, _ = sample_revision()
        store = RevisionStore(tmp_path)
        target = store.write(rev)
        assert target == tmp_path / "revisions" / "1.1.0"
        assert sorted(p.name for p in target.iterdir()) == sorted(
            f"{name}.tsv" for name in SPLIT_NAMES
        )
        loaded = store.read("1.1.0")
        assert loaded.to_split_texts() == rev.to_split_texts()

    def test_revisions_are_immutable(self, tmp_path):
        rev, _ = sample_revision()
        store = RevisionStore(tmp_path)
        store.write(rev)
        with pytest.raises(FileExistsError, match="immutable"):
            store.write(rev)

    def test_manifest_records_content_digests(self, tmp_path):
        rev, _ = sample_revision()
        store = RevisionStore(tmp_path)
        target = store.write(rev)
        (entry,) = store.manifest_entries()
        assert entry["version"] == "1.1.0"
        assert entry["sandbox"] is False
        assert entry["question_count"] == 3
        assert entry["document_count"] == 4
        for name in SPLIT_NAMES:
            data = (target / f"{name}.tsv").read_bytes()
            assert entry["content_roots"][name] == hashlib.sha256(data).hexdigest()

    def test_sandbox_and_public_streams_are_separate(self, tmp_path):
        rev, _ = sample_revision()
        store = RevisionStore(tmp_path)
        store.write(rev, sandbox=True)
        assert store.latest_version(sandbox=True) == Version(1, 1, 0)
        assert store.latest_version(sandbox=False) is None
        assert (tmp_path / "sandbox" / "1.1.0").exists()
        store.write(rev)  # same version in the public stream is fine
        assert store.latest_version(sandbox=False) == Version(1, 1, 0)

    def test_latest_version_is_numeric_max(self, tmp_path):
        store = RevisionStore(tmp_path)
        docs = [make_record(i) for i in range(4)]
        rev1 = build_revision(sample_testset(), docs, "1.1.0", seed=1)
        rev2 = build_revision(sample_testset(), docs, "1.9.0", seed=1)
        store.write(rev1)  # 1.2.0
        store.write(rev2)  # 1.10.0
        assert store.latest_version() == Version(1, 10, 0)

    def test_read_public_matches_public_view(self, tmp_path):
        rev, _ = sample_revision()
        store = RevisionStore(tmp_path)
        store.write(rev)
        view = store.read_public("1.1.0")
        assert view == rev.public_view()

    def test_missing_revision_raises(self, tmp_path):
        store = RevisionStore(tmp_path)
        with pytest.raises(FileNotFoundError):
            store.read("3.3.3")
        with pytest.raises(FileNotFoundError):
            store.read_public("3.3.3")

    def test_root_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(ENV_STORE, str(tmp_path))
        assert RevisionStore().root == tmp_path
        monkeypatch.delenv(ENV_STORE)
        with pytest.raises(ValueError, match=ENV_STORE):
            RevisionStore()

    def test_public_view_hides_private_parts(self):
        rev, _ = sample_revision()
        view = rev.public_view()
        assert not hasattr(view, "private_mapping")
        assert not hasattr(view, "private_qa")
        assert {q.qtype for q in view.questions} == {"Simple", "Conditional"}
