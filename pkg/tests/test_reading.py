import numpy as np
import pytest

import fixtures
from conftest import make_mock
from litpilot.corpus import ChunkPolicy, clean_text, parse_document, \
    split_into_chunks
from litpilot.embedding import TrainConfig, embed, init_projection
from litpilot.errors import (
    CountOutOfRange,
    DuplicateDocId,
    EmptyQuestion,
    UnknownDocId,
)
from litpilot.llm import MockBackend, MockRule
from litpilot.query_engine import ScriptedStubPlugin
from litpilot.reading import (
    COMPARE_MAX,
    COMPARE_MIN,
    CompareDeps,
    ReadingDeps,
    RoutedQuestion,
    answer_question,
    compare_papers,
    route_question,
)
from litpilot.retrieval import IndexEntry, SearchHit, VectorIndex

MODEL = init_projection(TrainConfig(d_out=48, seed=0))
POLICY = ChunkPolicy(max_tokens=64, overlap_tokens=8, min_tokens=4)


def fixture_doc(i: int):
    return parse_document(clean_text(
        fixtures.paper_source(fixtures.FIXTURE_PAPERS[i])))


def doc_index(docs):
    idx = VectorIndex(MODEL.d_out)
    entries = []
    for d in docs:
        for c in split_into_chunks(d, POLICY):
            entries.append(IndexEntry(
                chunk_id=c.chunk_id, vector=embed(c.text, MODEL),
                text=c.text, meta={"doc_id": d.doc_id}))
    idx.upsert(entries)
    return idx


# ---------------------------------------------------------------------------
# routing
# ---------------------------------------------------------------------------


def test_route_backend_decision_takes_precedence():
    doc = fixture_doc(0)
    chunks = split_into_chunks(doc, POLICY)
    out_backend = MockBackend([MockRule("contains", "", "OUT")])
    rq = route_question("Misinformation spreads quickly over social platforms?",
                        chunks, MODEL, out_backend)
    assert rq.route == "OutOfPaper"
    in_backend = MockBackend([MockRule("contains", "", "IN")])
    rq = route_question("completely unrelated cooking recipes",
                        chunks, MODEL, in_backend)
    assert rq.route == "InPaper"


def test_route_threshold_fallback_on_noise():
    doc = fixture_doc(0)
    chunks = split_into_chunks(doc, POLICY)
    noisy = MockBackend([MockRule("contains", "", "maybe, who knows")])
    # near-verbatim question: evidence is high, theta fallback keeps it in
    near = chunks[0].text
    rq = route_question(near, chunks, MODEL, noisy, theta=0.25)
    assert rq.evidence > 0.9
    assert rq.route == "InPaper"
    # force out with an impossible threshold
    rq2 = route_question(near, chunks, MODEL, noisy, theta=1.01)
    assert rq2.route == "OutOfPaper"


def test_route_backend_failure_falls_back():
    from litpilot.errors import BackendFailure

    class Down:
        def complete(self, request):
            raise BackendFailure("x")

    doc = fixture_doc(0)
    chunks = split_into_chunks(doc, POLICY)
    rq = route_question(chunks[0].text, chunks, MODEL, Down())
    assert rq.route == "InPaper"


def test_route_validation():
    doc = fixture_doc(0)
    chunks = split_into_chunks(doc, POLICY)
    backend = make_mock()
    with pytest.raises(EmptyQuestion):
        route_question("  ", chunks, MODEL, backend)
    with pytest.raises(ValueError):
        route_question("q?", [], MODEL, backend)


# ---------------------------------------------------------------------------
# answering
# ---------------------------------------------------------------------------


def test_answer_in_paper_citations_map_to_retrieved_chunks():
    doc = fixture_doc(0)
    idx = doc_index([doc])
    deps = ReadingDeps(index=idx, model=MODEL, backend=make_mock())
    rq = RoutedQuestion("How does misinformation spread?", "InPaper", 0.9)
    ans = answer_question(rq, doc, deps, k=3)
    assert "[S1]" in ans.text
    assert len(ans.cited_chunk_ids) == 1
    assert idx.get(ans.cited_chunk_ids[0]).meta["doc_id"] == doc.doc_id
    assert not ans.degraded


def test_answer_out_of_range_markers_dropped():
    doc = fixture_doc(0)
    idx = doc_index([doc])
    backend = make_mock(extra_rules=[(
        "contains", "Answer the question using only the numbered segments",
        "Cites [S1] and [S1] again and bogus [S99].")])
    deps = ReadingDeps(index=idx, model=MODEL, backend=backend)
    rq = RoutedQuestion("spread?", "InPaper", 0.9)
    ans = answer_question(rq, doc, deps, k=2)
    assert len(ans.cited_chunk_ids) == 1  # deduped, [S99] dropped


def test_answer_out_of_paper_uses_local_plugin():
    doc = fixture_doc(0)
    other = fixture_doc(7)
    idx = doc_index([doc, other])
    hits = [SearchHit(c.chunk_id, 0.5, c.text[:200])
            for c in split_into_chunks(other, POLICY)[:2]]
    plugin = ScriptedStubPlugin("local-index", hits)
    deps = ReadingDeps(index=idx, model=MODEL, backend=make_mock(),
                       plugins={"local-index": plugin})
    rq = RoutedQuestion("what about hybrid retrieval?", "OutOfPaper", 0.1)
    ans = answer_question(rq, doc, deps, k=2)
    assert ans.route == "OutOfPaper"
    assert ans.cited_chunk_ids[0] == hits[0].chunk_id


def test_answer_degrades_without_retrieval():
    doc = fixture_doc(0)
    idx = doc_index([doc])
    backend = make_mock()
    deps = ReadingDeps(index=idx, model=MODEL, backend=backend, plugins={})
    rq = RoutedQuestion("anything", "OutOfPaper", 0.0)
    ans = answer_question(rq, doc, deps)
    assert ans.degraded
    assert ans.text == "insufficient context"
    assert ans.cited_chunk_ids == []
    assert backend.transcript == []  # no backend call without context


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


def fixture_doc_map(count=6):
    docs = {}
    for i in range(count):
        d = fixture_doc(i)
        docs[d.doc_id] = d
    return docs


def test_compare_bounds_checked_before_backend():
    docs = fixture_doc_map()
    ids = sorted(docs)
    backend = make_mock()
    deps = CompareDeps(docs=docs, backend=backend)
    for bad in ([], ids[:1], ids[:6]):
        with pytest.raises(CountOutOfRange) as exc:
            compare_papers(bad, deps)
        assert exc.value.lo == COMPARE_MIN and exc.value.hi == COMPARE_MAX
    with pytest.raises(DuplicateDocId):
        compare_papers([ids[0], ids[0]], deps)
    with pytest.raises(UnknownDocId):
        compare_papers([ids[0], "missing"], deps)
    assert backend.transcript == []


def test_compare_report_structure():
    docs = fixture_doc_map()
    ids = sorted(docs)[:3]
    report = compare_papers(ids, CompareDeps(docs=docs, backend=make_mock()))
    assert [p["doc_id"] for p in report.per_paper] == ids  # input order
    assert len(report.table) == 3
    for p, (approach, advantages) in zip(report.per_paper, report.table):
        assert p["abstract"]
        assert p["contributions"] == ["a new method for the task"]
        assert approach == "supervised learning over curated data"
        assert advantages == "higher accuracy at lower cost"
    assert report.similarities == ["all papers study learning-based methods"]
    assert report.differences == ["they target different application domains"]
    md = report.to_markdown()
    assert "| Paper | Approach | Advantages |" in md
    assert "## Similarities" in md


def test_compare_uses_fallback_abstract():
    doc = parse_document("Title: No Abstract Paper\n\n# Body\n"
                         "This body stands in for the missing abstract.")
    other = fixture_doc(1)
    docs = {doc.doc_id: doc, other.doc_id: other}
    report = compare_papers([doc.doc_id, other.doc_id],
                            CompareDeps(docs=docs, backend=make_mock()))
    assert "stands in for the missing abstract" in report.per_paper[0]["abstract"]


def test_compare_accepts_two_and_five():
    docs = fixture_doc_map(6)
    ids = sorted(docs)
    deps = CompareDeps(docs=docs, backend=make_mock())
    assert len(compare_papers(ids[:2], deps).per_paper) == 2
    assert len(compare_papers(ids[:5], deps).per_paper) == 5
