"""Reading copilot: question routing, retrieval-augmented answering, and
multi-document comparison (two to five papers)."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .corpus import Chunk, PaperDocument, tokenize_spans
from .errors import (
    BackendFailure,
    CountOutOfRange,
    DuplicateDocId,
    EmptyInput,
    EmptyQuestion,
    UnknownDocId,
)
from .llm import ChatMessage, ChatRequest, get_template, render
from .query_engine import STOPWORDS, StructuredQuery
from .retrieval import SearchHit

COMPARE_MIN = 2
COMPARE_MAX = 5
DEFAULT_ROUTE_THETA = 0.25
DEFAULT_ANSWER_K = 5


@dataclass
class RoutedQuestion:
    question: str
    route: str  # InPaper | OutOfPaper
    evidence: float


@dataclass
class Answer:
    text: str
    cited_chunk_ids: list[str]
    route: str
    degraded: bool = False


def route_question(question: str, paper_chunks: list[Chunk], model, backend,
                   theta: float = DEFAULT_ROUTE_THETA) -> RoutedQuestion:
    """Route a question as in-paper or out-of-paper. The backend decides
    with a single IN/OUT token; on any other output or backend failure the
    max-cosine evidence against the paper's chunks decides via theta."""
    if not question.strip():
        raise EmptyQuestion("question is empty")
    if not paper_chunks:
        raise ValueError("paper has no chunks")

    from .embedding import embed

    evidence = -1.0
    try:
        qvec = embed(question, model)
        for chunk in paper_chunks:
            evidence = max(evidence, float(qvec @ embed(chunk.text, model)))
    except EmptyInput:
        pass

    decision = ""
    prompt = render(get_template("route"), {"question": question})
    try:
        decision = backend.complete(ChatRequest(
            messages=[ChatMessage(role="user", content=prompt)]
        )).content.strip().upper()
    except BackendFailure:
        decision = ""

    if decision == "IN":
        route = "InPaper"
    elif decision == "OUT":
        route = "OutOfPaper"
    else:
        route = "InPaper" if evidence >= theta else "OutOfPaper"
    return RoutedQuestion(question=question, route=route, evidence=evidence)


@dataclass
class ReadingDeps:
    index: object  # VectorIndex
    model: object  # ProjectionModel
    backend: object
    plugins: dict = field(default_factory=dict)


def _doc_topk(index, doc_id: str, qvec: np.ndarray, k: int) -> list[SearchHit]:
    hits = [
        SearchHit(e.chunk_id, float(qvec @ e.vector.astype(np.float64)),
                  e.text[:200])
        for e in index.entries.values()
        if e.meta.get("doc_id") == doc_id
    ]
    hits.sort(key=lambda h: (-h.score, h.chunk_id))
    return hits[:k]


_SEGMENT_MARKER_RE = re.compile(r"\[S(\d+)\]")


def answer_question(rq: RoutedQuestion, paper: PaperDocument,
                    deps: ReadingDeps, k: int = DEFAULT_ANSWER_K) -> Answer:
    """Retrieval-augmented answer. In-paper questions retrieve from this
    paper's chunks; out-of-paper ones go through the search plugin. Cited
    chunk ids are mapped back from [Sn] markers; anything unmappable is
    dropped, so citations always come from the retrieved set."""
    from .embedding import embed

    if rq.route == "InPaper":
        qvec = embed(rq.question, deps.model)
        retrieved = _doc_topk(deps.index, paper.doc_id, qvec, k)
    else:
        plugin = deps.plugins.get("local-index")
        if plugin is None:
            retrieved = []
        else:
            keywords = [
                t.lower() for t in rq.question.split()
                if t.lower().strip("?.,!") not in STOPWORDS
            ]
            sq = StructuredQuery(keywords=[w.strip("?.,!") for w in keywords],
                                 free_text=rq.question)
            retrieved = plugin.execute(sq, k)

    if not retrieved:
        return Answer(text="insufficient context", cited_chunk_ids=[],
                      route=rq.route, degraded=True)

    segments = "\n".join(
        f"[S{i + 1}] {hit.snippet}" for i, hit in enumerate(retrieved)
    )
    prompt = render(get_template("read_answer"),
                    {"question": rq.question, "segments": segments})
    content = deps.backend.complete(ChatRequest(
        messages=[ChatMessage(role="user", content=prompt)]
    )).content.strip()

    cited: list[str] = []
    for m in _SEGMENT_MARKER_RE.finditer(content):
        idx = int(m.group(1)) - 1
        if 0 <= idx < len(retrieved):
            cid = retrieved[idx].chunk_id
            if cid not in cited:
                cited.append(cid)
    return Answer(text=content, cited_chunk_ids=cited, route=rq.route)


# ---------------------------------------------------------------------------
# multi-document comparison
# ---------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    per_paper: list[dict]  # {doc_id, title, abstract, contributions}
    table: list[tuple[str, str]]  # (approach, advantages), aligned to per_paper
    similarities: list[str]
    differences: list[str]

    def to_dict(self) -> dict:
        return {
            "per_paper": self.per_paper,
            "table": [{"approach": a, "advantages": v} for a, v in self.table],
            "similarities": self.similarities,
            "differences": self.differences,
        }

    def to_markdown(self) -> str:
        lines = ["# Comparison", ""]
        for paper in self.per_paper:
            lines += [f"## {paper['title']}", "", paper["abstract"], ""]
            for c in paper["contributions"]:
                lines.append(f"- {c}")
            lines.append("")
        lines += ["| Paper | Approach | Advantages |",
                  "| --- | --- | --- |"]
        for paper, (approach, advantages) in zip(self.per_paper, self.table):
            lines.append(f"| {paper['title']} | {approach} | {advantages} |")
        lines += ["", "## Similarities", ""]
        lines += [f"- {s}" for s in self.similarities]
        lines += ["", "## Differences", ""]
        lines += [f"- {d}" for d in self.differences]
        return "\n".join(lines) + "\n"


@dataclass
class CompareDeps:
    docs: dict[str, PaperDocument]
    backend: object


def _fallback_abstract(doc: PaperDocument, max_tokens: int = 150) -> str:
    if doc.abstract:
        return doc.abstract
    for section in doc.walk_sections():
        if section.body.strip():
            spans = tokenize_spans(section.body)
            if not spans:
                continue
            end = spans[min(max_tokens, len(spans)) - 1][1]
            return section.body[:end]
    return ""


def _prefixed(content: str, prefix: str) -> list[str]:
    out = []
    for line in content.split("\n"):
        line = line.strip()
        if line.upper().startswith(prefix):
            out.append(line[len(prefix):].strip())
    return out


def compare_papers(doc_ids: list[str], deps: CompareDeps) -> ComparisonReport:
    """Comparative analysis of two to five papers, assembled in input order.
    Bounds and id validity are enforced before any backend call."""
    n = len(doc_ids)
    if not COMPARE_MIN <= n <= COMPARE_MAX:
        raise CountOutOfRange(n, COMPARE_MIN, COMPARE_MAX)
    if len(set(doc_ids)) != n:
        raise DuplicateDocId("doc ids must be distinct")
    for d in doc_ids:
        if d not in deps.docs:
            raise UnknownDocId(d)

    per_paper: list[dict] = []
    table: list[tuple[str, str]] = []
    for d in doc_ids:
        doc = deps.docs[d]
        abstract = _fallback_abstract(doc)
        prompt = render(get_template("extract_contrib"),
                        {"title": doc.title, "abstract": abstract})
        content = deps.backend.complete(ChatRequest(
            messages=[ChatMessage(role="user", content=prompt)]
        )).content
        contributions = _prefixed(content, "CONTRIB:")
        approach = "; ".join(_prefixed(content, "APPROACH:"))
        advantages = "; ".join(_prefixed(content, "ADVANTAGE:"))
        per_paper.append({
            "doc_id": d,
            "title": doc.title,
            "abstract": abstract,
            "contributions": contributions,
        })
        table.append((approach, advantages))

    summaries = "\n".join(
        f"Paper {i + 1} ({p['title']}): approach: {a}; advantages: {v}"
        for i, (p, (a, v)) in enumerate(zip(per_paper, table))
    )
    content = deps.backend.complete(ChatRequest(
        messages=[ChatMessage(role="user", content=render(
            get_template("compare_summary"), {"summaries": summaries}))]
    )).content
    return ComparisonReport(
        per_paper=per_paper,
        table=table,
        similarities=_prefixed(content, "SIMILARITY:"),
        differences=_prefixed(content, "DIFFERENCE:"),
    )
