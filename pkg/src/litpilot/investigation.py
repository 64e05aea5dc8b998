"""Literature investigation: topic search with stats and summary, scholar
survey, k-means paper clustering, and clustering-based review generation."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import PaperDocument, tokenize
from .embedding import ProjectionModel, embed
from .errors import (
    BackendFailure,
    EmptyQuery,
    InvalidK,
    LimitExceeded,
    ScholarNotFound,
    UnknownDocId,
)
from .llm import ChatMessage, ChatRequest, get_template, render
from .query_engine import (
    STOPWORDS,
    Gazetteer,
    SearchPlugin,
    StructuredQuery,
    dispatch,
    extract_entities,
    rewrite_query,
)
from .retrieval import SearchHit

REVIEW_PAPER_LIMIT = 30


# ---------------------------------------------------------------------------
# summary statistics
# ---------------------------------------------------------------------------


@dataclass
class SummaryStats:
    year_histogram: dict[int, int]
    trend_slope: float
    top_keywords: list[tuple[str, float]]
    paper_count: int

    def to_dict(self) -> dict:
        return {
            "year_histogram": {str(y): c for y, c in sorted(self.year_histogram.items())},
            "trend_slope": self.trend_slope,
            "top_keywords": [[t, s] for t, s in self.top_keywords],
            "paper_count": self.paper_count,
        }

    def describe(self) -> str:
        hist = ", ".join(f"{y}: {c}" for y, c in sorted(self.year_histogram.items()))
        kws = ", ".join(t for t, _ in self.top_keywords)
        return (f"papers: {self.paper_count}\n"
                f"publication years: {hist or 'unknown'}\n"
                f"trend slope: {self.trend_slope:+.3f} papers/year\n"
                f"focal keywords: {kws or 'none'}")


def compute_summary_stats(papers: list[PaperDocument]) -> SummaryStats:
    """Year histogram, least-squares popularity trend, and tf-idf top
    keywords over titles+abstracts of the given papers."""
    hist = Counter(p.year for p in papers if p.year is not None)

    if len(hist) >= 2:
        lo, hi = min(hist), max(hist)
        xs = np.arange(lo, hi + 1, dtype=np.float64)
        ys = np.array([hist.get(int(x), 0) for x in xs], dtype=np.float64)
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = 0.0

    docs_tokens = [
        [t.lower() for t in tokenize(f"{p.title} {p.abstract}")]
        for p in papers
    ]
    n = len(papers)
    df: Counter[str] = Counter()
    tf: Counter[str] = Counter()
    for toks in docs_tokens:
        terms = {t for t in toks if t not in STOPWORDS and len(t) > 1}
        df.update(terms)
        tf.update(t for t in toks if t in terms)
    scored = [
        (t, tf[t] * (math.log((1 + n) / (1 + df[t])) + 1.0))
        for t in tf
    ]
    scored.sort(key=lambda ts: (-ts[1], ts[0]))

    return SummaryStats(
        year_histogram=dict(hist),
        trend_slope=slope,
        top_keywords=scored[:10],
        paper_count=len(papers),
    )


# ---------------------------------------------------------------------------
# k-means clustering
# ---------------------------------------------------------------------------


@dataclass
class ClusterAssignment:
    k: int
    labels: dict[str, int]
    centroids: np.ndarray  # (k, d), unit-norm rows
    objective: float


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [int(rng.integers(n))]
    d2 = np.sum((X - X[centers[0]]) ** 2, axis=1)
    for _ in range(k - 1):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with chosen centers
            remaining = [i for i in range(n) if i not in centers]
            centers.append(remaining[0] if remaining else centers[-1])
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
            centers.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[centers[-1]]) ** 2, axis=1))
    return X[centers].copy()


def cluster_papers(vectors: dict[str, np.ndarray], k: int, seed: int = 0,
                   restarts: int = 8) -> ClusterAssignment:
    """Seeded k-means++ / Lloyd over unit vectors, best of `restarts`
    deterministic restarts. Centroids are renormalized each update
    (closed-form optimum on the sphere), so the objective is non-increasing
    within a run; this is asserted every iteration. Empty clusters are
    repaired by stealing the farthest point from the largest cluster."""
    ids = sorted(vectors)
    n = len(ids)
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} outside [1, {n}]")
    X = np.stack([np.asarray(vectors[i], dtype=np.float64) for i in ids])

    best: ClusterAssignment | None = None
    for r in range(max(restarts, 1)):
        run = _lloyd_run(ids, X, k, seed=seed * max(restarts, 1) + r)
        if best is None or run.objective < best.objective:
            best = run
    return best


def _lloyd_run(ids: list[str], X: np.ndarray, k: int,
               seed: int) -> ClusterAssignment:
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(X, k, rng)

    def assign(C: np.ndarray) -> np.ndarray:
        d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        return d2.argmin(axis=1)  # ties -> lowest cluster index

    def objective(labels: np.ndarray, C: np.ndarray) -> float:
        return float(((X - C[labels]) ** 2).sum())

    labels = assign(centroids)
    prev_obj = objective(labels, centroids)
    for _ in range(100):
        new_c = centroids.copy()
        for j in range(k):
            members = X[labels == j]
            if len(members) == 0:
                continue
            mean = members.mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm > 1e-12:
                new_c[j] = mean / norm
        # repair empty clusters
        for j in range(k):
            if not np.any(labels == j):
                sizes = np.bincount(labels, minlength=k)
                big = int(sizes.argmax())
                members = np.where(labels == big)[0]
                dists = ((X[members] - new_c[big]) ** 2).sum(axis=1)
                steal = int(members[dists.argmax()])
                new_c[j] = X[steal]
                labels[steal] = j

        new_labels = assign(new_c)
        new_obj = objective(new_labels, new_c)
        assert new_obj <= prev_obj + 1e-9, "k-means objective increased"
        converged = np.array_equal(new_labels, labels) and np.allclose(
            new_c, centroids)
        centroids, labels, prev_obj = new_c, new_labels, new_obj
        if converged:
            break

    return ClusterAssignment(
        k=k,
        labels={doc_id: int(lbl) for doc_id, lbl in zip(ids, labels)},
        centroids=centroids,
        objective=prev_obj,
    )


# ---------------------------------------------------------------------------
# topic search
# ---------------------------------------------------------------------------


@dataclass
class TopicSearchDeps:
    backend: object
    gazetteer: Gazetteer
    plugins: dict[str, SearchPlugin]
    docs: dict[str, PaperDocument]
    chunk_to_doc: object  # callable chunk_id -> doc_id | None


@dataclass
class TopicSearchResult:
    query: str
    rewritten: str
    structured: StructuredQuery
    hits: list[SearchHit]
    stats: SummaryStats
    summary: str
    degraded: bool = False


def topic_search(user_query: str, deps: TopicSearchDeps,
                 k: int = 10) -> TopicSearchResult:
    """Rewrite -> extract -> dispatch -> merge -> stats -> summarize."""
    if not user_query.strip():
        raise EmptyQuery("query is empty")
    rewritten = rewrite_query(user_query, deps.backend)
    sq = extract_entities(rewritten, deps.gazetteer)
    dres = dispatch(sq, deps.plugins, k)

    best_by_doc: dict[str, SearchHit] = {}
    for hits in dres.results.values():
        for hit in hits:
            doc_id = deps.chunk_to_doc(hit.chunk_id)
            if doc_id is None:
                continue
            cur = best_by_doc.get(doc_id)
            if cur is None or hit.score > cur.score or (
                    hit.score == cur.score and hit.chunk_id < cur.chunk_id):
                best_by_doc[doc_id] = hit
    merged = sorted(best_by_doc.values(), key=lambda h: (-h.score, h.chunk_id))
    papers = [deps.docs[d] for d in best_by_doc if d in deps.docs]
    stats = compute_summary_stats(papers)

    summary = ""
    degraded = False
    if merged:
        snippets = "\n".join(f"- {h.snippet}" for h in merged[:5])
        prompt = render(get_template("topic_summary"),
                        {"stats": stats.describe(), "snippets": snippets})
        try:
            summary = deps.backend.complete(ChatRequest(
                messages=[ChatMessage(role="user", content=prompt)]
            )).content.strip()
        except BackendFailure:
            degraded = True
    return TopicSearchResult(
        query=user_query, rewritten=rewritten, structured=sq,
        hits=merged, stats=stats, summary=summary, degraded=degraded,
    )


# ---------------------------------------------------------------------------
# scholar survey
# ---------------------------------------------------------------------------


@dataclass
class ScholarGroup:
    label: str
    doc_ids: list[str]


def scholar_survey(name: str, docs: dict[str, PaperDocument],
                   model: ProjectionModel, backend,
                   seed: int = 0) -> list[ScholarGroup]:
    """Group a scholar's papers into research areas by clustering their
    title+abstract embeddings; each group is labeled via the backend."""
    if not name.strip():
        raise EmptyQuery("scholar name is empty")
    needle = name.strip().lower()
    matched = [
        d for d in docs.values()
        if any(needle in a.lower() for a in d.authors)
    ]
    if not matched:
        raise ScholarNotFound(name)

    vectors = {d.doc_id: embed(f"{d.title} {d.abstract}", model) for d in matched}
    k = min(math.ceil(len(matched) / 3), 5)
    assignment = cluster_papers(vectors, k, seed=seed)

    clusters: dict[int, list[str]] = {}
    for doc_id, lbl in assignment.labels.items():
        clusters.setdefault(lbl, []).append(doc_id)
    ordered = sorted(clusters.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    groups = []
    by_id = {d.doc_id: d for d in matched}
    for _, doc_ids in ordered:
        titles = "\n".join(f"- {by_id[i].title}" for i in doc_ids)
        prompt = render(get_template("area_label"), {"titles": titles})
        label = backend.complete(ChatRequest(
            messages=[ChatMessage(role="user", content=prompt)]
        )).content.strip()
        groups.append(ScholarGroup(label=label, doc_ids=doc_ids))
    return groups


# ---------------------------------------------------------------------------
# review generation
# ---------------------------------------------------------------------------


@dataclass
class ReviewOutline:
    title: str
    introduction: str
    body_sections: list[tuple[str, list[str], str]]  # heading, doc_ids, text
    conclusion: str
    bibliography: list[tuple[int, str, str]]  # ref_number, doc_id, citation
    violations: int = 0

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "introduction": self.introduction,
            "body_sections": [
                {"heading": h, "member_doc_ids": ids, "text": t}
                for h, ids, t in self.body_sections
            ],
            "conclusion": self.conclusion,
            "bibliography": [
                {"ref_number": num, "doc_id": d, "citation": c}
                for num, d, c in self.bibliography
            ],
            "violations": self.violations,
        }

    def to_markdown(self) -> str:
        parts = [f"# {self.title}", "", "## Introduction", "",
                 self.introduction, ""]
        for heading, _, text in self.body_sections:
            parts += [f"## {heading}", "", text, ""]
        parts += ["## Conclusion", "", self.conclusion, "", "## References", ""]
        for num, _, citation in self.bibliography:
            parts.append(f"[{num}] {citation}")
        return "\n".join(parts) + "\n"


def _citation_string(doc: PaperDocument) -> str:
    authors = ", ".join(doc.authors) if doc.authors else "Unknown authors"
    year = f" ({doc.year})" if doc.year is not None else ""
    venue = f" {doc.venue}." if doc.venue else ""
    return f"{authors}{year}. {doc.title}.{venue}".strip()


_MARKER_RE = re.compile(r"\[(\d+)\]")


@dataclass
class ReviewDeps:
    docs: dict[str, PaperDocument]
    model: ProjectionModel
    backend: object


def generate_review(doc_ids: list[str], deps: ReviewDeps,
                    seed: int = 0) -> ReviewOutline:
    """Cluster the papers, synthesize one review section per cluster with
    [n] citations, and assemble introduction/body/conclusion plus a
    bibliography numbered in first-citation order."""
    n = len(doc_ids)
    if n < 1:
        raise ValueError("need at least one paper")
    if n > REVIEW_PAPER_LIMIT:
        raise LimitExceeded(n, REVIEW_PAPER_LIMIT)
    seen = set()
    for d in doc_ids:
        if d not in deps.docs:
            raise UnknownDocId(d)
        seen.add(d)

    papers = {d: deps.docs[d] for d in doc_ids}
    vectors = {d: embed(f"{p.title} {p.abstract}", deps.model)
               for d, p in papers.items()}
    k = min(math.ceil(n / 5), 6)
    assignment = cluster_papers(vectors, k, seed=seed)

    clusters: dict[int, list[str]] = {}
    for d in doc_ids:  # input order within clusters
        if d in clusters.get(assignment.labels[d], []):
            continue
        clusters.setdefault(assignment.labels[d], []).append(d)
    ordered = sorted(clusters.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    # provisional reference numbers in section order
    prov: dict[str, int] = {}
    for _, members in ordered:
        for d in members:
            if d not in prov:
                prov[d] = len(prov) + 1

    backend = deps.backend

    def ask(template: str, slots: dict[str, str]) -> str:
        prompt = render(get_template(template), slots)
        return backend.complete(ChatRequest(
            messages=[ChatMessage(role="user", content=prompt)]
        )).content.strip()

    titles = "\n".join(f"- {papers[d].title}" for d in doc_ids)
    introduction = ask("review_intro", {"titles": titles})

    sections: list[tuple[str, list[str], str]] = []
    for _, members in ordered:
        listing = "\n".join(
            f"[{prov[d]}] {papers[d].title} — {papers[d].abstract}"
            for d in members
        )
        out = ask("review_section", {"papers": listing})
        heading = f"Group {len(sections) + 1}"
        text = out
        m = re.match(r"HEADING:\s*(.+?)(?:\n|$)", out)
        if m:
            heading = m.group(1).strip()
            text = out[m.end():].strip()
        sections.append((heading, list(members), text))

    conclusion = ask("review_conclusion", {
        "headings": "\n".join(f"- {h}" for h, _, _ in sections)
    })

    # renumber in first-citation order across the assembled text
    all_text = "\n".join([introduction] + [t for _, _, t in sections]
                         + [conclusion])
    valid = set(prov.values())
    first_order: list[int] = []
    for m in _MARKER_RE.finditer(all_text):
        num = int(m.group(1))
        if num in valid and num not in first_order:
            first_order.append(num)
    remaining = [num for num in sorted(valid) if num not in first_order]
    mapping = {old: new + 1 for new, old in enumerate(first_order + remaining)}

    violations = 0

    def remap(text: str) -> str:
        nonlocal violations
        out = []
        last = 0
        for m in _MARKER_RE.finditer(text):
            out.append(text[last:m.start()])
            num = int(m.group(1))
            if num in mapping:
                out.append(f"[{mapping[num]}]")
            else:
                violations += 1  # marker stripped
            last = m.end()
        out.append(text[last:])
        return "".join(out)

    introduction = remap(introduction)
    sections = [(h, ids, remap(t)) for h, ids, t in sections]
    conclusion = remap(conclusion)

    by_new = {mapping[prov[d]]: d for d in prov}
    bibliography = [
        (num, by_new[num], _citation_string(papers[by_new[num]]))
        for num in sorted(by_new)
    ]

    return ReviewOutline(
        title=f"A Review of {n} Papers" if n > 1 else "A Review of 1 Paper",
        introduction=introduction,
        body_sections=sections,
        conclusion=conclusion,
        bibliography=bibliography,
        violations=violations,
    )
