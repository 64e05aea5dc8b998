"""Query rewriting, gazetteer entity extraction, and search-plugin dispatch."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import clean_text, tokenize_spans
from .errors import BackendFailure, EmptyQuery, NoPluginMatched
from .llm import ChatMessage, ChatRequest, get_template, render
from .retrieval import SearchFilter, SearchHit

# Small built-in stopword lists (English + Chinese); see README for scope.
STOPWORDS_EN = {
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "from", "by",
    "with", "about", "as", "is", "are", "was", "were", "be", "been", "being",
    "what", "which", "who", "whom", "whose", "when", "where", "how", "why",
    "can", "could", "should", "would", "do", "does", "did", "has", "have",
    "had", "and", "or", "not", "no", "it", "its", "this", "that", "these",
    "those", "there", "their", "they", "them", "we", "us", "our", "you",
    "your", "i", "me", "my",
}
STOPWORDS_ZH = {
    "的", "了", "在", "是", "我", "有", "和", "就", "都", "而", "及", "与",
    "着", "或", "一个", "没有", "我们", "你们", "他们", "什么", "哪些",
}
STOPWORDS = STOPWORDS_EN | STOPWORDS_ZH


@dataclass(frozen=True)
class Gazetteer:
    scholars: frozenset[str] = frozenset()
    institutions: frozenset[str] = frozenset()
    domains: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("scholars", "institutions", "domains"):
            vals = getattr(self, name)
            if isinstance(vals, (set, list, tuple)):
                object.__setattr__(self, name, frozenset(vals))
            lows = [v.lower() for v in getattr(self, name)]
            if any(not v.strip() for v in lows):
                raise ValueError(f"{name}: empty entry")
            if len(set(lows)) != len(lows):
                raise ValueError(f"{name}: duplicate entry (case-insensitive)")

    @classmethod
    def from_tsv(cls, path: str | Path) -> "Gazetteer":
        """Load from TSV with columns (type, phrase); type in
        {scholar, institution, domain}."""
        buckets = {"scholar": set(), "institution": set(), "domain": set()}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            kind, phrase = line.split("\t", 1)
            buckets[kind.strip()].add(phrase.strip())
        return cls(scholars=frozenset(buckets["scholar"]),
                   institutions=frozenset(buckets["institution"]),
                   domains=frozenset(buckets["domain"]))


@dataclass
class StructuredQuery:
    scholars: list[str] = field(default_factory=list)
    institutions: list[str] = field(default_factory=list)
    years: list[int] = field(default_factory=list)
    year_ranges: list[tuple[int | None, int | None]] = field(default_factory=list)
    domains: list[str] = field(default_factory=list)
    keywords: list[str] = field(default_factory=list)
    free_text: str = ""

    def is_empty(self) -> bool:
        return not (self.scholars or self.institutions or self.years
                    or self.year_ranges or self.domains or self.keywords
                    or self.free_text)

    def to_filter(self) -> SearchFilter:
        years = list(self.years)
        lo = min(years) if years else None
        hi = max(years) if years else None
        open_lo = open_hi = False
        for rlo, rhi in self.year_ranges:
            if rlo is None:
                open_lo = True
            else:
                lo = rlo if lo is None else min(lo, rlo)
            if rhi is None:
                open_hi = True
            else:
                hi = rhi if hi is None else max(hi, rhi)
        # an open-ended range widens that side of the union to unbounded,
        # but only if some constraint exists at all
        if open_lo and (hi is not None or lo is not None):
            lo = None
        if open_hi and (lo is not None or hi is not None):
            hi = None
        return SearchFilter(
            scholars=tuple(self.scholars),
            institutions=tuple(self.institutions),
            domains=tuple(self.domains),
            year_range=(lo, hi),
        )


def rewrite_query(user_query: str, backend) -> str:
    """Backend rewrite of a noisy query; falls back to the cleaned original
    on backend failure or empty output. Never returns empty text."""
    query = user_query.strip()
    if not query:
        raise EmptyQuery("query is empty after trimming")
    prompt = render(get_template("query_rewrite"), {"query": query})
    try:
        out = backend.complete(ChatRequest(
            messages=[ChatMessage(role="user", content=prompt)]
        )).content
    except BackendFailure:
        out = ""
    out = out.strip().strip('"\'“”').strip()
    return out if out else clean_text(query)


_YEAR_RE = re.compile(r"^(19\d\d|20\d\d|2100)$")
_YEAR_RANGE_RE = re.compile(r"^(19\d\d|20\d\d|2100)[-–](19\d\d|20\d\d|2100)$")
_NORM_RE = re.compile(r"^\W+|\W+$")


def _norm_token(tok: str) -> str:
    return _NORM_RE.sub("", tok).lower()


def extract_entities(query: str, gaz: Gazetteer) -> StructuredQuery:
    """Deterministic longest-match, leftmost, non-overlapping extraction of
    gazetteer phrases, years, and keywords from a query."""
    if not query.strip():
        raise EmptyQuery("query is empty")

    spans = tokenize_spans(query)
    toks = [query[a:b] for a, b in spans]
    norm = [_norm_token(t) for t in toks]

    phrases: list[tuple[tuple[str, ...], str, str]] = []
    for kind, entries in (("scholar", gaz.scholars),
                          ("institution", gaz.institutions),
                          ("domain", gaz.domains)):
        for phrase in entries:
            ptoks = tuple(_norm_token(t) for t in phrase.split())
            phrases.append((ptoks, kind, phrase))
    # longest phrases first at each position
    phrases.sort(key=lambda p: -len(p[0]))

    sq = StructuredQuery()
    consumed = [False] * len(toks)

    i = 0
    while i < len(toks):
        matched = False
        for ptoks, kind, phrase in phrases:
            L = len(ptoks)
            if i + L <= len(toks) and tuple(norm[i:i + L]) == ptoks:
                target = {"scholar": sq.scholars,
                          "institution": sq.institutions,
                          "domain": sq.domains}[kind]
                target.append(phrase)
                for j in range(i, i + L):
                    consumed[j] = True
                i += L
                matched = True
                break
        if not matched:
            i += 1

    # year patterns over unconsumed tokens
    for i, t in enumerate(norm):
        if consumed[i]:
            continue
        m = _YEAR_RANGE_RE.match(t)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if 1900 <= lo <= 2100 and 1900 <= hi <= 2100:
                sq.year_ranges.append((lo, hi))
                consumed[i] = True
                continue
        if _YEAR_RE.match(t):
            year = int(t)
            if i > 0 and norm[i - 1] == "since" and not consumed[i - 1]:
                sq.year_ranges.append((year, None))
                consumed[i - 1] = True
            else:
                sq.years.append(year)
            consumed[i] = True

    residual: list[str] = []
    for i, t in enumerate(toks):
        if not consumed[i]:
            residual.append(t)
            if norm[i] and norm[i] not in STOPWORDS:
                sq.keywords.append(norm[i])
    sq.free_text = " ".join(residual).strip()

    if sq.is_empty():
        sq.free_text = query.strip()
    return sq


# ---------------------------------------------------------------------------
# plugins and dispatch
# ---------------------------------------------------------------------------


class SearchPlugin:
    """Interface: a named search capability over structured queries."""

    name: str

    def execute(self, sq: StructuredQuery, k: int) -> list[SearchHit]:
        raise NotImplementedError


class LocalIndexPlugin(SearchPlugin):
    """Hybrid search over the local chunk index, driven by keywords and
    residual free text. Filters on years and domains; keywords score via
    the hybrid keyword term rather than hard filtering."""

    name = "local-index"

    def __init__(self, index, model):
        self.index = index
        self.model = model

    def _query_text(self, sq: StructuredQuery) -> str:
        return (" ".join(sq.keywords) or sq.free_text).strip()

    def execute(self, sq: StructuredQuery, k: int) -> list[SearchHit]:
        from .embedding import embed

        text = self._query_text(sq)
        flt = SearchFilter(
            domains=tuple(sq.domains),
            year_range=sq.to_filter().year_range,
        )
        if not text:
            text = " ".join(sq.domains)
        vec = embed(text, self.model)
        return self.index.hybrid_search(text, vec, flt, k)


class ScholarIndexPlugin(SearchPlugin):
    """Search restricted to chunks whose papers match the queried scholars
    or institutions."""

    name = "scholar-index"

    def __init__(self, index, model):
        self.index = index
        self.model = model

    def execute(self, sq: StructuredQuery, k: int) -> list[SearchHit]:
        from .embedding import embed

        flt = SearchFilter(
            scholars=tuple(sq.scholars),
            institutions=tuple(sq.institutions),
            year_range=sq.to_filter().year_range,
        )
        text = (" ".join(sq.keywords) or sq.free_text
                or " ".join(sq.scholars + sq.institutions)).strip()
        vec = embed(text, self.model)
        return self.index.hybrid_search(text, vec, flt, k)


class ScriptedStubPlugin(SearchPlugin):
    """Canned-result plugin for tests."""

    def __init__(self, name: str, hits: list[SearchHit] | None = None,
                 error: Exception | None = None):
        self.name = name
        self.hits = hits or []
        self.error = error

    def execute(self, sq: StructuredQuery, k: int) -> list[SearchHit]:
        if self.error is not None:
            raise self.error
        return self.hits[:k]


@dataclass
class DispatchResult:
    results: dict[str, list[SearchHit]]
    errors: dict[str, str]


def dispatch(sq: StructuredQuery, registry: dict[str, SearchPlugin],
             k: int) -> DispatchResult:
    """Route a structured query to plugins. Scholar/institution fields route
    to "scholar-index"; domains/keywords/free text to "local-index". Both
    may fire; per-plugin failures do not abort the others."""
    if not registry:
        raise NoPluginMatched("empty plugin registry")
    if k < 1:
        raise ValueError("k must be >= 1")

    wanted: list[str] = []
    if sq.scholars or sq.institutions:
        wanted.append("scholar-index")
    if sq.domains or sq.keywords or sq.free_text:
        wanted.append("local-index")
    if not wanted:
        raise NoPluginMatched("query routes to no plugin")

    present = [name for name in wanted if name in registry]
    if not present:
        raise NoPluginMatched(f"no registered plugin among: {wanted}")

    results: dict[str, list[SearchHit]] = {}
    errors: dict[str, str] = {}
    for name in wanted:
        if name not in registry:
            errors[name] = "plugin not registered"
            continue
        try:
            results[name] = registry[name].execute(sq, k)
        except Exception as exc:  # surfaced per-plugin
            errors[name] = f"{type(exc).__name__}: {exc}"
    return DispatchResult(results=results, errors=errors)
