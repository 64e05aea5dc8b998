"""HTTP service exposing investigation, reading, and writing pipelines with
SSE-streamed chat and crash-safe session persistence."""
from __future__ import annotations

import json
import secrets
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from . import investigation, reading, writing
from .config import ServiceConfig
from .corpus import clean_text, parse_document, split_into_chunks
from .embedding import (
    EmptyInput,
    ProjectionModel,
    TrainConfig,
    embed,
    init_projection,
)
from .errors import (
    BackendFailure,
    BackendTimeout,
    CountOutOfRange,
    DuplicateDocId,
    EmptyDocument,
    EmptyDraft,
    EmptyQuery,
    EmptyQuestion,
    EmptySource,
    LimitExceeded,
    LitpilotError,
    MalformedHeader,
    NoPluginMatched,
    ScholarNotFound,
    UnknownDocId,
    UnparseableOutput,
)
from .investigation import ReviewDeps, TopicSearchDeps, generate_review, topic_search
from .llm import make_backend
from .query_engine import Gazetteer, LocalIndexPlugin, ScholarIndexPlugin
from .retrieval import IndexEntry, SearchFilter, VectorIndex
from .store import DocStore
from .writing import load_lexicon

# ---------------------------------------------------------------------------
# session persistence (append-only JSON lines per session)
# ---------------------------------------------------------------------------


@dataclass
class SessionRecord:
    session_id: str
    kind: str  # investigate | read
    doc_ids: list[str]
    messages: list[dict] = field(default_factory=list)
    created: int = 0
    updated: int = 0


class SessionStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, SessionRecord] = {}
        self._lock = threading.Lock()
        self._rebuild()

    def _rebuild(self) -> None:
        for path in sorted(self.directory.glob("*.jsonl")):
            lines = path.read_text(encoding="utf-8").splitlines()
            if not lines:
                continue
            meta = json.loads(lines[0])
            rec = SessionRecord(
                session_id=meta["session_id"], kind=meta["kind"],
                doc_ids=meta.get("doc_ids", []),
                created=meta.get("created", 0), updated=meta.get("created", 0),
            )
            for line in lines[1:]:
                msg = json.loads(line)
                rec.messages.append({"role": msg["role"], "content": msg["content"]})
                rec.updated = msg.get("ts", rec.updated)
            self._sessions[rec.session_id] = rec

    def create(self, kind: str, doc_ids: list[str]) -> SessionRecord:
        now = int(time.time())
        rec = SessionRecord(session_id=secrets.token_hex(16), kind=kind,
                            doc_ids=list(doc_ids), created=now, updated=now)
        with self._lock:
            self._sessions[rec.session_id] = rec
            with open(self.directory / f"{rec.session_id}.jsonl", "a",
                      encoding="utf-8") as f:
                f.write(json.dumps({
                    "session_id": rec.session_id, "kind": kind,
                    "doc_ids": rec.doc_ids, "created": now,
                }, ensure_ascii=False) + "\n")
        return rec

    def get(self, session_id: str) -> SessionRecord | None:
        return self._sessions.get(session_id)

    def append(self, session_id: str, role: str, content: str) -> None:
        now = int(time.time())
        with self._lock:
            rec = self._sessions[session_id]
            rec.messages.append({"role": role, "content": content})
            rec.updated = now
            with open(self.directory / f"{session_id}.jsonl", "a",
                      encoding="utf-8") as f:
                f.write(json.dumps({"role": role, "content": content,
                                    "ts": now}, ensure_ascii=False) + "\n")
                f.flush()


# ---------------------------------------------------------------------------
# application state
# ---------------------------------------------------------------------------


def domain_tags(doc, gazetteer: Gazetteer) -> list[str]:
    """Gazetteer domains appearing verbatim in the title or abstract."""
    haystack = f"{doc.title} {doc.abstract}".lower()
    return sorted(d for d in gazetteer.domains if d.lower() in haystack)


class AppState:
    def __init__(self, config: ServiceConfig):
        config.validate_paths()
        self.config = config
        self.backend = make_backend(
            config.backend_kind, base_url=config.base_url,
            rules_path=config.rules_path, timeout=config.backend_timeout,
        )
        data = Path(config.data_dir)
        self.data_dir = data
        self.docs = DocStore.load(data / "papers")

        model_path = data / "model.proj"
        if model_path.exists():
            self.model = ProjectionModel.load(model_path)
        else:
            self.model = init_projection(TrainConfig(d_out=config.embedding_dim))

        index_dir = data / "index"
        if (index_dir / "meta.json").exists():
            self.index = VectorIndex.load(index_dir)
        else:
            self.index = VectorIndex(self.model.d_out)

        self.lexicon = (load_lexicon(config.lexicon_path)
                        if config.lexicon_path else [])
        self.gazetteer = (Gazetteer.from_tsv(config.gazetteer_path)
                          if config.gazetteer_path else Gazetteer())
        self.plugins = {
            "local-index": LocalIndexPlugin(self.index, self.model),
            "scholar-index": ScholarIndexPlugin(self.index, self.model),
        }
        self.sessions = SessionStore(data / "sessions")
        self._turn_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- helpers ------------------------------------------------------------

    def turn_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._turn_locks.setdefault(session_id, threading.Lock())

    def chunk_to_doc(self, chunk_id: str) -> str | None:
        entry = self.index.get(chunk_id)
        return entry.meta.get("doc_id") if entry else None

    def doc_chunks(self, doc_id: str):
        return [e for e in self.index.entries.values()
                if e.meta.get("doc_id") == doc_id]

    def topic_deps(self) -> TopicSearchDeps:
        return TopicSearchDeps(
            backend=self.backend, gazetteer=self.gazetteer,
            plugins=self.plugins, docs=self.docs.all(),
            chunk_to_doc=self.chunk_to_doc,
        )

    def ingest(self, source: str, fmt: str = "markdown-like") -> dict:
        doc = parse_document(clean_text(source), fmt)
        chunks = split_into_chunks(doc, self.config.chunk_policy)
        tags = domain_tags(doc, self.gazetteer)
        entries = []
        for chunk in chunks:
            try:
                vec = embed(chunk.text, self.model)
            except EmptyInput:
                continue
            entries.append(IndexEntry(
                chunk_id=chunk.chunk_id, vector=vec, text=chunk.text,
                meta={
                    "doc_id": doc.doc_id,
                    "year": doc.year,
                    "authors": doc.authors,
                    "institutions": doc.institutions,
                    "domain_tags": tags,
                    "venue": doc.venue,
                    "section_path": chunk.section_path,
                },
            ))
        self.index.upsert(entries)
        self.docs.add(doc)
        self.persist()
        return {"doc_id": doc.doc_id, "title": doc.title,
                "chunks": len(entries)}

    def persist(self) -> None:
        self.docs.save(self.data_dir / "papers")
        self.index.save(self.data_dir / "index")

    # -- chat turns -----------------------------------------------------------

    def run_turn(self, session: SessionRecord, content: str) -> tuple[str, list[str]]:
        """One chat exchange; returns (assistant text, citation chunk ids)."""
        if session.kind == "read":
            if not session.doc_ids:
                raise UnknownDocId("(session has no papers)")
            paper = self.docs.get(session.doc_ids[0])
            chunks = self.doc_chunks(paper.doc_id)
            rq = reading.route_question(
                content, chunks, self.model, self.backend,
                theta=self.config.routing_theta,
            )
            answer = reading.answer_question(
                rq, paper,
                reading.ReadingDeps(index=self.index, model=self.model,
                                    backend=self.backend, plugins=self.plugins),
                k=self.config.default_k,
            )
            return answer.text, answer.cited_chunk_ids
        result = topic_search(content, self.topic_deps(), k=self.config.default_k)
        text = result.summary or result.stats.describe()
        return text, [h.chunk_id for h in result.hits]


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

_LIMITS = {
    "CountOutOfRange": reading.COMPARE_MAX,
    "LimitExceeded": investigation.REVIEW_PAPER_LIMIT,
}


def _error_response(status: int, exc: Exception) -> JSONResponse:
    name = type(exc).__name__
    body = {"error": name, "detail": str(exc)}
    if name in _LIMITS:
        body["limit"] = _LIMITS[name]
    return JSONResponse(status_code=status, content=body)


_UNPROCESSABLE = (
    CountOutOfRange, LimitExceeded, DuplicateDocId, EmptyDraft, EmptySource,
    EmptyQuery, EmptyQuestion, EmptyDocument, MalformedHeader,
    NoPluginMatched, ScholarNotFound, UnparseableOutput, ValueError,
)


def _map_exception(exc: Exception) -> JSONResponse:
    if isinstance(exc, UnknownDocId):
        return _error_response(404, exc)
    if isinstance(exc, BackendTimeout):
        return _error_response(504, exc)
    if isinstance(exc, BackendFailure):
        return _error_response(502, exc)
    if isinstance(exc, _UNPROCESSABLE):
        return _error_response(422, exc)
    if isinstance(exc, LitpilotError):
        return _error_response(422, exc)
    raise exc


def create_app(config: ServiceConfig | None = None,
               state: AppState | None = None) -> FastAPI:
    state = state or AppState(config or ServiceConfig())
    app = FastAPI(title="litpilot")
    app.state.litpilot = state

    @app.middleware("http")
    async def request_id_middleware(request: Request, call_next):
        rid = request.headers.get("x-request-id") or uuid.uuid4().hex
        response = await call_next(request)
        response.headers["x-request-id"] = rid
        return response

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={
            "error": "MalformedBody", "detail": str(exc.errors()),
        })

    @app.exception_handler(LitpilotError)
    async def domain_error(request: Request, exc: LitpilotError):
        return _map_exception(exc)

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return _error_response(422, exc)

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/ingest")
    def ingest(body: dict):
        source = body.get("source")
        if not isinstance(source, str):
            return JSONResponse(status_code=400, content={
                "error": "MalformedBody", "detail": "source must be a string"})
        return state.ingest(source, body.get("format", "markdown-like"))

    @app.get("/v1/papers")
    def list_papers():
        return {"papers": [
            {"doc_id": d.doc_id, "title": d.title, "year": d.year,
             "authors": d.authors}
            for d in state.docs.all().values()
        ]}

    @app.get("/v1/papers/{doc_id}")
    def get_paper(doc_id: str):
        return state.docs.get(doc_id).to_dict()

    @app.post("/v1/search")
    def search(body: dict):
        query = body.get("query")
        if not isinstance(query, str) or not query.strip():
            return JSONResponse(status_code=400, content={
                "error": "MalformedBody", "detail": "query must be nonempty"})
        k = int(body.get("k", state.config.default_k))
        flt_raw = body.get("filter") or {}
        flt = SearchFilter(
            scholars=tuple(flt_raw.get("scholars", [])),
            institutions=tuple(flt_raw.get("institutions", [])),
            domains=tuple(flt_raw.get("domains", [])),
            keywords=tuple(flt_raw.get("keywords", [])),
            year_range=tuple(flt_raw.get("year_range", (None, None))),
        )
        qvec = embed(query, state.model)
        hits = state.index.hybrid_search(query, qvec, flt, k)
        return {"hits": [
            {"chunk_id": h.chunk_id, "score": h.score, "snippet": h.snippet,
             "doc_id": state.chunk_to_doc(h.chunk_id)}
            for h in hits
        ]}

    @app.post("/v1/sessions")
    def create_session(body: dict):
        kind = body.get("kind")
        if kind not in ("investigate", "read"):
            return JSONResponse(status_code=400, content={
                "error": "MalformedBody",
                "detail": "kind must be investigate or read"})
        doc_ids = body.get("doc_ids", [])
        for d in doc_ids:
            state.docs.get(d)  # 404 on unknown
        rec = state.sessions.create(kind, doc_ids)
        return {"session_id": rec.session_id, "kind": rec.kind,
                "doc_ids": rec.doc_ids}

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        rec = state.sessions.get(session_id)
        if rec is None:
            return JSONResponse(status_code=404, content={
                "error": "UnknownSession", "detail": session_id})
        return {"session_id": rec.session_id, "kind": rec.kind,
                "doc_ids": rec.doc_ids, "messages": rec.messages,
                "created": rec.created, "updated": rec.updated}

    @app.post("/v1/sessions/{session_id}/messages")
    def post_message(session_id: str, body: dict):
        rec = state.sessions.get(session_id)
        if rec is None:
            return JSONResponse(status_code=404, content={
                "error": "UnknownSession", "detail": session_id})
        content = body.get("content")
        if not isinstance(content, str) or not content.strip():
            return JSONResponse(status_code=400, content={
                "error": "MalformedBody", "detail": "content must be nonempty"})

        lock = state.turn_lock(session_id)
        if not lock.acquire(blocking=False):
            return JSONResponse(status_code=409, content={
                "error": "TurnInFlight",
                "detail": "one in-flight turn per session"})
        try:
            state.sessions.append(session_id, "user", content)
            text, citations = state.run_turn(rec, content)
            state.sessions.append(session_id, "assistant", text)
        except Exception as exc:
            lock.release()
            return _map_exception(exc)

        def sse():
            try:
                for i in range(0, len(text), 16):
                    delta = json.dumps({"delta": text[i:i + 16]},
                                       ensure_ascii=False)
                    yield f"data: {delta}\n\n"
                done = json.dumps({"done": True, "citations": citations},
                                  ensure_ascii=False)
                yield f"data: {done}\n\n"
            finally:
                lock.release()

        return StreamingResponse(sse(), media_type="text/event-stream")

    @app.post("/v1/compare")
    def compare(body: dict):
        doc_ids = body.get("doc_ids")
        if not isinstance(doc_ids, list):
            return JSONResponse(status_code=400, content={
                "error": "MalformedBody", "detail": "doc_ids must be a list"})
        report = reading.compare_papers(
            doc_ids, reading.CompareDeps(docs=state.docs.all(),
                                         backend=state.backend))
        return report.to_dict()

    @app.post("/v1/review")
    def review(body: dict):
        doc_ids = body.get("doc_ids")
        if not isinstance(doc_ids, list):
            return JSONResponse(status_code=400, content={
                "error": "MalformedBody", "detail": "doc_ids must be a list"})
        outline = generate_review(doc_ids, ReviewDeps(
            docs=state.docs.all(), model=state.model, backend=state.backend))
        return outline.to_dict()

    @app.post("/v1/polish")
    def polish_route(body: dict):
        result = writing.polish(body.get("draft", ""),
                                body.get("style", "academic"), state.backend)
        return {
            "polished": result.polished,
            "edits": [
                {"span": list(e.span), "original": e.original,
                 "replacement": e.replacement, "rationale": e.rationale}
                for e in result.edits
            ],
            "dropped_edits": result.dropped_edits,
        }

    @app.post("/v1/translate")
    def translate_route(body: dict):
        result = writing.translate(
            body.get("source", ""), body.get("direction", "en->zh"),
            state.lexicon, state.backend)
        return {
            "translated": result.translated,
            "injected_terms": [
                {"source_term": t.source_term, "target_term": t.target_term,
                 "domain_tag": t.domain_tag}
                for t in result.injected_terms
            ],
            "prompt_used": result.prompt_used,
        }

    ui_dir = Path(__file__).parent.parent.parent / "frontend" / "dist"
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
