"""Exact in-memory vector + keyword index over chunks with metadata filters.

Searches are exact (full scan), reproducibly ordered (score descending,
chunk_id ascending on ties), and snapshot-consistent: an upsert replaces
the entry table wholesale, so searches started earlier keep the old view.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import tokenize
from .errors import DimensionMismatch

VECTOR_WEIGHT = 0.7
KEYWORD_WEIGHT = 0.3


@dataclass(frozen=True)
class IndexEntry:
    chunk_id: str
    vector: np.ndarray
    meta: dict
    text: str = ""

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float32)
        norm = float(np.linalg.norm(vec.astype(np.float64)))
        if abs(norm - 1.0) > 1e-3:
            raise ValueError(f"entry {self.chunk_id}: vector norm {norm} != 1")
        object.__setattr__(self, "vector", vec)


@dataclass(frozen=True)
class SearchFilter:
    scholars: tuple[str, ...] = ()
    institutions: tuple[str, ...] = ()
    year_range: tuple[int | None, int | None] = (None, None)
    domains: tuple[str, ...] = ()
    keywords: tuple[str, ...] = ()

    def __post_init__(self):
        lo, hi = self.year_range
        if lo is not None and hi is not None and lo > hi:
            raise ValueError("year_range min > max")
        for name in ("scholars", "institutions", "domains", "keywords"):
            val = getattr(self, name)
            if isinstance(val, list):
                object.__setattr__(self, name, tuple(val))

    def is_empty(self) -> bool:
        return not (self.scholars or self.institutions or self.domains
                    or self.keywords or self.year_range != (None, None))


@dataclass(frozen=True)
class SearchHit:
    chunk_id: str
    score: float
    snippet: str


def _any_substring(needles: tuple[str, ...], haystacks: list[str]) -> bool:
    lows = [h.lower() for h in haystacks]
    return any(n.lower() in h for n in needles for h in lows)


def _tokens(text: str) -> list[str]:
    return [t.lower() for t in tokenize(text)]


def entry_passes(entry: IndexEntry, flt: SearchFilter) -> bool:
    """Conjunctive across fields, disjunctive within scholars/institutions/
    domains; keywords must all be present in the chunk text."""
    meta = entry.meta
    if flt.scholars and not _any_substring(flt.scholars, meta.get("authors", [])):
        return False
    if flt.institutions and not _any_substring(
            flt.institutions, meta.get("institutions", [])):
        return False
    if flt.domains and not _any_substring(flt.domains, meta.get("domain_tags", [])):
        return False
    lo, hi = flt.year_range
    if lo is not None or hi is not None:
        year = meta.get("year")
        if year is None:
            return False
        if lo is not None and year < lo:
            return False
        if hi is not None and year > hi:
            return False
    if flt.keywords:
        toks = set(_tokens(entry.text))
        if not all(kw.lower() in toks for kw in flt.keywords):
            return False
    return True


def _snippet(text: str) -> str:
    return text[:200]


class VectorIndex:
    def __init__(self, dim: int):
        self.dim = dim
        self._entries: dict[str, IndexEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> dict[str, IndexEntry]:
        return self._entries

    def get(self, chunk_id: str) -> IndexEntry | None:
        return self._entries.get(chunk_id)

    def upsert(self, entries: list[IndexEntry]) -> None:
        for e in entries:
            if e.vector.shape != (self.dim,):
                raise DimensionMismatch(
                    f"entry {e.chunk_id}: dim {e.vector.shape} != ({self.dim},)"
                )
        # copy-on-write so in-flight searches keep their snapshot
        table = dict(self._entries)
        for e in entries:
            table[e.chunk_id] = e
        self._entries = table

    def _candidates(self, flt: SearchFilter) -> list[IndexEntry]:
        snapshot = self._entries
        return [e for e in snapshot.values() if entry_passes(e, flt)]

    def vector_search(self, query: np.ndarray, flt: SearchFilter | None = None,
                      k: int = 10) -> list[SearchHit]:
        """Exact top-k by cosine similarity among filtered entries."""
        if k < 1:
            raise ValueError("k must be >= 1")
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise DimensionMismatch(f"query dim {query.shape} != ({self.dim},)")
        flt = flt or SearchFilter()
        hits = [
            SearchHit(e.chunk_id,
                      float(query @ e.vector.astype(np.float64)),
                      _snippet(e.text))
            for e in self._candidates(flt)
        ]
        hits.sort(key=lambda h: (-h.score, h.chunk_id))
        return hits[:k]

    def hybrid_search(self, query_text: str, query_vec: np.ndarray,
                      flt: SearchFilter | None = None, k: int = 10) -> list[SearchHit]:
        """0.7 x cosine + 0.3 x max-normalized TF-IDF keyword score.

        IDF is computed over the filtered candidate set:
        idf(t) = ln((1 + N) / (1 + df(t))) + 1, tf = raw term count.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        query_vec = np.asarray(query_vec, dtype=np.float64)
        if query_vec.shape != (self.dim,):
            raise DimensionMismatch(f"query dim {query_vec.shape} != ({self.dim},)")
        flt = flt or SearchFilter()
        candidates = self._candidates(flt)
        terms = sorted(set(_tokens(query_text)))

        token_lists = {e.chunk_id: _tokens(e.text) for e in candidates}
        n = len(candidates)
        df = {
            t: sum(1 for toks in token_lists.values() if t in toks)
            for t in terms
        }
        idf = {t: math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms}

        raw = {
            e.chunk_id: sum(token_lists[e.chunk_id].count(t) * idf[t]
                            for t in terms)
            for e in candidates
        }
        max_raw = max(raw.values(), default=0.0)

        hits = []
        for e in candidates:
            cos = float(query_vec @ e.vector.astype(np.float64))
            kw = raw[e.chunk_id] / max_raw if max_raw > 0 else 0.0
            hits.append(SearchHit(
                e.chunk_id,
                VECTOR_WEIGHT * cos + KEYWORD_WEIGHT * kw,
                _snippet(e.text),
            ))
        hits.sort(key=lambda h: (-h.score, h.chunk_id))
        return hits[:k]

    # -- persistence --------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        order = sorted(self._entries)
        meta = {
            "dimension": self.dim,
            "count": len(order),
            "entries": [
                {"chunk_id": cid,
                 "meta": self._entries[cid].meta,
                 "text": self._entries[cid].text}
                for cid in order
            ],
        }
        (directory / "meta.json").write_text(
            json.dumps(meta, ensure_ascii=False, indent=2), encoding="utf-8")
        if order:
            mat = np.stack([self._entries[cid].vector for cid in order])
        else:
            mat = np.zeros((0, self.dim), dtype=np.float32)
        (directory / "vectors.bin").write_bytes(mat.astype("<f4").tobytes(order="C"))

    @classmethod
    def load(cls, directory: str | Path) -> "VectorIndex":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        index = cls(dim=meta["dimension"])
        raw = (directory / "vectors.bin").read_bytes()
        mat = np.frombuffer(raw, dtype="<f4").reshape(meta["count"], meta["dimension"])
        entries = [
            IndexEntry(chunk_id=rec["chunk_id"], vector=mat[i],
                       meta=rec["meta"], text=rec.get("text", ""))
            for i, rec in enumerate(meta["entries"])
        ]
        index.upsert(entries)
        return index
