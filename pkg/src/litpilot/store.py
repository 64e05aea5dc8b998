"""Paper store: in-memory doc table with a JSON-file-per-document layout."""
from __future__ import annotations

from pathlib import Path

from .corpus import PaperDocument
from .errors import UnknownDocId


class DocStore:
    def __init__(self):
        self._docs: dict[str, PaperDocument] = {}

    def __len__(self):
        return len(self._docs)

    def __contains__(self, doc_id: str):
        return doc_id in self._docs

    def add(self, doc: PaperDocument) -> None:
        self._docs[doc.doc_id] = doc

    def get(self, doc_id: str) -> PaperDocument:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise UnknownDocId(doc_id) from None

    def all(self) -> dict[str, PaperDocument]:
        return dict(self._docs)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for doc_id, doc in self._docs.items():
            (directory / f"{doc_id}.json").write_text(
                doc.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, directory: str | Path) -> "DocStore":
        store = cls()
        directory = Path(directory)
        if directory.is_dir():
            for path in sorted(directory.glob("*.json")):
                store.add(PaperDocument.from_json(
                    path.read_text(encoding="utf-8")))
        return store
