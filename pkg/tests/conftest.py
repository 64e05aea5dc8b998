from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import fixtures  # noqa: E402

from litpilot.config import ServiceConfig, load_config  # noqa: E402
from litpilot.corpus import clean_text, parse_document  # noqa: E402
from litpilot.llm import MockBackend, MockRule  # noqa: E402
from litpilot.service import AppState  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "golden"


def make_mock(extra_rules: list[tuple[str, str, str]] | None = None) -> MockBackend:
    """Mock backend with the shared scripted rules; extras take priority."""
    rules = [MockRule(match=m, pattern=p, response=r)
             for m, p, r in (extra_rules or [])]
    rules += [MockRule(match=r["match"], pattern=r["pattern"],
                       response=r["response"])
              for r in fixtures.DEFAULT_RULES]
    return MockBackend(rules)


@pytest.fixture
def mock_backend() -> MockBackend:
    return make_mock()


@pytest.fixture(scope="session")
def fixture_docs():
    """The 12 fixture papers parsed into documents (no indexing)."""
    docs = {}
    for paper in fixtures.FIXTURE_PAPERS:
        doc = parse_document(clean_text(fixtures.paper_source(paper)),
                             "markdown-like")
        docs[doc.doc_id] = doc
    return docs


def build_state(tmp_path: Path, ingest: bool = True) -> AppState:
    paths = fixtures.write_workspace(tmp_path)
    state = AppState(load_config(str(paths["config"])))
    if ingest:
        for paper in fixtures.FIXTURE_PAPERS:
            state.ingest(fixtures.paper_source(paper))
    return state


@pytest.fixture
def app_state(tmp_path) -> AppState:
    return build_state(tmp_path)


@pytest.fixture
def empty_config(tmp_path) -> ServiceConfig:
    paths = fixtures.write_workspace(tmp_path)
    return load_config(str(paths["config"]))
