"""Document model, text cleaning, chapter-aware parsing, and chunking.

Documents arrive as pre-extracted text (markdown-like headings or plain
text with numbered / ALL-CAPS headings). Chunks never cross a section
boundary so each retrieval unit stays semantically coherent.
"""
from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyDocument, MalformedHeader

# ---------------------------------------------------------------------------
# tokenization
# ---------------------------------------------------------------------------

# CJK ideographs, kana, CJK punctuation, fullwidth forms: one token per char
_CJK_RANGES = (
    (0x3000, 0x303F),
    (0x3040, 0x30FF),
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0xFF00, 0xFFEF),
)

_SENTENCE_ENDERS = {".", "!", "?", "。", "！", "？"}


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def tokenize_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) character spans of tokens: whitespace-delimited words
    for Latin script, one token per CJK character."""
    spans: list[tuple[int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif _is_cjk(ch):
            spans.append((i, i + 1))
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and not _is_cjk(text[j]):
                j += 1
            spans.append((i, j))
            i = j
    return spans


def count_tokens(text: str) -> int:
    return len(tokenize_spans(text))


def tokenize(text: str) -> list[str]:
    return [text[a:b] for a, b in tokenize_spans(text)]


# ---------------------------------------------------------------------------
# cleaning
# ---------------------------------------------------------------------------

_HYPHEN_JOIN_RE = re.compile(r"([A-Za-z])-\n([A-Za-z])")
_INLINE_WS_RE = re.compile(r"[^\S\n]+")


def clean_text(raw: str) -> str:
    """Normalize extracted text. Idempotent.

    Removes lines repeated verbatim on >= 3 form-feed-delimited pages
    (running headers/footers), strips control characters, collapses
    whitespace runs to single spaces (newlines kept), and joins
    end-of-line hyphenation between alphabetic fragments.
    """
    pages = raw.split("\f")
    if len(pages) >= 3:
        line_pages: Counter[str] = Counter()
        for page in pages:
            for line in set(page.split("\n")):
                if line.strip():
                    line_pages[line] += 1
        repeated = {ln for ln, c in line_pages.items() if c >= 3}
        if repeated:
            pages = [
                "\n".join(ln for ln in page.split("\n") if ln not in repeated)
                for page in pages
            ]
    text = "\n".join(pages)

    text = "".join(
        ch for ch in text
        if ch in ("\n", "\t") or unicodedata.category(ch) != "Cc"
    )
    text = _INLINE_WS_RE.sub(" ", text)
    # trim spaces hugging newlines so hyphen joining sees clean line ends
    text = re.sub(r" ?\n ?", "\n", text)
    text = _HYPHEN_JOIN_RE.sub(r"\1\2", text)
    return text.strip()


# ---------------------------------------------------------------------------
# document model
# ---------------------------------------------------------------------------


@dataclass
class Section:
    heading: str
    depth: int
    body: str = ""
    children: list["Section"] = field(default_factory=list)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def to_dict(self) -> dict:
        return {
            "heading": self.heading,
            "depth": self.depth,
            "body": self.body,
            "children": [c.to_dict() for c in self.children],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Section":
        return cls(
            heading=d["heading"],
            depth=d["depth"],
            body=d.get("body", ""),
            children=[cls.from_dict(c) for c in d.get("children", [])],
        )


@dataclass
class PaperDocument:
    doc_id: str
    title: str
    authors: list[str] = field(default_factory=list)
    institutions: list[str] = field(default_factory=list)
    venue: str | None = None
    year: int | None = None
    language: str = "en"
    abstract: str = ""
    sections: list[Section] = field(default_factory=list)
    references: list[str] = field(default_factory=list)
    source_uri: str = ""

    def walk_sections(self):
        for s in self.sections:
            yield from s.walk()

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "authors": list(self.authors),
            "institutions": list(self.institutions),
            "venue": self.venue,
            "year": self.year,
            "language": self.language,
            "abstract": self.abstract,
            "sections": [s.to_dict() for s in self.sections],
            "references": list(self.references),
            "source_uri": self.source_uri,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "PaperDocument":
        return cls(
            doc_id=d["doc_id"],
            title=d["title"],
            authors=list(d.get("authors", [])),
            institutions=list(d.get("institutions", [])),
            venue=d.get("venue"),
            year=d.get("year"),
            language=d.get("language", "en"),
            abstract=d.get("abstract", ""),
            sections=[Section.from_dict(s) for s in d.get("sections", [])],
            references=list(d.get("references", [])),
            source_uri=d.get("source_uri", ""),
        )

    @classmethod
    def from_json(cls, s: str) -> "PaperDocument":
        return cls.from_dict(json.loads(s))


def compute_doc_id(title: str, section_bodies: list[str]) -> str:
    h = hashlib.sha256()
    h.update(title.encode("utf-8"))
    for body in section_bodies:
        h.update(b"\x00")
        h.update(body.encode("utf-8"))
    return h.hexdigest()[:16]


def detect_language(text: str) -> str:
    has_cjk = any(_is_cjk(ch) and not (0x3000 <= ord(ch) <= 0x303F) for ch in text)
    has_latin = any("a" <= ch.lower() <= "z" for ch in text)
    if has_cjk and has_latin:
        return "mixed"
    if has_cjk:
        return "zh"
    return "en"


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_HEADER_KEYS = {
    "title", "authors", "institutions", "venue", "year", "language", "source",
}
_HEADER_LINE_RE = re.compile(r"^([A-Za-z][A-Za-z _-]*):\s*(.*)$")
_MD_HEADING_RE = re.compile(r"^(#{1,6})\s+(\S.*)$")
_NUM_HEADING_RE = re.compile(r"^(\d+(?:\.\d+)*)[.)]?\s+(\S.*)$")


def _split_list(value: str) -> list[str]:
    sep = ";" if ";" in value else ","
    return [p.strip() for p in value.split(sep) if p.strip()]


def _parse_header_block(lines: list[str]) -> tuple[dict, int]:
    """Parse a leading "Key: Value" block. Returns (fields, lines consumed)."""
    idx = 0
    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    if idx >= len(lines):
        return {}, 0
    m = _HEADER_LINE_RE.match(lines[idx])
    if not m or m.group(1).strip().lower() not in _HEADER_KEYS:
        return {}, 0
    fields: dict = {}
    while idx < len(lines) and lines[idx].strip():
        m = _HEADER_LINE_RE.match(lines[idx])
        if not m:
            raise MalformedHeader(f"bad header line: {lines[idx]!r}")
        key = m.group(1).strip().lower()
        value = m.group(2).strip()
        if key == "year":
            try:
                year = int(value)
            except ValueError:
                raise MalformedHeader(f"bad year: {value!r}") from None
            if not 1900 <= year <= 2100:
                raise MalformedHeader(f"year out of range: {year}")
            fields["year"] = year
        elif key in ("authors", "institutions"):
            fields[key] = _split_list(value)
        elif key in _HEADER_KEYS:
            fields[key] = value
        # unknown keys that still look like "Key: Value" are ignored
        idx += 1
    return fields, idx


def _is_allcaps_heading(line: str) -> bool:
    s = line.strip()
    if not (2 <= len(s) <= 60) or len(s.split()) > 8:
        return False
    letters = [ch for ch in s if ch.isalpha()]
    return bool(letters) and all(ch.isupper() for ch in letters)


def _heading_of(line: str, fmt: str) -> tuple[int, str] | None:
    if fmt == "markdown-like":
        m = _MD_HEADING_RE.match(line)
        if m:
            return len(m.group(1)), m.group(2).strip()
        return None
    m = _NUM_HEADING_RE.match(line)
    if m and len(line.strip()) <= 100 and line.rstrip()[-1:] not in _SENTENCE_ENDERS:
        depth = m.group(1).count(".") + 1
        return min(depth, 6), m.group(2).strip()
    if _is_allcaps_heading(line):
        return 1, line.strip()
    return None


def parse_document(source: str, fmt: str = "markdown-like") -> PaperDocument:
    """Parse structured text into a PaperDocument with a section tree."""
    if fmt not in ("markdown-like", "plain"):
        raise ValueError(f"unknown format: {fmt}")
    if not source.strip():
        raise EmptyDocument("no non-whitespace content")

    lines = source.split("\n")
    header, consumed = _parse_header_block(lines)
    lines = lines[consumed:]

    # collect (depth, heading, body-lines)
    preamble: list[str] = []
    flat: list[tuple[int, str, list[str]]] = []
    for line in lines:
        h = _heading_of(line, fmt)
        if h is not None:
            flat.append((h[0], h[1], []))
        elif flat:
            flat[-1][2].append(line)
        else:
            preamble.append(line)

    abstract = ""
    front_matter: Section | None = None
    pre_text = "\n".join(preamble).strip()
    if pre_text:
        first_line = pre_text.split("\n", 1)[0].strip()
        if first_line.lower().rstrip(":") == "abstract":
            rest = pre_text.split("\n", 1)
            abstract = rest[1].strip() if len(rest) > 1 else ""
        elif first_line.lower().startswith("abstract:"):
            abstract = pre_text[pre_text.lower().index("abstract:") + 9:].strip()
        else:
            front_matter = Section(heading="Front Matter", depth=1, body=pre_text)

    roots: list[Section] = []
    if front_matter:
        roots.append(front_matter)
    stack: list[Section] = []
    for depth, heading, body_lines in flat:
        while stack and stack[-1].depth >= depth:
            stack.pop()
        depth = min(depth, (stack[-1].depth + 1) if stack else 1, 6)
        node = Section(heading=heading, depth=depth,
                       body="\n".join(body_lines).strip())
        if stack:
            stack[-1].children.append(node)
        else:
            roots.append(node)
        stack.append(node)

    references: list[str] = []
    for sec in roots:
        for node in sec.walk():
            if node.heading.strip().lower() == "references" and node.body:
                references.extend(
                    ln.strip() for ln in node.body.split("\n") if ln.strip()
                )

    title = header.get("title", "")
    if not title:
        if flat:
            title = flat[0][1]
        else:
            title = pre_text.split("\n", 1)[0].strip() if pre_text else "Untitled"

    bodies = [s.body for root in roots for s in root.walk()]
    doc = PaperDocument(
        doc_id=compute_doc_id(title, bodies),
        title=title,
        authors=header.get("authors", []),
        institutions=header.get("institutions", []),
        venue=header.get("venue"),
        year=header.get("year"),
        language=header.get("language") or detect_language(source),
        abstract=abstract,
        sections=roots,
        references=references,
        source_uri=header.get("source", ""),
    )
    return doc


# ---------------------------------------------------------------------------
# chunking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChunkPolicy:
    max_tokens: int = 512
    overlap_tokens: int = 64
    min_tokens: int = 32

    def __post_init__(self):
        if not 0 <= self.overlap_tokens < self.max_tokens:
            raise ValueError("require 0 <= overlap_tokens < max_tokens")
        if self.min_tokens > self.max_tokens:
            raise ValueError("require min_tokens <= max_tokens")


@dataclass
class Chunk:
    chunk_id: str
    doc_id: str
    section_path: list[str]
    char_span: tuple[int, int]
    text: str
    token_count: int


def _sentence_end_tokens(body: str, spans: list[tuple[int, int]]) -> set[int]:
    """Indices of tokens that end a sentence (ender punct then whitespace/EOL)."""
    ends = set()
    for i, (_, b) in enumerate(spans):
        if body[b - 1] in _SENTENCE_ENDERS and (b == len(body) or body[b].isspace()):
            ends.add(i)
    return ends


def _split_section_body(body: str, policy: ChunkPolicy) -> list[tuple[int, int, int, int]]:
    """Greedy sentence-boundary splitting of one section body.

    Returns (char_start, char_end, first_token, last_token_exclusive) per
    chunk. Consecutive chunks share overlap_tokens; char spans tile the
    body so overlap-stripped concatenation reconstructs it exactly.
    """
    spans = tokenize_spans(body)
    m = len(spans)
    if m == 0:
        return []
    sent_ends = _sentence_end_tokens(body, spans)

    windows: list[tuple[int, int]] = []  # token ranges [a, b)
    a = 0
    while True:
        hi = min(a + policy.max_tokens, m)
        if hi == m:
            windows.append((a, m))
            break
        b = hi
        # prefer the last sentence end inside the window, if it leaves
        # room to make progress past the overlap carried into the next chunk
        for i in range(hi - 1, a + policy.overlap_tokens - 1, -1):
            if i in sent_ends:
                b = i + 1
                break
        windows.append((a, b))
        a = b - policy.overlap_tokens

    # merge a trailing fragment below min_tokens into the previous chunk,
    # but never past max_tokens
    if len(windows) >= 2:
        la, lb = windows[-1]
        pa, _ = windows[-2]
        if lb - la < policy.min_tokens and lb - pa <= policy.max_tokens:
            windows.pop()
            windows[-1] = (pa, lb)

    out = []
    for j, (wa, wb) in enumerate(windows):
        cs = 0 if j == 0 else spans[wa][0]
        ce = len(body) if j == len(windows) - 1 else spans[wb][0]
        out.append((cs, ce, wa, wb))
    return out


def split_into_chunks(doc: PaperDocument, policy: ChunkPolicy | None = None) -> list[Chunk]:
    """Split every section of a document into chapter-bounded chunks."""
    policy = policy or ChunkPolicy()
    chunks: list[Chunk] = []

    def visit(section: Section, path: list[str]):
        spath = path + [section.heading]
        for cs, ce, wa, wb in _split_section_body(section.body, policy):
            text = section.body[cs:ce]
            cid = hashlib.sha256(
                f"{doc.doc_id}\x00{'/'.join(spath)}\x00{cs}".encode("utf-8")
            ).hexdigest()[:16]
            chunks.append(Chunk(
                chunk_id=cid,
                doc_id=doc.doc_id,
                section_path=spath,
                char_span=(cs, ce),
                text=text,
                token_count=wb - wa,
            ))
        for child in section.children:
            visit(child, spath)

    for root in doc.sections:
        visit(root, [])
    return chunks
