"""Academic writing pipelines: terminology-aware translation and a
machine-checkable polishing protocol (EDIT/FINAL lines)."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyDraft, EmptySource, UnparseableOutput
from .llm import ChatMessage, ChatRequest, get_template, render

DIRECTIONS = ("en->zh", "zh->en")


@dataclass(frozen=True)
class TermEntry:
    source_term: str
    target_term: str
    domain_tag: str | None = None

    def __post_init__(self):
        if not self.source_term or not self.target_term:
            raise ValueError("terms must be nonempty")


def load_lexicon(path: str | Path) -> list[TermEntry]:
    """TSV lexicon: source_term, target_term, optional domain_tag."""
    entries = []
    seen = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        source, target = parts[0].strip(), parts[1].strip()
        domain = parts[2].strip() if len(parts) > 2 and parts[2].strip() else None
        key = (source.lower(), domain)
        if key in seen:
            raise ValueError(f"duplicate lexicon entry: {key}")
        seen.add(key)
        entries.append(TermEntry(source, target, domain))
    return entries


def detect_terms(source: str, lexicon: list[TermEntry],
                 domain: str | None = None) -> list[TermEntry]:
    """Case-insensitive longest-match, leftmost, non-overlapping scan of the
    source against lexicon source terms, ordered by first occurrence."""
    candidates = [
        e for e in lexicon
        if domain is None or e.domain_tag is None or e.domain_tag == domain
    ]
    # longest source term first so a longer phrase wins at the same spot
    candidates.sort(key=lambda e: (-len(e.source_term), e.source_term.lower()))
    low = source.lower()

    found: list[tuple[int, TermEntry]] = []
    taken: list[tuple[int, int]] = []

    for entry in candidates:
        needle = entry.source_term.lower()
        start = 0
        while True:
            pos = low.find(needle, start)
            if pos == -1:
                break
            end = pos + len(needle)
            if any(pos < te and ts < end for ts, te in taken):
                start = pos + 1
                continue
            taken.append((pos, end))
            found.append((pos, entry))
            start = end
    found.sort(key=lambda pe: pe[0])
    out: list[TermEntry] = []
    for _, entry in found:
        if entry not in out:
            out.append(entry)
    return out


@dataclass
class TranslationResult:
    translated: str
    injected_terms: list[TermEntry]
    prompt_used: str


def translate(source: str, direction: str, lexicon: list[TermEntry],
              backend, domain: str | None = None) -> TranslationResult:
    """Terminology-constrained translation: matched lexicon entries are
    injected into the prompt as TERM lines; the backend output is returned
    verbatim."""
    if not source.strip():
        raise EmptySource("nothing to translate")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    terms = detect_terms(source, lexicon, domain)
    term_lines = "\n".join(
        f"TERM: {t.source_term} => {t.target_term}" for t in terms
    )
    prompt = render(get_template("translate"), {
        "direction": direction,
        "terms": term_lines,
        "text": source,
    })
    content = backend.complete(ChatRequest(
        messages=[ChatMessage(role="user", content=prompt)]
    )).content
    return TranslationResult(translated=content, injected_terms=terms,
                             prompt_used=prompt)


# ---------------------------------------------------------------------------
# polishing
# ---------------------------------------------------------------------------


@dataclass
class Edit:
    span: tuple[int, int]
    original: str
    replacement: str
    rationale: str


@dataclass
class PolishResult:
    polished: str
    edits: list[Edit]
    dropped_edits: int = 0


def apply_edits(edits: list[Edit], original: str) -> str:
    out = []
    pos = 0
    for e in sorted(edits, key=lambda e: e.span[0]):
        out.append(original[pos:e.span[0]])
        out.append(e.replacement)
        pos = e.span[1]
    out.append(original[pos:])
    return "".join(out)


_EDIT_LINE_RE = re.compile(
    r"^EDIT:\s*(?P<orig>.+?)\s*=>\s*(?P<repl>.*?)\s*(?://\s*(?P<why>.*))?$"
)

STYLES = ("academic", "concise")


def polish(draft: str, style: str, backend) -> PolishResult:
    """Few-shot, chain-of-thought polishing. The backend emits EDIT lines
    then FINAL: and the full text; edits are located as leftmost unused
    occurrences in the draft and must reconstruct the final text."""
    if not draft.strip():
        raise EmptyDraft("draft is empty")
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    prompt = render(get_template("polish"), {"style": style, "draft": draft})
    content = backend.complete(ChatRequest(
        messages=[ChatMessage(role="user", content=prompt)]
    )).content

    marker = content.find("FINAL:")
    if marker == -1:
        raise UnparseableOutput("no FINAL marker in backend output")
    polished = content[marker + len("FINAL:"):].strip()
    head = content[:marker]

    edits: list[Edit] = []
    dropped = 0
    cursor = 0  # leftmost-unused search position
    for line in head.split("\n"):
        line = line.strip()
        if not line.startswith("EDIT:"):
            continue
        m = _EDIT_LINE_RE.match(line)
        if not m or not m.group("orig"):
            dropped += 1
            continue
        original = m.group("orig")
        pos = draft.find(original, cursor)
        if pos == -1:
            dropped += 1
            continue
        edits.append(Edit(
            span=(pos, pos + len(original)),
            original=original,
            replacement=m.group("repl"),
            rationale=(m.group("why") or "").strip(),
        ))
        cursor = pos + len(original)

    if apply_edits(edits, draft).strip() != polished:
        raise UnparseableOutput(
            "edits do not reconstruct the polished text"
        )
    return PolishResult(polished=polished, edits=edits, dropped_edits=dropped)
