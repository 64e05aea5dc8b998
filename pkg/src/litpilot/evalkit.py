"""Evaluation harness: BLEU with add-half smoothing, MOS aggregation,
parallel-corpus loading, and SFT-record export."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .corpus import tokenize
from .errors import EmptyReferences

# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: list[str], references: list[list[str]],
         max_n: int = 4) -> float:
    """Corpus-standard BLEU on one segment: clipped modified n-gram
    precisions with uniform weights, brevity penalty against the closest
    reference length (ties broken toward the shorter), and add-half
    smoothing for zero precisions at n >= 2. p_1 = 0 scores 0."""
    if not references:
        raise EmptyReferences("need at least one reference")
    if not candidate:
        return 0.0

    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngrams(candidate, n)
        total = sum(cand_counts.values())
        clipped = 0
        if cand_counts:
            max_ref: Counter = Counter()
            for ref in references:
                ref_counts = _ngrams(ref, n)
                for ng in cand_counts:
                    max_ref[ng] = max(max_ref[ng], ref_counts[ng])
            clipped = sum(min(c, max_ref[ng]) for ng, c in cand_counts.items())

        if clipped > 0:
            p_n = clipped / total
        elif n == 1:
            return 0.0
        else:
            # add-half smoothing; a candidate too short for this order
            # contributes as if it had a single unmatched n-gram
            p_n = 1.0 / (2.0 * max(total, 1))
        log_sum += math.log(p_n) / max_n

    c = len(candidate)
    r = min((len(ref) for ref in references),
            key=lambda rl: (abs(rl - c), rl))
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum)


def bleu_tokenize(text: str) -> list[str]:
    """Shared BLEU tokenization: whitespace for Latin, per-char for CJK."""
    return tokenize(text)


def corpus_and_sentence_bleu(pairs: list[tuple[list[str], list[list[str]]]],
                             max_n: int = 4) -> dict[str, float]:
    """Mean sentence-level BLEU; the paper leaves the granularity of its
    reported score unstated, so both a mean and per-pair scores are
    surfaced."""
    scores = [bleu(c, refs, max_n) for c, refs in pairs]
    return {
        "sentence_mean": sum(scores) / len(scores) if scores else 0.0,
        "count": len(scores),
    }


# ---------------------------------------------------------------------------
# corpora and records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParallelPair:
    source: str
    references: tuple[str, ...]

    def __post_init__(self):
        if isinstance(self.references, list):
            object.__setattr__(self, "references", tuple(self.references))
        if not self.source or not self.references or not all(self.references):
            raise ValueError("source and references must be nonempty")


def load_parallel_corpus(path: str | Path) -> list[ParallelPair]:
    """TSV (source, reference) or JSON-lines {source, references[]}."""
    path = Path(path)
    pairs = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if path.suffix in (".jsonl", ".json"):
            rec = json.loads(line)
            pairs.append(ParallelPair(rec["source"], tuple(rec["references"])))
        else:
            source, reference = line.split("\t", 1)
            pairs.append(ParallelPair(source, (reference,)))
    return pairs


MOS_TASKS = ("reading", "polishing", "translation")
MOS_CRITERIA = ("factuality", "informativeness", "fluency", "fidelity", "academic")


@dataclass(frozen=True)
class MosRecord:
    task: str
    criterion: str
    rater_id: str
    score: int

    def __post_init__(self):
        if self.task not in MOS_TASKS:
            raise ValueError(f"bad task: {self.task}")
        if self.criterion not in MOS_CRITERIA:
            raise ValueError(f"bad criterion: {self.criterion}")
        if not isinstance(self.score, int) or not 1 <= self.score <= 5:
            raise ValueError(f"score must be an integer in [1, 5]: {self.score}")


def load_mos_records(path: str | Path) -> list[MosRecord]:
    """CSV: task, criterion, rater_id, score (no header required)."""
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.lower().startswith("task,"):
            continue
        task, criterion, rater_id, score = (p.strip() for p in line.split(","))
        records.append(MosRecord(task, criterion, rater_id, int(score)))
    return records


def aggregate_mos(records: list[MosRecord],
                  group_by: str = "criterion") -> dict[str, float]:
    """Arithmetic mean score per group; full precision retained."""
    if group_by not in ("criterion", "task"):
        raise ValueError("group_by must be 'criterion' or 'task'")
    sums: dict[str, list[int]] = {}
    for rec in records:
        sums.setdefault(getattr(rec, group_by), []).append(rec.score)
    return {g: sum(v) / len(v) for g, v in sums.items()}


def format_mos(mean: float) -> str:
    """Display form: half-up rounding to 2 decimals."""
    return str(Decimal(repr(mean)).quantize(Decimal("0.01"),
                                            rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------------------
# SFT export
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SftRecord:
    instruction: str
    input: str
    output: str

    def __post_init__(self):
        if not self.instruction or not self.output:
            raise ValueError("instruction and output must be nonempty")


def export_sft_dataset(transcripts: list[tuple[str, str, str]],
                       instruction_for) -> tuple[list[SftRecord], int]:
    """Map (task, prompt, response) transcripts into SFT records; records
    with an empty response are dropped. Returns (records, dropped count)."""
    records = []
    dropped = 0
    for task, prompt, response in transcripts:
        if not response.strip():
            dropped += 1
            continue
        records.append(SftRecord(
            instruction=instruction_for(task),
            input=prompt,
            output=response,
        ))
    return records, dropped


def sft_to_jsonl(records: list[SftRecord]) -> str:
    return "".join(
        json.dumps({"instruction": r.instruction, "input": r.input,
                    "output": r.output}, ensure_ascii=False) + "\n"
        for r in records
    )
