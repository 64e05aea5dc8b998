"""Shared fixture corpus: 12 small papers across three topics, a gazetteer,
a terminology lexicon, and the default scripted mock rules."""
from __future__ import annotations

import json
from pathlib import Path

FIXTURE_PAPERS = [
    # fake-news detection (Chris Manning's cluster A)
    {
        "title": "Detecting Misinformation with Graph Signals",
        "authors": "Chris Manning; Ana Ortiz",
        "institutions": "Stanford University",
        "year": 2023,
        "venue": "WebSci",
        "abstract": "We detect misinformation by propagating credibility signals over a sharing graph.",
        "sections": [
            ("Introduction", "Misinformation spreads quickly over social platforms. We study graph signals that reveal coordinated sharing."),
            ("Method", "Credibility scores propagate along edges. A threshold rule flags suspicious cascades for review."),
        ],
    },
    {
        "title": "Claim Verification Against Evidence Snippets",
        "authors": "Chris Manning; Bo Chen",
        "institutions": "Stanford University",
        "year": 2023,
        "venue": "ACL",
        "abstract": "A verifier aligns claims with retrieved evidence snippets and predicts support or refutation.",
        "sections": [
            ("Introduction", "Verifying claims requires evidence. We retrieve snippets and align them with the claim tokens."),
            ("Experiments", "The verifier improves accuracy on two public benchmarks over retrieval-free baselines."),
        ],
    },
    {
        "title": "Rumor Cascade Features for Early Detection",
        "authors": "Chris Manning",
        "institutions": "Stanford University",
        "year": 2022,
        "venue": "ICWSM",
        "abstract": "Temporal cascade features enable early detection of rumors within the first hour of spread.",
        "sections": [
            ("Introduction", "Early detection limits harm. Cascade shape and timing carry strong signals."),
            ("Results", "Early features recover most of the final accuracy within one hour of the first post."),
        ],
    },
    # machine translation (Chris Manning's cluster B)
    {
        "title": "Terminology Constraints for Neural Translation",
        "authors": "Chris Manning; Mei Lin",
        "institutions": "Stanford University",
        "year": 2021,
        "venue": "EMNLP",
        "abstract": "Injecting terminology pairs into prompts keeps domain terms faithful during neural translation.",
        "sections": [
            ("Introduction", "Domain terminology is easily mistranslated. We inject term pairs into the decoding context."),
            ("Method", "Matched lexicon entries are serialized into the prompt before the source sentence."),
        ],
    },
    {
        "title": "Document-Level Translation with Section Context",
        "authors": "Chris Manning; Raj Patel",
        "institutions": "Stanford University",
        "year": 2021,
        "venue": "WMT",
        "abstract": "Section-aware context windows improve coherence in document-level translation.",
        "sections": [
            ("Introduction", "Sentence-level systems lose discourse context. We condition on the enclosing section."),
            ("Experiments", "Section context reduces pronoun and tense errors in long documents."),
        ],
    },
    {
        "title": "Quality Estimation for Academic Translation",
        "authors": "Chris Manning; Sara Kim",
        "institutions": "Stanford University",
        "year": 2020,
        "venue": "COLING",
        "abstract": "We estimate translation quality for academic abstracts without reference translations.",
        "sections": [
            ("Introduction", "Reference-free estimation helps triage machine output for human review."),
            ("Results", "Predicted scores correlate strongly with human fluency and fidelity ratings."),
        ],
    },
    # fake news, other authors
    {
        "title": "Stance Classification for News Veracity",
        "authors": "Wei Liu; Tao Huang",
        "institutions": "Tsinghua University",
        "year": 2023,
        "venue": "WWW",
        "abstract": "Stance between headlines and bodies is a useful proxy signal for news veracity.",
        "sections": [
            ("Introduction", "Headline-body stance disagreement often indicates fabricated stories."),
            ("Method", "A lightweight classifier labels stance into agree, disagree, discuss, or unrelated."),
        ],
    },
    {
        "title": "Crowd Signals versus Expert Labels for Misinformation",
        "authors": "Wei Liu",
        "institutions": "Tsinghua University",
        "year": 2022,
        "venue": "CSCW",
        "abstract": "Aggregated crowd judgments approach expert label quality for viral misinformation at a fraction of the cost.",
        "sections": [
            ("Introduction", "Expert labeling does not scale. We compare crowd aggregation schemes."),
            ("Results", "Majority vote with reliability weighting tracks expert labels closely."),
        ],
    },
    # retrieval / LLM topic
    {
        "title": "Hybrid Retrieval for Scholarly Search",
        "authors": "Ana Ortiz; Raj Patel",
        "institutions": "ETH Zurich",
        "year": 2022,
        "venue": "SIGIR",
        "abstract": "Combining lexical and dense retrieval improves scholarly search over either alone.",
        "sections": [
            ("Introduction", "Dense vectors miss rare terms; lexical scores miss paraphrases. A weighted hybrid wins."),
            ("Experiments", "A fixed interpolation weight transfers across scholarly collections."),
        ],
    },
    {
        "title": "Question Generation for Retrieval Training",
        "authors": "Mei Lin; Bo Chen",
        "institutions": "ETH Zurich",
        "year": 2021,
        "venue": "NAACL",
        "abstract": "Synthetic questions generated from passages provide effective contrastive training pairs.",
        "sections": [
            ("Introduction", "Labeled query-passage pairs are scarce. Generated questions fill the gap."),
            ("Method", "Each passage yields one question; negatives come from other documents."),
        ],
    },
    {
        "title": "Chunking Strategies for Long Document Retrieval",
        "authors": "Tao Huang; Sara Kim",
        "institutions": "Tsinghua University",
        "year": 2020,
        "venue": "CIKM",
        "abstract": "Chapter-bounded chunks outperform fixed windows for long-document retrieval.",
        "sections": [
            ("Introduction", "Fixed windows split arguments mid-sentence. Chapter bounds preserve meaning."),
            ("Results", "Chapter-bounded chunks raise answer recall on long technical reports."),
        ],
    },
    {
        "title": "Evaluating Summaries of Research Areas",
        "authors": "Ana Ortiz",
        "institutions": "ETH Zurich",
        "year": 2019,
        "venue": "INLG",
        "abstract": "We propose criteria for judging automatically generated research-area summaries.",
        "sections": [
            ("Introduction", "Area summaries must balance coverage and recency. We formalize both."),
            ("Method", "Coverage counts cited clusters; recency weights recent publications higher."),
        ],
    },
]

GAZETTEER_TSV = """\
scholar\tChris Manning
scholar\tWei Liu
scholar\tAna Ortiz
institution\tStanford University
institution\tTsinghua University
institution\tETH Zurich
domain\tfake news
domain\tmachine translation
domain\tmisinformation
domain\tlanguage model
domain\tlarge language model
domain\tscholarly search
"""

LEXICON_TSV = """\
large language model\t大语言模型\t
language model\t语言模型\t
machine translation\t机器翻译\t
neural network\t神经网络\tml
attention mechanism\t注意力机制\tml
terminology\t术语\t
retrieval\t检索\t
contrastive learning\t对比学习\tml
fine-tuning\t微调\tml
benchmark\t基准\t
"""

POLISH_DRAFT = ("We done the experiment on three dataset. "
                "The result are good.")
POLISH_RESPONSE = (
    "EDIT: We done => We conducted // verb form\n"
    "EDIT: three dataset => three datasets // plural agreement\n"
    "EDIT: The result are => The results are // subject-verb agreement\n"
    "FINAL: We conducted the experiment on three datasets. "
    "The results are good."
)

TRANSLATE_SOURCE = ("The large language model improves retrieval "
                    "for machine translation research.")

DEFAULT_RULES = [
    {"match": "contains",
     "pattern": "In the library, what LLM technologies",
     "response": "Applications of large models in library search domain"},
    {"match": "contains",
     "pattern": "fake news section",
     "response": "misinformation detection by Chris Manning since 2022"},
    {"match": "contains",
     "pattern": "Rewrite the following search query",
     "response": ""},
    {"match": "contains",
     "pattern": "Write one question that the following paper segment",
     "response": "What does this segment describe?"},
    {"match": "contains",
     "pattern": "Decide whether the question can be answered",
     "response": "IN"},
    {"match": "contains",
     "pattern": "Answer the question using only the numbered segments",
     "response": "Per [S1], the paper addresses this directly."},
    {"match": "contains",
     "pattern": "Extract the contributions",
     "response": ("CONTRIB: a new method for the task\n"
                  "APPROACH: supervised learning over curated data\n"
                  "ADVANTAGE: higher accuracy at lower cost")},
    {"match": "contains",
     "pattern": "Given the per-paper summaries",
     "response": ("SIMILARITY: all papers study learning-based methods\n"
                  "DIFFERENCE: they target different application domains")},
    {"match": "contains",
     "pattern": "Name the research area shared",
     "response": "Natural Language Processing"},
    {"match": "contains",
     "pattern": "Summarize the state of the literature",
     "response": ("The area is growing steadily, with recent work "
                  "concentrating on detection and verification methods.")},
    {"match": "contains",
     "pattern": "Write a short introduction for a literature review",
     "response": ("This review surveys recent progress across the "
                  "selected papers.")},
    {"match": "contains",
     "pattern": "Write a review section heading and synthesis",
     "response": ("HEADING: Shared Methods\n"
                  "These papers [1] develop closely related methods and "
                  "evaluate them on public benchmarks.")},
    {"match": "contains",
     "pattern": "Write a short conclusion for a literature review",
     "response": "Overall, the surveyed papers show steady progress."},
    {"match": "contains",
     "pattern": "Translate the text below",
     "response": "大语言模型改进了机器翻译研究的检索。"},
    {"match": "contains",
     "pattern": "Polish the draft below",
     "response": POLISH_RESPONSE},
    {"match": "contains", "pattern": "", "response": "OK"},
]


def paper_source(paper: dict) -> str:
    lines = [
        f"Title: {paper['title']}",
        f"Authors: {paper['authors']}",
        f"Institutions: {paper['institutions']}",
        f"Year: {paper['year']}",
        f"Venue: {paper['venue']}",
        "",
        "Abstract",
        paper["abstract"],
        "",
    ]
    for heading, body in paper["sections"]:
        lines += [f"# {heading}", body, ""]
    return "\n".join(lines)


def write_workspace(root: Path) -> dict:
    """Materialize config + data files under root; returns paths."""
    root = Path(root)
    data = root / "data"
    data.mkdir(parents=True, exist_ok=True)
    rules = root / "rules.json"
    rules.write_text(json.dumps(DEFAULT_RULES, ensure_ascii=False, indent=1),
                     encoding="utf-8")
    gaz = root / "gazetteer.tsv"
    gaz.write_text(GAZETTEER_TSV, encoding="utf-8")
    lex = root / "lexicon.tsv"
    lex.write_text(LEXICON_TSV, encoding="utf-8")
    config = root / "config.json"
    config.write_text(json.dumps({
        "backend_kind": "mock",
        "rules_path": str(rules),
        "data_dir": str(data),
        "gazetteer_path": str(gaz),
        "lexicon_path": str(lex),
        "embedding_dim": 64,
        "chunk_policy": {"max_tokens": 64, "overlap_tokens": 8,
                         "min_tokens": 4},
    }, indent=1), encoding="utf-8")
    return {"root": root, "data": data, "rules": rules, "gazetteer": gaz,
            "lexicon": lex, "config": config}
