"""Operator command line: ingestion, index building, offline pipelines,
evaluation, and the service runner.

Every command is a thin shell over the library; --json output mirrors the
library serializations byte for byte.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import evalkit, investigation, reading, writing
from .config import load_config
from .embedding import TrainConfig, TrainingTriple, train_projection
from .errors import LitpilotError
from .service import AppState

EXIT_DOMAIN_ERROR = 1


def _state(config_path: str | None) -> AppState:
    return AppState(load_config(config_path))


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_DOMAIN_ERROR)


@click.group()
@click.option("--config", "config_path", default=None,
              help="Config file (or LITPILOT_CONFIG).")
@click.pass_context
def main(ctx, config_path):
    """litpilot: scientific-literature assistant."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--format", "fmt", default="markdown-like",
              type=click.Choice(["markdown-like", "plain"]))
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def ingest(ctx, path, fmt, as_json):
    """Parse, chunk, embed, and index one document."""
    try:
        state = _state(ctx.obj["config_path"])
        info = state.ingest(Path(path).read_text(encoding="utf-8"), fmt)
    except LitpilotError as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps(info, ensure_ascii=False))
    else:
        click.echo(f"{info['doc_id']}\t{info['chunks']}\t{info['title']}")


@main.group()
def index():
    """Index maintenance."""


@index.command("build")
@click.pass_context
def index_build(ctx):
    """Rebuild the chunk index from the stored papers."""
    try:
        state = _state(ctx.obj["config_path"])
        state.index.upsert([])  # no-op touch; rebuild below
        from .corpus import split_into_chunks
        from .embedding import EmptyInput, embed
        from .retrieval import IndexEntry, VectorIndex
        from .service import domain_tags

        rebuilt = VectorIndex(state.model.d_out)
        total = 0
        for doc in state.docs.all().values():
            entries = []
            tags = domain_tags(doc, state.gazetteer)
            for chunk in split_into_chunks(doc, state.config.chunk_policy):
                try:
                    vec = embed(chunk.text, state.model)
                except EmptyInput:
                    continue
                entries.append(IndexEntry(
                    chunk_id=chunk.chunk_id, vector=vec, text=chunk.text,
                    meta={"doc_id": doc.doc_id, "year": doc.year,
                          "authors": doc.authors,
                          "institutions": doc.institutions,
                          "domain_tags": tags, "venue": doc.venue,
                          "section_path": chunk.section_path}))
            rebuilt.upsert(entries)
            total += len(entries)
        state.index = rebuilt
        state.persist()
    except LitpilotError as exc:
        _fail(exc)
    click.echo(f"indexed {total} chunks from {len(state.docs)} papers")


@main.command()
@click.argument("query")
@click.option("--k", default=10, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.option("--figures-dir", type=click.Path(), default=None,
              help="Also render stats figures (year histogram) here.")
@click.pass_context
def search(ctx, query, k, as_json, figures_dir):
    """Hybrid search over the local index."""
    try:
        state = _state(ctx.obj["config_path"])
        from .embedding import embed

        qvec = embed(query, state.model)
        hits = state.index.hybrid_search(query, qvec, None, k)
    except LitpilotError as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps({"hits": [
            {"chunk_id": h.chunk_id, "score": h.score, "snippet": h.snippet}
            for h in hits
        ]}, ensure_ascii=False))
    else:
        for h in hits:
            click.echo(f"{h.chunk_id}\t{h.score:.6f}\t{h.snippet}")
    if figures_dir:
        from .reporting import render_year_histogram

        doc_ids = {state.chunk_to_doc(h.chunk_id) for h in hits}
        papers = [state.docs.get(d) for d in doc_ids if d and d in state.docs]
        stats = investigation.compute_summary_stats(papers)
        out = Path(figures_dir)
        out.mkdir(parents=True, exist_ok=True)
        render_year_histogram(stats, out / "year_histogram.png")
        (out / "year_histogram.tsv").write_text(
            "".join(f"{y}\t{c}\n" for y, c in sorted(
                stats.year_histogram.items())),
            encoding="utf-8")


@main.command()
@click.argument("doc_ids", nargs=-1, required=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def review(ctx, doc_ids, as_json):
    """Generate a clustered literature review (at most 30 papers)."""
    try:
        state = _state(ctx.obj["config_path"])
        outline = investigation.generate_review(
            list(doc_ids), investigation.ReviewDeps(
                docs=state.docs.all(), model=state.model,
                backend=state.backend))
    except LitpilotError as exc:
        _fail(exc)
    click.echo(json.dumps(outline.to_dict(), ensure_ascii=False)
               if as_json else outline.to_markdown())


@main.command()
@click.argument("doc_ids", nargs=-1)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def compare(ctx, doc_ids, as_json):
    """Compare two to five papers."""
    try:
        state = _state(ctx.obj["config_path"])
        report = reading.compare_papers(list(doc_ids), reading.CompareDeps(
            docs=state.docs.all(), backend=state.backend))
    except LitpilotError as exc:
        _fail(exc)
    click.echo(json.dumps(report.to_dict(), ensure_ascii=False)
               if as_json else report.to_markdown())


@main.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--direction", required=True,
              type=click.Choice(["en->zh", "zh->en"]))
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def translate(ctx, file, direction, as_json):
    """Terminology-aware translation of a text file."""
    try:
        state = _state(ctx.obj["config_path"])
        result = writing.translate(
            Path(file).read_text(encoding="utf-8"), direction,
            state.lexicon, state.backend)
    except LitpilotError as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps({
            "translated": result.translated,
            "injected_terms": [
                {"source_term": t.source_term, "target_term": t.target_term,
                 "domain_tag": t.domain_tag} for t in result.injected_terms],
        }, ensure_ascii=False))
    else:
        click.echo(result.translated)


@main.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--style", default="academic",
              type=click.Choice(["academic", "concise"]))
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def polish(ctx, file, style, as_json):
    """Polish a draft; prints the polished text (or the full edit list)."""
    try:
        state = _state(ctx.obj["config_path"])
        result = writing.polish(Path(file).read_text(encoding="utf-8"),
                                style, state.backend)
    except LitpilotError as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps({
            "polished": result.polished,
            "edits": [{"span": list(e.span), "original": e.original,
                       "replacement": e.replacement,
                       "rationale": e.rationale} for e in result.edits],
            "dropped_edits": result.dropped_edits,
        }, ensure_ascii=False))
    else:
        click.echo(result.polished)


@main.command("train-embed")
@click.option("--triples", "triples_path", required=True,
              type=click.Path(exists=True),
              help="JSON-lines {question, positive_chunk, negative_chunks}.")
@click.option("--out", "out_path", default=None, help="Model output path.")
@click.option("--d-out", default=256, show_default=True)
@click.option("--epochs", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def train_embed(ctx, triples_path, out_path, d_out, epochs, seed):
    """Train the retrieval projection on mined triples."""
    try:
        state = _state(ctx.obj["config_path"])
        triples = []
        for line in Path(triples_path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                triples.append(TrainingTriple(
                    question=rec["question"],
                    positive_chunk=rec["positive_chunk"],
                    negative_chunks=tuple(rec["negative_chunks"])))

        def texts(chunk_id: str) -> str:
            entry = state.index.get(chunk_id)
            if entry is None:
                raise LitpilotError(f"chunk not in index: {chunk_id}")
            return entry.text

        model, losses = train_projection(triples, texts, TrainConfig(
            d_out=d_out, epochs=epochs, seed=seed))
        target = Path(out_path) if out_path else state.data_dir / "model.proj"
        model.save(target)
    except LitpilotError as exc:
        _fail(exc)
    for i, loss in enumerate(losses):
        click.echo(f"epoch {i}\tmean_loss {loss:.6f}")
    click.echo(f"saved {target}")


@main.group()
def eval():
    """Evaluation metrics."""


@eval.command("bleu")
@click.option("--cand", required=True, type=click.Path(exists=True))
@click.option("--refs", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def eval_bleu(cand, refs, as_json):
    """Line-aligned BLEU between a candidate file and a reference file."""
    cands = Path(cand).read_text(encoding="utf-8").splitlines()
    references = Path(refs).read_text(encoding="utf-8").splitlines()
    if len(cands) != len(references):
        _fail(LitpilotError("candidate and reference line counts differ"))
    scores = [
        evalkit.bleu(evalkit.bleu_tokenize(c), [evalkit.bleu_tokenize(r)])
        for c, r in zip(cands, references)
    ]
    mean = sum(scores) / len(scores) if scores else 0.0
    if as_json:
        click.echo(json.dumps({"sentence_mean": mean, "scores": scores}))
    else:
        click.echo(f"{mean:.6f}")


@eval.command("mos")
@click.option("--records", required=True, type=click.Path(exists=True))
@click.option("--group-by", default="criterion",
              type=click.Choice(["criterion", "task"]))
@click.option("--json", "as_json", is_flag=True)
@click.option("--figures-dir", type=click.Path(), default=None)
def eval_mos(records, group_by, as_json, figures_dir):
    """Aggregate MOS records (CSV: task, criterion, rater_id, score)."""
    try:
        recs = evalkit.load_mos_records(records)
        means = evalkit.aggregate_mos(recs, group_by)
    except (LitpilotError, ValueError) as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps(
            {g: evalkit.format_mos(m) for g, m in sorted(means.items())}))
    else:
        for group, mean in sorted(means.items()):
            click.echo(f"{group}\t{evalkit.format_mos(mean)}")
    if figures_dir:
        from .reporting import render_mos_bars

        out = Path(figures_dir)
        out.mkdir(parents=True, exist_ok=True)
        render_mos_bars(means, out / f"mos_by_{group_by}.png",
                        title=f"MOS by {group_by}")


@main.command("export-sft")
@click.argument("transcripts", type=click.Path(exists=True))
@click.option("--out", "out_path", default=None)
def export_sft(transcripts, out_path):
    """Export (task, prompt, response) JSON-lines transcripts as SFT records."""
    instructions = {
        "reading": "Answer the question about the given paper excerpt.",
        "polishing": "Polish the given academic draft.",
        "translation": "Translate the input between English and Chinese.",
    }
    rows = []
    for line in Path(transcripts).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rec = json.loads(line)
            rows.append((rec["task"], rec["prompt"], rec["response"]))
    records, dropped = evalkit.export_sft_dataset(
        rows, lambda task: instructions.get(task, f"Perform the {task} task."))
    payload = evalkit.sft_to_jsonl(records)
    if out_path:
        Path(out_path).write_text(payload, encoding="utf-8")
        click.echo(f"wrote {len(records)} records, dropped {dropped}")
    else:
        click.echo(payload, nl=False)
        if dropped:
            click.echo(f"dropped {dropped}", err=True)


@main.command()
@click.pass_context
def serve(ctx):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    try:
        state = _state(ctx.obj["config_path"])
    except LitpilotError as exc:
        _fail(exc)
    host, _, port = state.config.listen.partition(":")
    uvicorn.run(create_app(state=state), host=host or "127.0.0.1",
                port=int(port or 8080))


if __name__ == "__main__":
    main()
