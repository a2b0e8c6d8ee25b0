"""Unified command line: ingestion, judge runs, reports (delimited output
plus rendered figures), human-eval export, dataset construction, serving."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import click

from . import __version__
from .analytics import delta_table_rows, format_mean_std, score_table_rows, Stats
from .config import RunConfig, load_config
from .dataset_tools import (
    HashNgramEmbedding,
    ScoredResponse,
    assemble_rag_input,
    chunk_text,
    kto_label,
    rejection_filter,
    select_top_k,
)
from .errors import TcmEvalError
from .events import EventLog
from .figures import (
    render_delta_table,
    render_human_report,
    render_score_table,
    render_trial_report,
)
from .fixtures import export_fixtures
from .service import EvalService, serve


def _service(ctx: click.Context) -> EvalService:
    return EvalService(ctx.obj["config"])


@click.group()
@click.version_option(version=__version__)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="YAML config file.")
@click.option("--data-dir", type=click.Path(), default=None,
              help="Override the data directory.")
@click.option("--lexicon", "lexicon_path", type=click.Path(), default=None,
              help="Override the herb lexicon file.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, data_dir: str | None,
         lexicon_path: str | None) -> None:
    try:
        config = load_config(config_path)
    except TcmEvalError as exc:
        raise click.ClickException(str(exc))
    if data_dir:
        config.data_dir = data_dir
    if lexicon_path:
        config.lexicon = lexicon_path
    ctx.ensure_object(dict)
    ctx.obj["config"] = config


@main.command()
@click.argument("cases", type=click.Path(exists=True))
@click.option("--responses", type=click.Path(exists=True), default=None,
              help="JSONL of model responses to ingest alongside the cases.")
@click.pass_context
def ingest(ctx: click.Context, cases: str, responses: str | None) -> None:
    """Ingest a JSONL case file (and optionally model responses)."""
    service = _service(ctx)
    try:
        count, warnings = service.ingest_cases(cases)
        click.echo(f"ingested {count} cases")
        for warning in warnings:
            click.echo(f"  warning: {warning}", err=True)
        if responses:
            count, warnings = service.ingest_responses(responses)
            click.echo(f"ingested {count} responses")
            for warning in warnings:
                click.echo(f"  warning: {warning}", err=True)
    finally:
        service.close()


@main.command()
@click.option("--judges", "judge_names", default="",
              help="Comma-separated judge names (default: all configured).")
@click.option("--max-requests", type=int, default=None,
              help="Budget: dispatch at most this many judge requests.")
@click.pass_context
def judge(ctx: click.Context, judge_names: str, max_requests: int | None) -> None:
    """Run the configured judges over every un-evaluated triple."""
    from .judges import run_evaluation

    service = _service(ctx)
    try:
        names = [n.strip() for n in judge_names.split(",") if n.strip()] or None
        selected = service.select_judges(names)
        summary = run_evaluation(
            cases=list(service.stores.cases.values()),
            responses=service.stores.responses,
            judges=selected,
            store=service.stores.verdicts,
            emit=service.record_verdict,
            max_requests=max_requests,
        )
        click.echo(
            f"triples: {summary.total} total, {summary.skipped} already done, "
            f"{summary.completed} completed, {summary.failed} failed"
        )
    finally:
        service.close()


def _write_rows(rows: list[dict], out_base: Path, fmt: str) -> Path:
    if fmt == "json":
        path = out_base.with_suffix(".json")
        path.write_text(json.dumps(rows, ensure_ascii=False, indent=2),
                        encoding="utf-8")
        return path
    path = out_base.with_suffix(".csv")
    fieldnames: list[str] = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return path


@main.command()
@click.option("--group-by", default="doctor,model,judge", show_default=True)
@click.option("--benchmark", default=None,
              help="Also emit a delta table against this model.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="reports",
              show_default=True)
@click.pass_context
def report(ctx: click.Context, group_by: str, benchmark: str | None, fmt: str,
           out_dir: str) -> None:
    """Emit score/delta/human/trial reports with figures alongside."""
    service = _service(ctx)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        axes = tuple(a.strip() for a in group_by.split(",") if a.strip())
        try:
            table = service.scores_report(axes)
            written.append(_write_rows(score_table_rows(table), out / "scores", fmt))
            written.append(render_score_table(table, out / "scores.png"))
        except TcmEvalError as exc:
            click.echo(f"scores report skipped: {exc}", err=True)
        if benchmark:
            try:
                delta = service.delta_report(benchmark)
                written.append(_write_rows(delta_table_rows(delta), out / "delta", fmt))
                written.append(render_delta_table(delta, out / "delta.png"))
            except TcmEvalError as exc:
                click.echo(f"delta report skipped: {exc}", err=True)
        human = service.human_report()
        rows = [
            {"doctor": r.doctor, "model": r.model, "dimension": r.dimension,
             "mean": round(r.mean, 2), "std": round(r.std, 2), "n": r.n,
             "mean_std": format_mean_std(Stats(r.mean, r.std, r.n))}
            for r in human.rows
        ]
        if rows:
            written.append(_write_rows(rows, out / "human", fmt))
            written.append(render_human_report(human, out / "human.png"))
        for warning in human.warnings:
            click.echo(f"  warning: {warning}", err=True)
        trial = service.trial_report()
        if trial:
            trial_rows = [
                {"model": model, "mean": round(tr.mean, 2), "std": round(tr.std, 2),
                 "n": len(tr.per_sample), "mean_std": tr.summary()}
                for model, tr in trial.items()
            ]
            written.append(_write_rows(trial_rows, out / "trial", fmt))
            written.append(render_trial_report(trial, out / "trial.png"))
        for path in written:
            click.echo(f"wrote {path}")
    finally:
        service.close()


@main.group()
def human() -> None:
    """Human-evaluation session tools."""


@human.command("export")
@click.option("--out", "out_path", type=click.Path(), default="sessions.jsonl",
              show_default=True)
@click.pass_context
def human_export(ctx: click.Context, out_path: str) -> None:
    """Export every rating session (blinded labels) as JSONL."""
    service = _service(ctx)
    try:
        lines = []
        for session_id in sorted(service.stores.book.sessions):
            lines.append(service.export_session(session_id).rstrip("\n"))
        Path(out_path).write_text(
            ("\n".join(lines) + "\n") if lines else "", encoding="utf-8"
        )
        click.echo(f"wrote {out_path} ({len(service.stores.book.sessions)} sessions)")
    finally:
        service.close()


@main.group()
def dataset() -> None:
    """Dataset-construction subcommands."""


def _read_jsonl(path: str) -> list[dict]:
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            click.echo(f"  warning: line {lineno} skipped ({exc})", err=True)
    return records


def _write_jsonl(path: str, records: list[dict]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


@dataset.command("chunk")
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--max-tokens", type=int, default=None,
              help="Token budget per chunk (default from config: 512).")
@click.option("--overlap", type=int, default=0, show_default=True)
@click.pass_context
def dataset_chunk(ctx: click.Context, input_path: str, output_path: str,
                  max_tokens: int | None, overlap: int) -> None:
    """Chunk JSONL documents ({"id", "text"}) into token-bounded pieces."""
    budget = max_tokens or ctx.obj["config"].chunk_max_tokens
    out: list[dict] = []
    for record in _read_jsonl(input_path):
        chunks = chunk_text(str(record["text"]), max_tokens=budget, overlap=overlap)
        for chunk in chunks:
            out.append({"doc_id": record.get("id", ""), "index": chunk.index,
                        "text": chunk.text, "token_count": chunk.token_count})
    _write_jsonl(output_path, out)
    click.echo(f"wrote {len(out)} chunks to {output_path}")


@dataset.command("rag")
@click.argument("cases_path", type=click.Path(exists=True))
@click.argument("chunks_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--top-k", type=int, default=None,
              help="Knowledge blocks per case (default from config: 3).")
@click.pass_context
def dataset_rag(ctx: click.Context, cases_path: str, chunks_path: str,
                output_path: str, top_k: int | None) -> None:
    """Attach the top-k matching knowledge chunks to each case input.

    Chunk records may carry a precomputed "embedding"; otherwise a local
    hashing embedding ranks by surface similarity.
    """
    k = top_k or ctx.obj["config"].top_k
    cases = _read_jsonl(cases_path)
    chunks = _read_jsonl(chunks_path)
    provider = HashNgramEmbedding()
    chunk_texts = [str(c["text"]) for c in chunks]
    vectors = [
        c["embedding"] if "embedding" in c else provider.embed([str(c["text"])])[0]
        for c in chunks
    ]
    out = []
    for case in cases:
        text = str(case["text"])
        query = case.get("embedding") or provider.embed([text])[0]
        top = select_top_k(query, vectors, k=k)
        out.append({"id": case.get("id", ""),
                    "input": assemble_rag_input(text, [chunk_texts[i] for i in top]),
                    "chunk_indices": top})
    _write_jsonl(output_path, out)
    click.echo(f"wrote {len(out)} assembled inputs to {output_path}")


@dataset.command("kto")
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.pass_context
def dataset_kto(ctx: click.Context, input_path: str, output_path: str) -> None:
    """Label generated samples true/false by similarity; the unassigned band
    is discarded. Original samples pass through labeled true."""
    thresholds = ctx.obj["config"].thresholds
    kept, discarded = [], 0
    for record in _read_jsonl(input_path):
        provenance = record.get("provenance", "model-generated")
        if provenance == "original":
            kept.append({**record, "label": True, "provenance": "original"})
            continue
        verdict = kto_label(float(record["similarity"]),
                            thresholds.kto_true, thresholds.kto_false)
        if verdict == "discard":
            discarded += 1
            continue
        kept.append({**record, "label": verdict == "true",
                     "provenance": "model-generated"})
    _write_jsonl(output_path, kept)
    click.echo(f"wrote {len(kept)} labeled samples ({discarded} discarded)")


@dataset.command("filter")
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--threshold", type=float, default=None,
              help="Keep scores strictly above this (default from config: 8.5).")
@click.pass_context
def dataset_filter(ctx: click.Context, input_path: str, output_path: str,
                   threshold: float | None) -> None:
    """Rejection-filter scored responses ({"sample_id", "response", "judge_score"})."""
    bar = threshold if threshold is not None else ctx.obj["config"].thresholds.rejection
    responses = [
        ScoredResponse(sample_id=str(r.get("sample_id", "")),
                       response=str(r.get("response", "")),
                       judge_score=float(r["judge_score"]))
        for r in _read_jsonl(input_path)
    ]
    kept = rejection_filter(responses, threshold=bar)
    _write_jsonl(output_path, [
        {"sample_id": r.sample_id, "response": r.response, "judge_score": r.judge_score}
        for r in kept
    ])
    click.echo(f"kept {len(kept)} of {len(responses)} responses")


@main.command("serve")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_context
def serve_cmd(ctx: click.Context, host: str | None, port: int | None) -> None:
    """Run the HTTP service (rating UI backend, judge runs, reports)."""
    config: RunConfig = ctx.obj["config"]
    if host:
        config.host = host
    if port:
        config.port = port
    try:
        serve(config)
    except TcmEvalError as exc:
        raise click.ClickException(str(exc))


@main.command("fixtures")
@click.option("--out", "out_dir", type=click.Path(), default="fixtures",
              show_default=True)
def fixtures_cmd(out_dir: str) -> None:
    """Export the shipped golden fixtures (worked example, verdict, lexicon)."""
    for path in export_fixtures(out_dir):
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
