"""Command-line front end: split, apply-rules, consolidate, evaluate, report.

Exit codes: 0 on success, 1 on data errors (malformed corpora, alignment
failures, schema mismatches), 2 on configuration errors (bad flags, missing
paths).  Given identical inputs, flags and seed, every command writes
byte-identical output files.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import consolidate as cons
from . import corpus_io, metrics, report, rules
from .corpus_io import CorpusError, Document, SplitConfig


class DataError(click.ClickException):
    """Data-level failure; click exits with code 1."""


def _read_corpus(path: Path) -> list[Document]:
    try:
        docs = corpus_io.read_corpus_dir(path)
    except CorpusError as err:
        raise DataError(f"{path}: {err}") from err
    if not docs:
        raise DataError(f"{path}: no .conll files found")
    return docs


def _parse_ratios(_ctx, _param, value: str) -> tuple[float, float, float]:
    parts = value.split(",")
    if len(parts) != 3:
        raise click.BadParameter("expected three comma-separated fractions")
    try:
        train, dev, test = (float(p) for p in parts)
    except ValueError:
        raise click.BadParameter(f"not numeric: {value!r}") from None
    return train, dev, test


@click.group()
@click.version_option(package_name="lexner")
def main() -> None:
    """Rule-based NER, prediction consolidation and two-level evaluation
    for sentence-per-file CoNLL corpora."""


@main.command("split")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path), help="Corpus directory (*.conll).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path), help="Output directory; gets train/, dev/, test/ and manifest.tsv.")
@click.option("--ratios", default="0.6,0.2,0.2", callback=_parse_ratios, show_default=True, help="train,dev,test fractions summing to 1.")
@click.option("--seed", default=0, show_default=True, type=int, help="Shuffle seed.")
def cmd_split(in_dir: Path, out_dir: Path, ratios: tuple[float, float, float], seed: int) -> None:
    """Deterministically partition a corpus into train/dev/test."""
    try:
        cfg = SplitConfig(*ratios, seed=seed)
    except ValueError as err:
        raise click.UsageError(str(err)) from err
    docs = _read_corpus(in_dir)
    try:
        train, dev, test = corpus_io.split_corpus(docs, cfg)
    except CorpusError as err:
        raise DataError(str(err)) from err
    manifest_lines = []
    for name, part in (("train", train), ("dev", dev), ("test", test)):
        corpus_io.write_corpus_dir(part, out_dir / name)
        manifest_lines.extend((doc.doc_id, name) for doc in part)
    manifest_lines.sort()
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for doc_id, name in manifest_lines:
            fh.write(f"{doc_id}\t{name}\n")
    click.echo(f"split {len(docs)} documents: train={len(train)} dev={len(dev)} test={len(test)}")


@main.command("apply-rules")
@click.option("--rules", "rules_file", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Ruleset JSON file.")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path), help="Input corpus directory.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path), help="Directory for prediction .conll files.")
def cmd_apply_rules(rules_file: Path, in_dir: Path, out_dir: Path) -> None:
    """Annotate a corpus with a compiled ruleset (tokens copied verbatim)."""
    docs = _read_corpus(in_dir)
    try:
        definition = rules.load_ruleset_file(rules_file)
        ruleset = definition.compile(corpus=docs)
    except rules.RulesetError as err:
        raise DataError(str(err)) from err
    from .spans import spans_to_tags

    predictions = []
    for doc in docs:
        spans = rules.apply_ruleset(ruleset, doc)
        predictions.append(doc.with_tags(spans_to_tags(spans, len(doc))))
    corpus_io.write_corpus_dir(predictions, out_dir)
    click.echo(f"annotated {len(predictions)} documents -> {out_dir}")


@main.command("consolidate")
@click.option("--gold", "gold_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path), help="Gold corpus directory.")
@click.option("--completions", "completions_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path), help="Directory of <doc_id>.<Class>.<k>.txt completion files.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path), help="Output root; gets gold/, optimistic/, pessimistic/ and rejections.log.")
@click.option("--max-len-factor", default=3.0, show_default=True, type=float, help="Reject completions longer than this multiple of the input length.")
def cmd_consolidate(gold_dir: Path, completions_dir: Path, out_dir: Path, max_len_factor: float) -> None:
    """Validate completions and write gold/optimistic/pessimistic IOB trees."""
    gold_docs = _read_corpus(gold_dir)
    try:
        by_doc = cons.read_completion_files(completions_dir)
    except ValueError as err:
        raise DataError(str(err)) from err
    unknown = sorted(set(by_doc) - {d.doc_id for d in gold_docs})
    if unknown:
        raise DataError(f"completions for unknown documents: {', '.join(unknown)}")

    triples = {"gold": [], "optimistic": [], "pessimistic": []}
    rejections: list[cons.Rejection] = []
    for doc in gold_docs:
        bundle, rejected = cons.build_bundle(
            doc.doc_id, doc.token_texts, by_doc.get(doc.doc_id, ()), max_len_factor
        )
        rejections.extend(rejected)
        gold_doc, opt_doc, pes_doc = cons.emit_iob_triple(bundle, doc.tags)
        triples["gold"].append(gold_doc)
        triples["optimistic"].append(opt_doc)
        triples["pessimistic"].append(pes_doc)
    for name, docs in triples.items():
        corpus_io.write_corpus_dir(docs, out_dir / name)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "rejections.log", "w", encoding="utf-8", newline="\n") as fh:
        for r in rejections:
            fh.write(f"{r.doc_id}\t{r.entity_class.value}\t{r.reason}\n")
    click.echo(
        f"consolidated {len(gold_docs)} documents "
        f"({len(rejections)} completions rejected) -> {out_dir}"
    )


@main.command("evaluate")
@click.option("--gold", "gold_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path), help="Gold corpus directory.")
@click.option("--pred", "pred_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path), help="Prediction corpus directory (same file stems).")
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False, path_type=Path), help="Result JSON file to write.")
@click.option("--system", default=None, help="System name recorded in the result [default: prediction directory name].")
@click.option("--jaccard-population", type=click.Choice(["either", "gold"]), default="either", show_default=True, help="Count documents where the class occurs in gold or prediction, or in gold only.")
def cmd_evaluate(gold_dir: Path, pred_dir: Path, out_file: Path, system: str | None, jaccard_population: str) -> None:
    """Token P/R/F1 and Jaccard statistics for aligned gold/pred directories."""
    gold_docs = {d.doc_id: d for d in _read_corpus(gold_dir)}
    pred_docs = {d.doc_id: d for d in _read_corpus(pred_dir)}
    missing_pred = sorted(set(gold_docs) - set(pred_docs))
    missing_gold = sorted(set(pred_docs) - set(gold_docs))
    if missing_pred or missing_gold:
        raise DataError(
            "gold/pred directories differ: "
            f"missing predictions for {missing_pred or 'none'}, "
            f"missing gold for {missing_gold or 'none'}"
        )
    pairs = [(gold_docs[doc_id], pred_docs[doc_id]) for doc_id in sorted(gold_docs)]
    broken = []
    for gold, pred in pairs:
        try:
            corpus_io.validate_alignment(gold, pred)
        except corpus_io.AlignmentError as err:
            broken.append(f"{gold.doc_id}: {err}")
    if broken:
        raise DataError("misaligned documents:\n  " + "\n  ".join(broken))
    result = metrics.evaluate_pairs(
        pairs, system or pred_dir.name, population=jaccard_population  # type: ignore[arg-type]
    )
    if out_file.parent != Path(""):
        out_file.parent.mkdir(parents=True, exist_ok=True)
    metrics.write_result(result, out_file)
    click.echo(
        f"evaluated {len(pairs)} documents: micro F1 {result.micro.f1:.4f}, "
        f"macro F1 {result.macro_f1:.4f} -> {out_file}"
    )


@main.command("report")
@click.argument("result_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["md", "csv"]), default="md", show_default=True, help="Output format.")
@click.option("--locale", type=click.Choice(["de", "en"]), default="en", show_default=True, help="Class label language.")
@click.option("--out", "out_file", default=None, type=click.Path(dir_okay=False, path_type=Path), help="Write here instead of stdout.")
def cmd_report(result_files: tuple[Path, ...], fmt: str, locale: str, out_file: Path | None) -> None:
    """Render comparison tables from one result JSON file per system."""
    try:
        systems = [report.load_result_file(f) for f in result_files]
    except report.ReportSchemaError as err:
        raise DataError(str(err)) from err
    text = report.render_report(
        systems,
        fmt="markdown" if fmt == "md" else "csv",
        locale="german" if locale == "de" else "english",
    )
    if out_file is None:
        click.echo(text, nl=False)
    else:
        with open(out_file, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        click.echo(f"report -> {out_file}", err=True)


if __name__ == "__main__":
    sys.exit(main())
