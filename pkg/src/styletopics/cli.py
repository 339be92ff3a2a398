"""Command-line pipeline: calibrate, extract-docs, tokenize-text, train,
topics, eval.

Data goes to files or stdout; logging goes to stderr.  Exit codes: 0 on
success, 2 for invalid input or configuration, 1 for internal errors.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click
import numpy as np

from . import docfile, lda, polylda, styleeval, text
from .config import PipelineConfig, load_config
from .errors import ConfigurationError, StyleTopicsError
from .interchange import read_activation_file
from .visual import (
    LayerSpec,
    build_item_documents,
    calibrate_threshold,
    classify_dense,
    compute_layer_density,
)

INVALID_INPUT = 2


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(INVALID_INPUT)


def handles_input_errors(fn):
    """Map bad-input exceptions to exit code 2; let internal errors surface."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StyleTopicsError as exc:
            _fail(str(exc))
        except OSError as exc:
            _fail(str(exc))

    return wrapper


def _check_outputs_distinct(out: Optional[str], inputs: List[Optional[str]]) -> None:
    if out is None:
        return
    out_path = Path(out).resolve()
    for inp in inputs:
        if inp is not None and Path(inp).resolve() == out_path:
            raise ConfigurationError(f"output path {out!r} is also an input path")


def _effective_config(
    config_path: Optional[str],
    layers: Optional[str],
    t1: Optional[float],
    k: Optional[int],
    alpha: Optional[float],
    beta: Optional[float],
    iters: Optional[int],
    seed: Optional[int],
    metric: Optional[str],
) -> PipelineConfig:
    """Load the config file (if any) and apply flag overrides; flags win."""
    cfg = load_config(config_path) if config_path else PipelineConfig()
    specs = list(cfg.layers)
    if layers is not None:
        wanted = _parse_layer_list(layers)
        by_id = {spec.layer_id: spec for spec in specs}
        specs = []
        for layer_id in wanted:
            if layer_id in by_id:
                specs.append(by_id[layer_id])
            elif t1 is not None:
                specs.append(LayerSpec(layer_id=layer_id, t1=t1))
            else:
                raise ConfigurationError(
                    f"layer {layer_id} is not in the config and no --t1 was given"
                )
    if t1 is not None:
        specs = [
            LayerSpec(s.layer_id, t1, s.dense, s.grid_fraction) for s in specs
        ]
    return PipelineConfig(
        layers=specs,
        k=k if k is not None else cfg.k,
        alpha=alpha if alpha is not None else cfg.alpha,
        beta=beta if beta is not None else cfg.beta,
        iterations=iters if iters is not None else cfg.iterations,
        seed=seed if seed is not None else cfg.seed,
        metric=metric if metric is not None else cfg.metric,
    )


def _parse_layer_list(value: str) -> List[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise ConfigurationError(f"--layers expects comma-separated ints, got {value!r}")


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="YAML pipeline configuration.")(fn)
    fn = click.option("--layers", default=None, help="Comma-separated layer ids.")(fn)
    fn = click.option("--t1", type=float, default=None,
                      help="Activation threshold override for all selected layers.")(fn)
    fn = click.option("--k", type=int, default=None, help="Topic count.")(fn)
    fn = click.option("--alpha", type=float, default=None,
                      help="Document-topic concentration (default 50/k).")(fn)
    fn = click.option("--beta", type=float, default=None,
                      help="Topic-word concentration.")(fn)
    fn = click.option("--iters", type=int, default=None, help="Gibbs sweeps.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Random seed.")(fn)
    fn = click.option("--metric", default=None,
                      type=click.Choice(list(styleeval.METRICS)), help="Distance metric.")(fn)
    return fn


@click.group()
def main() -> None:
    """Style-embedding pipeline over visual and text documents."""


@main.command()
@click.argument("activations", type=click.Path(exists=True))
@_common_options
@click.option("--sample-size", type=int, default=100, show_default=True,
              help="Records per layer used for calibration.")
@click.option("--percentile", type=float, default=90.0, show_default=True,
              help="Nearest-rank percentile of pooled |activation| for suggested t1.")
@handles_input_errors
def calibrate(activations, config_path, layers, t1, k, alpha, beta, iters, seed,
              metric, sample_size, percentile) -> None:
    """Suggest per-layer thresholds and report layer density."""
    if sample_size < 1:
        raise ConfigurationError(f"--sample-size must be >= 1, got {sample_size}")
    wanted = set(_parse_layer_list(layers)) if layers is not None else None

    sample: Dict[int, list] = {}
    for record in read_activation_file(activations):
        if wanted is not None and record.layer_id not in wanted:
            continue
        bucket = sample.setdefault(record.layer_id, [])
        if len(bucket) < sample_size:
            bucket.append(record)
    if not sample:
        raise ConfigurationError("no activation records matched the requested layers")

    click.echo("layer\tt1\tdensity\tdense")
    for layer_id in sorted(sample):
        records = sample[layer_id]
        layer_t1 = t1 if t1 is not None else calibrate_threshold(records, percentile)
        density = compute_layer_density(records, layer_t1)[layer_id]
        dense = classify_dense(density)
        click.echo(f"{layer_id}\t{layer_t1!r}\t{density!r}\t{str(dense).lower()}")


@main.command("extract-docs")
@click.argument("activations", type=click.Path(exists=True))
@_common_options
@click.option("--out", type=click.Path(), default=None,
              help="Output document file (default stdout).")
@handles_input_errors
def extract_docs(activations, config_path, layers, t1, k, alpha, beta, iters, seed,
                 metric, out) -> None:
    """Turn an activation stream into a visual document file."""
    cfg = _effective_config(config_path, layers, t1, k, alpha, beta, iters, seed, metric)
    if not cfg.layers:
        raise ConfigurationError("no layers configured; use --config or --layers/--t1")
    _check_outputs_distinct(out, [activations, config_path])

    docs = build_item_documents(read_activation_file(activations), cfg.layers)
    pairs = [(doc.item_id, list(doc.tokens)) for doc in docs]
    if out is None:
        docfile.write_documents(pairs, sys.stdout)
    else:
        docfile.write_document_file(pairs, out)
        click.echo(f"wrote {len(pairs)} documents to {out}", err=True)


@main.command("tokenize-text")
@click.argument("items", type=click.Path(exists=True))
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True),
              default=None, help="Stopword list, one word per line.")
@click.option("--delimiter", default=None,
              help="Column delimiter (default: tab for .tsv, comma otherwise).")
@click.option("--out", type=click.Path(), default=None,
              help="Output document file (default stdout).")
@handles_input_errors
def tokenize_text(items, stopwords_path, delimiter, out) -> None:
    """Turn an item_id,title,attributes table into a text document file."""
    _check_outputs_distinct(out, [items, stopwords_path])
    if delimiter is None:
        delimiter = "\t" if items.endswith(".tsv") else ","
    stopwords = text.load_stopword_file(stopwords_path) if stopwords_path else set()
    with open(items, "r", encoding="utf-8", newline="") as f:
        rows = text.read_item_rows(f, delimiter=delimiter)
    documents = text.tokenize_items(rows, stopwords)
    pairs = [(doc.item_id, sorted(doc.tokens)) for doc in documents]
    if out is None:
        docfile.write_documents(pairs, sys.stdout)
    else:
        docfile.write_document_file(pairs, out)
        click.echo(f"wrote {len(pairs)} documents to {out}", err=True)


def _progress_printer(sweep: int, log_likelihood: float) -> None:
    click.echo(f"sweep {sweep}\tlog_likelihood {log_likelihood:.4f}", err=True)


@main.command()
@click.argument("docs", nargs=-1, required=True, type=click.Path(exists=True))
@_common_options
@click.option("--mode", type=click.Choice(["lda", "polylda"]), default="lda",
              show_default=True, help="Model family; polylda takes one docs file per language.")
@click.option("--out", type=click.Path(), required=True, help="Model JSON output path.")
@handles_input_errors
def train(docs, config_path, layers, t1, k, alpha, beta, iters, seed, metric,
          mode, out) -> None:
    """Train a topic model over one or more document files."""
    cfg = _effective_config(config_path, layers, t1, k, alpha, beta, iters, seed, metric)
    _check_outputs_distinct(out, [*docs, config_path])

    if mode == "lda":
        if len(docs) != 1:
            raise ConfigurationError(f"lda mode takes exactly one docs file, got {len(docs)}")
        with open(docs[0], "r", encoding="utf-8") as f:
            corpus = lda.encode_corpus(f)
        model = lda.train_lda(
            corpus, cfg.k, alpha=cfg.alpha, beta=cfg.beta,
            iterations=cfg.iterations, seed=cfg.seed, progress=_progress_printer,
        )
        lda.save_model(model, out)
    else:
        streams = [open(path, "r", encoding="utf-8") for path in docs]
        try:
            corpus = polylda.align_tuples(streams)
        finally:
            for stream in streams:
                stream.close()
        model = polylda.train_polylda(
            corpus, cfg.k, alpha=cfg.alpha, beta=cfg.beta,
            iterations=cfg.iterations, seed=cfg.seed, progress=_progress_printer,
        )
        polylda.save_model(model, out)
    click.echo(f"wrote model to {out}", err=True)


def load_any_model(path):
    """Read a model JSON of either family; returns ("lda"|"polylda", model)."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise StyleTopicsError(f"invalid model JSON in {path}: {exc}") from exc
    kind = data.get("format")
    if kind == "lda":
        return "lda", lda.model_from_dict(data)
    if kind == "polylda":
        return "polylda", polylda.model_from_dict(data)
    raise StyleTopicsError(f"unrecognized model format {kind!r} in {path}")


@main.command()
@click.argument("model_path", metavar="MODEL", type=click.Path(exists=True))
@click.option("-n", "n_words", type=int, default=10, show_default=True,
              help="Words shown per topic.")
@handles_input_errors
def topics(model_path, n_words) -> None:
    """Print the top words of every topic."""
    kind, model = load_any_model(model_path)
    if kind == "lda":
        for topic in range(model.n_topics):
            ranked = lda.top_words(model, topic, n_words)
            rendered = " ".join(f"{tok}({p:.6f})" for tok, p in ranked)
            click.echo(f"topic {topic}\t{rendered}")
    else:
        for topic in range(model.n_topics):
            per_language = polylda.top_words_per_language(model, topic, n_words)
            for lang, ranked in enumerate(per_language):
                rendered = " ".join(f"{tok}({p:.6f})" for tok, p in ranked)
                click.echo(f"topic {topic}\tlang {lang}\t{rendered}")


def _theta_map(kind: str, model) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    if kind == "lda":
        theta = lda.estimate_theta(model)
        ids = model.doc_ids
    else:
        theta = polylda.estimate_shared_theta(model)
        ids = model.item_ids
    return {item: theta[i] for i, item in enumerate(ids)}, theta


@main.command("eval")
@click.argument("model_path", metavar="MODEL", type=click.Path(exists=True))
@click.option("--top", "top_path", type=click.Path(exists=True), required=True,
              help="CSV of most-similar item pairs.")
@click.option("--bottom", "bottom_path", type=click.Path(exists=True), required=True,
              help="CSV of least-similar item pairs.")
@click.option("--metric", default=None, type=click.Choice(list(styleeval.METRICS)),
              help="Distance metric (default euclidean).")
@click.option("--out", type=click.Path(), default=None,
              help="Report JSON path (default stdout).")
@click.option("--distances-csv", type=click.Path(), default=None,
              help="Optional per-pair distance dump for plotting.")
@handles_input_errors
def evaluate(model_path, top_path, bottom_path, metric, out, distances_csv) -> None:
    """Score a model's topic space against co-click pair sets."""
    metric = metric or styleeval.DEFAULT_METRIC
    _check_outputs_distinct(out, [model_path, top_path, bottom_path])
    _check_outputs_distinct(distances_csv, [model_path, top_path, bottom_path, out])

    kind, model = load_any_model(model_path)
    theta_by_item, theta = _theta_map(kind, model)
    top_pairs = styleeval.load_pair_file(top_path, styleeval.TOP_RECS)
    bottom_pairs = styleeval.load_pair_file(bottom_path, styleeval.BOTTOM_RECS)

    top_stats = styleeval.pair_distances(theta_by_item, top_pairs, metric)
    bottom_stats = styleeval.pair_distances(theta_by_item, bottom_pairs, metric)
    report = styleeval.build_report(metric, top_stats, bottom_stats, theta)

    rendered = json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n"
    if out is None:
        sys.stdout.write(rendered)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(rendered)
        click.echo(f"wrote report to {out}", err=True)

    if distances_csv is not None:
        with open(distances_csv, "w", encoding="utf-8", newline="\n") as f:
            styleeval.write_distances_csv(f, top_stats, bottom_stats, top_pairs, bottom_pairs)


if __name__ == "__main__":
    main()
