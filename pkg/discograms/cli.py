"""
Command-line interface for the DiscoGraMS pipeline
Wires parsing, graph construction, training, summarization, analysis and evaluation

Exit codes: 0 on success, 1 on a pipeline error (error JSON on stderr),
2 on a usage error.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import click
from dotenv import load_dotenv

from config import get_config
from discograms import __version__
from discograms.config import load_settings
from discograms.core.logging import setup_logging
from discograms.models.reports import SCHEMA_VERSION
from discograms.models.screenplay import Screenplay
from discograms.nn.lgat import LgatModel, Variant
from discograms.services.analysis_service import analyze_characters, export_scatter
from discograms.services.embedding_service import DEFAULT_DIM, Embedder, HashingEmbedder, build_embedder
from discograms.services.evaluation_service import evaluate
from discograms.services.export_service import export_graph, import_graph
from discograms.services.graph_service import build_graph, graph_stats, strip_characters
from discograms.services.screenplay_service import load_corpus, parse_file, screenplay_to_text
from discograms.services.summarization_service import summarize_abstractive, summarize_extractive
from discograms.services.training_service import TrainingService
from discograms.utils.decorators import cli_errors
from discograms.utils.exceptions import SchemaViolation, UnreadableFile, UnwritableFile
from discograms.utils.metrics import ngram_novelty


logger = logging.getLogger(__name__)

VARIANTS = [v.value for v in Variant]
EMBEDDERS = ['hash', 'external']


def _read_bytes(path: Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise UnreadableFile(f"Cannot read {path}: {e}", {'path': str(path)}) from e


def _read_text(path: Path) -> str:
    try:
        return _read_bytes(path).decode('utf-8')
    except UnicodeDecodeError as e:
        raise UnreadableFile(f"{path} is not UTF-8: {e}", {'path': str(path)}) from e


def _write(data: bytes, out: Path) -> None:
    try:
        Path(out).write_bytes(data)
    except OSError as e:
        raise UnwritableFile(f"Cannot write {out}: {e}", {'path': str(out)}) from e


def _emit(payload: Dict[str, Any], out: Optional[Path] = None) -> None:
    """Write a JSON document to ``out`` or stdout."""
    text = json.dumps(payload, indent=2, ensure_ascii=False)
    if out is None:
        click.echo(text)
        return
    _write((text + '\n').encode('utf-8'), out)
    logger.info(f"Wrote {out}")


def _load_screenplay(path: Path, fmt: Optional[str] = None) -> Screenplay:
    """A screenplay JSON dump, or a raw XML / plain-text script."""
    if fmt is None and Path(path).suffix.lower() == '.json':
        try:
            return Screenplay.from_dict(json.loads(_read_text(path)))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise SchemaViolation(f"{path} is not a screenplay JSON dump: {e}", {'path': str(path)}) from e
    return parse_file(path, fmt)


def _embedder(kind: str, vectors: Optional[Path], dim: int, seed: int) -> Embedder:
    return build_embedder(kind, dim=dim, seed=seed, vectors=vectors)


def embedder_options(func):
    """Shared --embedder/--vectors/--dim/--embed-seed options."""
    func = click.option('--embed-seed', type=int, default=None, help='Hashing seed')(func)
    func = click.option('--dim', type=click.IntRange(min=1), default=None,
                        help='Hashing embedder dimension (profile default)')(func)
    func = click.option('--vectors', type=click.Path(exists=True, dir_okay=False, path_type=Path),
                        default=None, help='JSON-lines vector file for the external embedder')(func)
    func = click.option('--embedder', 'embedder_kind', type=click.Choice(EMBEDDERS), default='hash',
                        show_default=True)(func)
    return func


@click.group()
@click.version_option(__version__, prog_name='discograms')
@click.option('--profile', type=click.Choice(['desk', 'paper', 'large', 'testing']), default=None,
              help='Configuration profile (default: DISCOGRAMS_PROFILE or desk)')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR']), default=None)
@click.pass_context
def cli(ctx, profile, log_level):
    """DiscoGraMS: character-aware discourse graphs for screenplay summarization."""
    ctx.ensure_object(dict)
    ctx.obj['profile'] = profile
    setup_logging(log_level or get_config(profile).LOG_LEVEL)


def _settings(ctx, config_file=None, **overrides):
    return load_settings(ctx.obj.get('profile'), config_file, overrides)


@cli.command('parse')
@click.argument('file', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--format', 'fmt', type=click.Choice(['xml', 'txt']), default=None,
              help='Parser to use (inferred from the suffix by default)')
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), default=None)
@cli_errors
def parse_command(file, fmt, out):
    """Parse a screenplay into its JSON dump."""
    screenplay = parse_file(file, fmt)
    logger.info(f"Parsed '{screenplay.id}' with {len(screenplay.scenes)} scenes")
    _emit(screenplay.to_dict(), out)


@cli.command('build-graph')
@click.argument('screenplay', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@embedder_options
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option('--no-characters', is_flag=True, help='Strip character nodes and their edges')
@click.option('--include-mentions', is_flag=True, help='Link characters named in action text')
@click.option('--include-heading', is_flag=True, help='Prefix scene headings to embedded descriptions')
@click.option('--idf', is_flag=True, help='Weight hashed tokens by idf fitted on the screenplay text')
@click.pass_context
@cli_errors
def build_graph_command(ctx, screenplay, embedder_kind, vectors, dim, embed_seed, out,
                        no_characters, include_mentions, include_heading, idf):
    """Compile a screenplay into a CaD graph JSON."""
    settings = _settings(ctx)
    embedder = _embedder(embedder_kind, vectors, dim or settings.embed_dim,
                         settings.embed_seed if embed_seed is None else embed_seed)
    sp = _load_screenplay(screenplay)
    if idf:
        if not isinstance(embedder, HashingEmbedder):
            raise click.UsageError('--idf applies to the hash embedder only')
        embedder = embedder.fit_idf([s.description for s in sp.scenes] + [d.text for _, d in sp.dialogues])
    graph = build_graph(sp, embedder, include_heading, include_mentions)
    if no_characters:
        graph = strip_characters(graph)
    data = export_graph(graph, 'json')
    if out is None:
        click.echo(data.decode('utf-8'))
    else:
        _write(data, out)
        logger.info(f"Graph of '{graph.screenplay_id}' written to {out}")


@cli.command('stats')
@click.argument('graph', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@cli_errors
def stats_command(graph):
    """Print node and edge counts and character degrees."""
    _emit(graph_stats(import_graph(_read_bytes(graph))).to_dict())


@cli.command('export')
@click.argument('graph', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--format', 'fmt', type=click.Choice(['gexf', 'dot', 'json']), required=True)
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), required=True)
@cli_errors
def export_command(graph, fmt, out):
    """Export a graph for Gephi (GEXF) or Graphviz (DOT)."""
    _write(export_graph(import_graph(_read_bytes(graph)), fmt), out)
    logger.info(f"Exported {graph} as {fmt} to {out}")


@cli.command('train')
@click.option('--corpus', type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help='JSON file of configuration overrides')
@click.option('--variant', type=click.Choice(VARIANTS), default=Variant.FULL.value, show_default=True)
@click.option('--out', type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option('--epochs', type=click.IntRange(min=1), default=None)
@click.option('--max-steps', type=click.IntRange(min=1), default=None)
@click.option('--seed', type=int, default=None)
@click.option('--workers', type=click.IntRange(min=1), default=None)
@embedder_options
@click.pass_context
@cli_errors
def train_command(ctx, corpus, config_file, variant, out, epochs, max_steps, seed, workers,
                  embedder_kind, vectors, dim, embed_seed):
    """Train an LGAT variant and write a checkpoint directory."""
    settings = _settings(ctx, config_file, epochs=epochs, max_steps=max_steps, seed=seed,
                         workers=workers, embed_dim=dim, embed_seed=embed_seed)
    embedder = _embedder(embedder_kind, vectors, settings.embed_dim, settings.embed_seed)
    result = TrainingService(settings, embedder).train(load_corpus(corpus), variant, out)
    _emit(result.to_dict())


@cli.command('ablate')
@click.option('--corpus', type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None)
@click.option('--variant', 'variants', type=click.Choice(VARIANTS), multiple=True,
              help='Variants to compare (all by default)')
@click.option('--out', type=click.Path(file_okay=False, path_type=Path), default=None,
              help='Directory for per-variant checkpoints and evaluation CSVs')
@click.pass_context
@cli_errors
def ablate_command(ctx, corpus, config_file, variants, out):
    """Train each variant on a seeded split and score it on the held-out pairs."""
    settings = _settings(ctx, config_file)
    service = TrainingService(settings)
    pairs = load_corpus(corpus)
    results = {}
    for variant in variants or VARIANTS:
        ckpt = out / variant if out is not None else None
        eval_csv = out / f'{variant}_eval.csv' if out is not None else None
        results[variant] = service.run_ablation(pairs, variant, ckpt, eval_csv).to_dict()
    _emit({'schema_version': SCHEMA_VERSION, 'variants': results})


@cli.command('summarize')
@click.option('--ckpt', type=click.Path(exists=True, file_okay=False, path_type=Path), default=None)
@click.option('--script', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--extractive', is_flag=True, help='TextRank scene selection instead of the model')
@click.option('-k', 'k', type=click.IntRange(min=1), default=3, show_default=True,
              help='Scenes to select in extractive mode')
@embedder_options
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_context
@cli_errors
def summarize_command(ctx, ckpt, script, extractive, k, embedder_kind, vectors, dim, embed_seed, out):
    """Summarize a screenplay: plain text from a checkpoint, JSON scenes with --extractive."""
    screenplay = _load_screenplay(script)
    if extractive:
        settings = _settings(ctx)
        embedder = _embedder(embedder_kind, vectors, dim or settings.embed_dim,
                             settings.embed_seed if embed_seed is None else embed_seed)
        scenes = summarize_extractive(screenplay, embedder, k)
        _emit({'schema_version': SCHEMA_VERSION, 'mode': 'extractive',
               'scenes': [s.to_dict() for s in scenes]}, out)
        return

    if ckpt is None:
        raise click.UsageError('--ckpt is required unless --extractive is given')
    model = LgatModel.load(ckpt)
    embedder = _embedder(embedder_kind, vectors, dim or model.config.embed_dim,
                         model.config.embed_seed if embed_seed is None else embed_seed)
    summary = summarize_abstractive(model, screenplay, embedder)
    logger.info(f"Summarized '{screenplay.id}' with the {model.variant.value} model")
    if out is None:
        click.echo(summary)
        return
    _write((summary + '\n').encode('utf-8'), out)
    logger.info(f"Wrote {out}")


@cli.command('analyze-characters')
@click.option('--ckpt', type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option('--graph', 'graph_path', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True)
@click.option('-K', 'k', type=click.IntRange(min=1), default=None, help='Cluster count (default 3)')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option('--strict', is_flag=True, help='Fail when fewer than three PCA axes carry variance')
@cli_errors
def analyze_characters_command(ckpt, graph_path, k, seed, out, csv_path, strict):
    """Project character embeddings to 3-D and cluster them."""
    analysis = analyze_characters(ckpt, import_graph(_read_bytes(graph_path)), k, seed, strict)
    export_scatter(analysis, out, csv_path)


@cli.command('eval')
@click.option('--cand', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--ref', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@embedder_options
@cli_errors
def eval_command(cand, ref, embedder_kind, vectors, dim, embed_seed):
    """Score a candidate summary against a reference."""
    embedder = None
    if embedder_kind == 'external' or dim is not None or embed_seed is not None:
        embedder = build_embedder(embedder_kind, dim=dim or DEFAULT_DIM, seed=embed_seed or 0, vectors=vectors)
    _emit(evaluate(_read_text(cand), _read_text(ref), embedder).to_dict())


@cli.command('novelty')
@click.option('--summary', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--script', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@cli_errors
def novelty_command(summary, script):
    """Percentage of summary n-grams that never occur in the script."""
    if script.suffix.lower() in ('.xml', '.json'):
        script_text = screenplay_to_text(_load_screenplay(script))
    else:
        script_text = _read_text(script)
    _emit(ngram_novelty(_read_text(summary), script_text).to_dict())


def main(argv=None):
    """Console entry point; loads ``.env`` before dispatching."""
    load_dotenv()
    return cli.main(args=argv, prog_name='discograms')
