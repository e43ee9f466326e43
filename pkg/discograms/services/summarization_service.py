"""
Summarization Service for the DiscoGraMS pipeline
Abstractive summaries from a trained LGAT checkpoint and a TextRank extractive baseline
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

import networkx as nx
import numpy as np

from config import get_config
from discograms.models.reports import ExtractedScene
from discograms.models.screenplay import Screenplay
from discograms.nn.encoders import chunk_script
from discograms.nn.lgat import LgatModel
from discograms.services.embedding_service import Embedder, cosine_matrix
from discograms.services.graph_service import build_graph
from discograms.services.screenplay_service import scene_to_text, screenplay_to_text
from discograms.utils.exceptions import ConfigMismatch

logger = logging.getLogger(__name__)

SCORE_DECIMALS = 12


def summarize_abstractive(checkpoint: Union[str, Path, LgatModel], screenplay: Screenplay,
                          embedder: Embedder) -> str:
    """
    Generate a summary with a trained model

    Args:
        checkpoint: Checkpoint directory or an already loaded model
        screenplay: Screenplay to summarize
        embedder: Embedder with the dimension the model was trained on

    Returns:
        Generated tokens joined by single spaces

    Raises:
        ConfigMismatch: If the embedder dimension differs from the checkpoint's
    """
    model = checkpoint if isinstance(checkpoint, LgatModel) else LgatModel.load(checkpoint)
    config = model.config
    if embedder.dim != config.embed_dim:
        raise ConfigMismatch(
            f"Embedder dimension {embedder.dim} does not match checkpoint dimension {config.embed_dim}",
            {'embedder_dim': embedder.dim, 'checkpoint_dim': config.embed_dim}
        )

    model.eval()
    graph = None
    if model.variant.uses_graph:
        graph = build_graph(screenplay, embedder, config.include_heading, config.include_mentions)
    chunks = chunk_script(screenplay_to_text(screenplay), config.max_tokens) if model.variant.uses_text else None

    tokens = model.generate(graph, chunks)
    logger.info(f"Generated {len(tokens)}-token summary for '{screenplay.id}' ({model.variant.value})")
    return ' '.join(tokens)


def textrank_scores(vectors: np.ndarray, damping: float, threshold: float, tol: float,
                    max_iter: int) -> np.ndarray:
    """
    PageRank over the cosine-similarity graph of ``vectors``

    Pairs with similarity above ``threshold`` are joined by an edge weighted
    by that similarity. Iteration stops when the L1 change drops below ``tol``.

    Returns:
        Nonnegative scores summing to 1
    """
    n = len(vectors)
    sims = cosine_matrix(vectors, vectors)
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if sims[i, j] > threshold:
                graph.add_edge(i, j, weight=float(sims[i, j]))

    # networkx stops once the L1 change is below n * tol
    ranks = nx.pagerank(graph, alpha=damping, max_iter=max_iter, tol=tol / n, weight='weight')
    return np.array([ranks[i] for i in range(n)], dtype=np.float64)


def summarize_extractive(screenplay: Screenplay, embedder: Embedder, k: int,
                         damping: Optional[float] = None, threshold: Optional[float] = None
                         ) -> List[ExtractedScene]:
    """
    Pick the k most central scenes by TextRank

    Args:
        screenplay: Screenplay to summarize
        embedder: Embedder for scene descriptions
        k: Scene budget, at least 1
        damping: PageRank damping (config default 0.85)
        threshold: Minimum similarity for an edge (config default 0.1)

    Returns:
        Selected scenes in original order; ties in score go to the lower scene index
    """
    if k < 1:
        raise ValueError(f"Scene budget must be at least 1, got {k}")
    cfg = get_config()
    damping = cfg.TEXTRANK_DAMPING if damping is None else damping
    threshold = cfg.TEXTRANK_THRESHOLD if threshold is None else threshold

    scenes = screenplay.scenes
    vectors = embedder.embed_many([s.description for s in scenes])
    scores = textrank_scores(vectors, damping, threshold, cfg.TEXTRANK_TOL, cfg.TEXTRANK_MAX_ITER)

    ranked = sorted(range(len(scenes)), key=lambda i: (-round(float(scores[i]), SCORE_DECIMALS), i))
    chosen = sorted(ranked[:k])
    logger.info(f"Extractive summary of '{screenplay.id}': {len(chosen)} of {len(scenes)} scenes")
    return [ExtractedScene(scenes[i].index, float(scores[i]), scene_to_text(scenes[i])) for i in chosen]
