"""
Analysis Service for the DiscoGraMS pipeline
Character embeddings from the graph encoder, 3-D PCA, K-Means and scatter export
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.cluster import kmeans_plusplus
from sklearn.decomposition import PCA

from config import get_config
from discograms.models.graph import CHARACTER, CaDGraph
from discograms.models.reports import SCHEMA_VERSION, CharacterAnalysis
from discograms.nn.lgat import LgatModel
from discograms.services.graph_service import graph_stats
from discograms.utils.exceptions import (
    ConfigMismatch, DegenerateRank, NoCharacters, TooFewPoints, UnwritableFile
)

logger = logging.getLogger(__name__)

PCA_DIMS = 3
DEGENERATE_RATIO = 1e-10


def _as_model(checkpoint: Union[str, Path, LgatModel]) -> LgatModel:
    return checkpoint if isinstance(checkpoint, LgatModel) else LgatModel.load(checkpoint)


def extract_character_embeddings(checkpoint: Union[str, Path, LgatModel], graph: CaDGraph) -> Dict[int, np.ndarray]:
    """
    Final-layer GAT outputs of the character nodes

    Args:
        checkpoint: Checkpoint directory or loaded model
        graph: Graph built with the model's embedding dimension

    Returns:
        Character id -> embedding

    Raises:
        ConfigMismatch: If dims differ or the model has no graph encoder
        NoCharacters: If the graph (as the model sees it) has no character nodes
    """
    model = _as_model(checkpoint)
    if graph.dim != model.config.embed_dim:
        raise ConfigMismatch(f"Graph dim {graph.dim} does not match checkpoint dim {model.config.embed_dim}",
                             {'graph_dim': graph.dim, 'checkpoint_dim': model.config.embed_dim})
    if not len(graph.characters):
        raise NoCharacters(f"Graph '{graph.screenplay_id}' has no character nodes")

    model.eval()
    per_type = model.node_embeddings(graph)
    if not len(per_type[CHARACTER]):
        raise NoCharacters(f"A {model.variant.value} model sees no character nodes",
                           {'variant': model.variant.value})
    return {cid: per_type[CHARACTER][row].astype(np.float64)
            for row, cid in enumerate(graph.characters.ids)}


def pca_3d(vectors: np.ndarray, strict: bool = False
           ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, List[int]]:
    """
    Project vectors onto their top three principal components

    Components are ordered by decreasing variance; each is signed so that its
    entry of largest magnitude is nonnegative. Axes without variance are kept
    as orthonormal padding, get zero coordinates and are reported degenerate.

    Args:
        vectors: [n, d] matrix with n >= 3 and d >= 3
        strict: Raise instead of padding when fewer than three axes carry variance

    Returns:
        (components [3, d], mean [d], projections [n, 3], explained variance [3], degenerate axes)

    Raises:
        TooFewPoints: If n < 3 or d < 3
        DegenerateRank: In strict mode, if the centered data has rank below 3
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < PCA_DIMS or vectors.shape[1] < PCA_DIMS:
        raise TooFewPoints(f"PCA needs at least {PCA_DIMS} vectors of dimension >= {PCA_DIMS}, "
                           f"got shape {list(vectors.shape)}", {'shape': list(vectors.shape)})

    pca = PCA(n_components=PCA_DIMS, svd_solver='full').fit(vectors)
    components = pca.components_.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    mean = pca.mean_.copy()
    variance = pca.explained_variance_.copy()

    total = float(np.var(vectors, axis=0, ddof=1).sum())
    degenerate = [i for i, v in enumerate(variance) if v <= DEGENERATE_RATIO * max(total, 1e-300)]
    projections = (vectors - mean) @ components.T
    if degenerate:
        if strict:
            raise DegenerateRank(f"Only {PCA_DIMS - len(degenerate)} informative PCA axes",
                                 {'degenerate_axes': degenerate})
        logger.warning(f"PCA axes {degenerate} carry no variance; padded with zero coordinates")
        projections[:, degenerate] = 0.0
        variance[degenerate] = 0.0
    return components, mean, projections, variance, degenerate


def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: Optional[int] = None
           ) -> Tuple[np.ndarray, List[float], np.ndarray]:
    """
    Lloyd's K-Means with k-means++ seeding

    Iterates until the assignment stops changing or ``max_iter`` rounds. An
    empty cluster takes the point farthest from its current center.

    Args:
        points: [n, p] points
        k: Number of clusters, 1 <= k <= n
        seed: Seed for the k-means++ initialization
        max_iter: Iteration cap (config default 100)

    Returns:
        (assignments [n], inertia after every iteration, centers [k, p])

    Raises:
        TooFewPoints: If there are fewer points than clusters
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if k < 1:
        raise ValueError(f"K must be at least 1, got {k}")
    if n < k:
        raise TooFewPoints(f"Cannot form {k} clusters from {n} points", {'points': n, 'k': k})
    max_iter = max_iter or get_config().KMEANS_MAX_ITER

    centers, _ = kmeans_plusplus(points, n_clusters=k, random_state=seed)
    labels: Optional[np.ndarray] = None
    trace: List[float] = []
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
        assigned = np.argmin(d2, axis=1)
        assigned = _repair_empty(assigned, d2, k)

        centers = np.stack([points[assigned == c].mean(axis=0) for c in range(k)])
        inertia = float(((points - centers[assigned]) ** 2).sum())
        trace.append(inertia)
        if labels is not None and np.array_equal(assigned, labels):
            break
        labels = assigned

    logger.debug(f"K-Means (k={k}, seed={seed}) stopped after {len(trace)} iterations, inertia {trace[-1]:.6g}")
    return assigned, trace, centers


def _repair_empty(assigned: np.ndarray, d2: np.ndarray, k: int) -> np.ndarray:
    assigned = assigned.copy()
    for c in range(k):
        if np.any(assigned == c):
            continue
        sizes = np.bincount(assigned, minlength=k)
        own = d2[np.arange(len(assigned)), assigned]
        movable = np.where(sizes[assigned] > 1, own, -np.inf)
        victim = int(np.argmax(movable))
        logger.warning(f"K-Means cluster {c} was empty; moved point {victim} into it")
        assigned[victim] = c
    return assigned


def analyze_characters(checkpoint: Union[str, Path, LgatModel], graph: CaDGraph, k: Optional[int] = None,
                       seed: int = 0, strict: bool = False) -> CharacterAnalysis:
    """
    Extract, project and cluster the character embeddings of one graph

    Args:
        checkpoint: Checkpoint directory or loaded model
        graph: Movie graph
        k: Cluster count (config default 3)
        seed: K-Means seed
        strict: Fail on degenerate PCA instead of padding

    Returns:
        CharacterAnalysis
    """
    k = k or get_config().KMEANS_K
    embeddings = extract_character_embeddings(checkpoint, graph)
    ids = sorted(embeddings)
    matrix = np.stack([embeddings[i] for i in ids])
    components, mean, projections, variance, degenerate = pca_3d(matrix, strict)
    assignments, trace, _ = kmeans(projections, k, seed)

    stats = graph_stats(graph)
    names = [stats.character_names[i] for i in ids]
    logger.info(f"Analyzed {len(ids)} characters of '{graph.screenplay_id}' into {k} clusters")
    return CharacterAnalysis(
        character_ids=ids,
        names=names,
        embeddings=matrix,
        components=components,
        mean=mean,
        projections=projections,
        explained_variance=variance,
        degenerate=degenerate,
        assignments=assignments,
        k=k,
        inertia=trace,
        degrees=stats.character_degree,
    )


def export_scatter(analysis: CharacterAnalysis, path: Union[str, Path],
                   csv_path: Optional[Union[str, Path]] = None) -> Path:
    """
    Write the 3-D scatter as JSON, optionally mirrored to CSV

    Args:
        analysis: Completed analysis
        path: JSON output path
        csv_path: Optional CSV mirror

    Returns:
        The JSON path

    Raises:
        UnwritableFile: If a file cannot be written
    """
    path = Path(path)
    records = analysis.records()
    payload = {
        'schema_version': SCHEMA_VERSION,
        'k': analysis.k,
        'explained_variance': [float(v) for v in analysis.explained_variance],
        'degenerate_axes': list(analysis.degenerate),
        'final_inertia': analysis.inertia[-1] if analysis.inertia else 0.0,
        'records': records,
    }
    try:
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding='utf-8')
        if csv_path is not None:
            pd.DataFrame.from_records(records).to_csv(csv_path, index=False)
    except OSError as e:
        raise UnwritableFile(f"Cannot write scatter output: {e}", {'path': str(path)}) from e

    logger.info(f"Scatter with {len(records)} characters written to {path}")
    return path
