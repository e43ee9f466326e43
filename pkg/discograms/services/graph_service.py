"""
Graph Service for the DiscoGraMS pipeline
Compiles screenplays into character-aware discourse graphs
"""

import logging
import re
from typing import Dict, List, Tuple

import numpy as np

from discograms.models.graph import (
    CHARACTER, DIALOGUE, SCENE, CaDGraph, Edge, GraphStats, NodeTable
)
from discograms.models.screenplay import Screenplay
from discograms.services.embedding_service import Embedder
from discograms.utils.exceptions import EmbeddingDimMismatch

logger = logging.getLogger(__name__)

LABEL_LENGTH = 60


def _embed_all(embedder: Embedder, texts: List[str], what: str) -> np.ndarray:
    if not texts:
        return np.zeros((0, embedder.dim), dtype=np.float32)
    cache: Dict[str, np.ndarray] = {}
    rows = []
    for text in texts:
        if text not in cache:
            vec = np.asarray(embedder.embed(text), dtype=np.float32)
            if vec.shape != (embedder.dim,):
                raise EmbeddingDimMismatch(
                    f"Embedder returned shape {vec.shape} for a {what}, expected ({embedder.dim},)",
                    {'expected': embedder.dim, 'got': list(vec.shape)}
                )
            cache[text] = vec
        rows.append(cache[text])
    return np.stack(rows)


def _mentioned(names: List[str], text: str) -> List[str]:
    upper = text.upper()
    return [n for n in names if re.search(r'(?<!\w)' + re.escape(n) + r'(?!\w)', upper)]


def build_graph(screenplay: Screenplay, embedder: Embedder,
                include_heading: bool = False, include_mentions: bool = False) -> CaDGraph:
    """
    Build the CaD graph of a screenplay

    Scene nodes carry the embedding of the scene description, dialogue nodes
    the embedding of the dialogue text, character nodes start at zero.

    Args:
        screenplay: Parsed screenplay
        embedder: Sentence-encoder stand-in with dimension d
        include_heading: Prefix the scene heading to the embedded description
        include_mentions: Also link characters named in a scene's action text

    Returns:
        CaDGraph

    Raises:
        EmbeddingDimMismatch: If the embedder returns a vector of the wrong size
    """
    dim = embedder.dim
    registry = screenplay.characters
    names = list(registry)

    scene_texts = []
    for scene in screenplay.scenes:
        text = scene.description
        if include_heading and scene.heading:
            text = f"{scene.heading} {text}".strip()
        scene_texts.append(text)

    dialogue_rows: List[Tuple[int, str, str]] = [(s, d.speaker, d.text) for s, d in screenplay.dialogues]

    scenes = NodeTable(
        SCENE,
        tuple(s.index for s in screenplay.scenes),
        tuple(s.heading or f"scene {s.index}" for s in screenplay.scenes),
        _embed_all(embedder, scene_texts, 'scene'),
    )
    dialogues = NodeTable(
        DIALOGUE,
        tuple(range(len(dialogue_rows))),
        tuple(f"{speaker}: {text}"[:LABEL_LENGTH] for _, speaker, text in dialogue_rows),
        _embed_all(embedder, [text for _, _, text in dialogue_rows], 'dialogue'),
    )
    characters = NodeTable(
        CHARACTER,
        tuple(range(len(names))),
        tuple(names),
        np.zeros((len(names), dim), dtype=np.float32),
    )

    n_scenes = len(screenplay.scenes)
    edges_ss = tuple((i, i + 1) for i in range(n_scenes - 1))
    edges_sd = tuple((s, j) for j, (s, _, _) in enumerate(dialogue_rows))
    edges_cd = tuple((registry.id_of(speaker), j) for j, (_, speaker, _) in enumerate(dialogue_rows))

    edges_sc: List[Edge] = []
    for scene in screenplay.scenes:
        present: Dict[str, None] = {}
        for name in scene.speakers:
            present.setdefault(name, None)
        for name in scene.cast:
            present.setdefault(name, None)
        if include_mentions:
            for name in _mentioned(names, scene.description):
                present.setdefault(name, None)
        edges_sc.extend((scene.index, registry.id_of(name)) for name in present)

    graph = CaDGraph(
        dim=dim,
        scenes=scenes,
        dialogues=dialogues,
        characters=characters,
        edges_ss=edges_ss,
        edges_sd=edges_sd,
        edges_sc=tuple(edges_sc),
        edges_cd=edges_cd,
        screenplay_id=screenplay.id,
    )
    logger.info(
        f"Built graph for '{screenplay.id}': {len(scenes)} scenes, {len(dialogues)} dialogues, "
        f"{len(characters)} characters, {graph.edge_count} edges"
    )
    return graph


def strip_characters(graph: CaDGraph) -> CaDGraph:
    """
    Remove all character nodes and their edges

    Args:
        graph: Graph to strip

    Returns:
        Graph with no character nodes and empty sc/cd edges
    """
    if not len(graph.characters) and not graph.edges_sc and not graph.edges_cd:
        return graph
    return graph.with_changes(
        characters=NodeTable.empty(CHARACTER, graph.dim),
        edges_sc=(),
        edges_cd=(),
    )


def graph_stats(graph: CaDGraph) -> GraphStats:
    """
    Count nodes and edges; character degree is incident sc plus cd edges

    Args:
        graph: Graph to summarize

    Returns:
        GraphStats
    """
    degree = {cid: 0 for cid in graph.characters.ids}
    for _, c in graph.edges_sc:
        degree[c] += 1
    for c, _ in graph.edges_cd:
        degree[c] += 1

    return GraphStats(
        scene_count=len(graph.scenes),
        dialogue_count=len(graph.dialogues),
        character_count=len(graph.characters),
        edge_counts={etype: len(graph.edges(etype)) for etype in ('ss', 'sd', 'sc', 'cd')},
        character_degree=degree,
        character_names=dict(zip(graph.characters.ids, graph.characters.labels)),
    )
