"""
Validation utilities for graphs and model inputs.
"""

from typing import Dict, List, Set, Tuple

import numpy as np

from discograms.models.graph import CHARACTER, DIALOGUE, EDGE_TYPES, SCENE, CaDGraph
from discograms.utils.exceptions import InvariantViolation


class GraphValidator:
    """
    Validator for the structural invariants of a CaD graph.

    Problems are collected and reported together in one exception.
    """

    def validate(self, graph: CaDGraph) -> None:
        """
        Validate a graph.

        Args:
            graph: Graph to check

        Raises:
            InvariantViolation: If any invariant fails
        """
        errors: List[str] = []
        errors.extend(self._validate_tables(graph))
        if not errors:
            errors.extend(self._validate_endpoints(graph))
        if not errors:
            errors.extend(self._validate_scene_path(graph))
            errors.extend(self._validate_dialogue_edges(graph))
            errors.extend(self._validate_scene_characters(graph))
            errors.extend(self._validate_character_features(graph))

        if errors:
            raise InvariantViolation(f"Graph validation failed: {'; '.join(errors)}",
                                     {'errors': errors})

    def _validate_tables(self, graph: CaDGraph) -> List[str]:
        errors = []
        if graph.dim <= 0:
            errors.append(f"dim must be positive, got {graph.dim}")
        for ntype in (SCENE, DIALOGUE, CHARACTER):
            table = graph.table(ntype)
            if table.features.shape != (len(table.ids), graph.dim):
                errors.append(
                    f"{ntype} features have shape {table.features.shape}, "
                    f"expected {(len(table.ids), graph.dim)}"
                )
            if len(table.labels) != len(table.ids):
                errors.append(f"{ntype} labels and ids differ in length")
            if len(set(table.ids)) != len(table.ids):
                errors.append(f"duplicate {ntype} ids")
            if not np.all(np.isfinite(table.features)):
                errors.append(f"{ntype} features contain non-finite values")
        return errors

    def _validate_endpoints(self, graph: CaDGraph) -> List[str]:
        errors = []
        ids = {ntype: set(graph.table(ntype).ids) for ntype in (SCENE, DIALOGUE, CHARACTER)}
        for etype, (left, right) in EDGE_TYPES.items():
            edges = graph.edges(etype)
            if len(set(edges)) != len(edges):
                errors.append(f"duplicate {etype} edges")
            for a, b in edges:
                if a not in ids[left] or b not in ids[right]:
                    errors.append(f"{etype} edge ({a}, {b}) references a missing node")
                if etype == 'ss' and a == b:
                    errors.append(f"self-loop on scene {a}")
        return errors

    def _validate_scene_path(self, graph: CaDGraph) -> List[str]:
        order = sorted(graph.scenes.ids)
        expected = [(order[k], order[k + 1]) for k in range(len(order) - 1)]
        if sorted(graph.edges_ss) != expected:
            return ["ss edges do not form the scene path in scene order"]
        return []

    def _validate_dialogue_edges(self, graph: CaDGraph) -> List[str]:
        errors = []
        sd_count: Dict[int, int] = {d: 0 for d in graph.dialogues.ids}
        cd_count: Dict[int, int] = {d: 0 for d in graph.dialogues.ids}
        for _, d in graph.edges_sd:
            sd_count[d] += 1
        for _, d in graph.edges_cd:
            cd_count[d] += 1
        for d in graph.dialogues.ids:
            if sd_count[d] != 1:
                errors.append(f"dialogue {d} has {sd_count[d]} scene edges, expected 1")
            # stripped graphs keep their dialogues but lose every speaker edge
            if len(graph.characters) and cd_count[d] != 1:
                errors.append(f"dialogue {d} has {cd_count[d]} character edges, expected 1")
        return errors

    def _validate_scene_characters(self, graph: CaDGraph) -> List[str]:
        scene_of = {d: s for s, d in graph.edges_sd}
        present: Set[Tuple[int, int]] = set(graph.edges_sc)
        missing = sorted({(scene_of[d], c) for c, d in graph.edges_cd
                          if d in scene_of and (scene_of[d], c) not in present})
        return [f"character {c} speaks in scene {s} without an sc edge" for s, c in missing]

    def _validate_character_features(self, graph: CaDGraph) -> List[str]:
        if graph.post_training or not len(graph.characters):
            return []
        if np.any(graph.characters.features != 0):
            return ["character features must be zero unless the graph is marked post-training"]
        return []
