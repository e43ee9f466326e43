"""
Graph Model for the DiscoGraMS pipeline

The character-aware discourse graph: three typed node tables and four typed
edge lists. Edges are stored as (id, id) pairs over type-local node ids and
are undirected for message passing:

    ss: (scene, scene)       consecutive scenes
    sd: (scene, dialogue)    dialogue occurs in scene
    sc: (scene, character)   character appears in scene
    cd: (character, dialogue) character speaks dialogue
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple

import numpy as np


SCENE = 'scene'
DIALOGUE = 'dialogue'
CHARACTER = 'character'
NODE_TYPES = (SCENE, DIALOGUE, CHARACTER)

EDGE_TYPES = {
    'ss': (SCENE, SCENE),
    'sd': (SCENE, DIALOGUE),
    'sc': (SCENE, CHARACTER),
    'cd': (CHARACTER, DIALOGUE),
}

Edge = Tuple[int, int]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=np.float32)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class NodeTable:
    """Nodes of one type: ids, labels and a [n, dim] feature matrix"""
    ntype: str
    ids: Tuple[int, ...]
    labels: Tuple[str, ...]
    features: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'features', _frozen(self.features))

    @classmethod
    def empty(cls, ntype: str, dim: int) -> 'NodeTable':
        return cls(ntype, (), (), np.zeros((0, dim), dtype=np.float32))

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NodeTable):
            return NotImplemented
        return (self.ntype == other.ntype and self.ids == other.ids and self.labels == other.labels
                and self.features.shape == other.features.shape
                and np.array_equal(self.features, other.features))

    def row_of(self) -> Dict[int, int]:
        return {node_id: row for row, node_id in enumerate(self.ids)}

    def permuted(self, order) -> 'NodeTable':
        """Same nodes in a different storage order"""
        order = list(order)
        return NodeTable(self.ntype, tuple(self.ids[i] for i in order),
                         tuple(self.labels[i] for i in order), self.features[order])


@dataclass(frozen=True, eq=False)
class CaDGraph:
    """
    Character-aware discourse graph

    ``post_training`` marks graphs whose character features were filled in
    by a trained encoder; freshly built graphs keep them at zero.
    """
    dim: int
    scenes: NodeTable
    dialogues: NodeTable
    characters: NodeTable
    edges_ss: Tuple[Edge, ...] = ()
    edges_sd: Tuple[Edge, ...] = ()
    edges_sc: Tuple[Edge, ...] = ()
    edges_cd: Tuple[Edge, ...] = ()
    screenplay_id: str = ''
    post_training: bool = False

    def __eq__(self, other) -> bool:
        if not isinstance(other, CaDGraph):
            return NotImplemented
        return (self.dim == other.dim and self.scenes == other.scenes
                and self.dialogues == other.dialogues and self.characters == other.characters
                and self.edges_ss == other.edges_ss and self.edges_sd == other.edges_sd
                and self.edges_sc == other.edges_sc and self.edges_cd == other.edges_cd
                and self.screenplay_id == other.screenplay_id
                and self.post_training == other.post_training)

    def table(self, ntype: str) -> NodeTable:
        return {SCENE: self.scenes, DIALOGUE: self.dialogues, CHARACTER: self.characters}[ntype]

    def edges(self, etype: str) -> Tuple[Edge, ...]:
        return getattr(self, f'edges_{etype}')

    @property
    def node_count(self) -> int:
        return len(self.scenes) + len(self.dialogues) + len(self.characters)

    @property
    def edge_count(self) -> int:
        return sum(len(self.edges(t)) for t in EDGE_TYPES)

    def with_changes(self, **changes) -> 'CaDGraph':
        return replace(self, **changes)


@dataclass(frozen=True)
class GraphStats:
    """Node and edge counts plus per-character degree"""
    scene_count: int
    dialogue_count: int
    character_count: int
    edge_counts: Dict[str, int]
    character_degree: Dict[int, int] = field(default_factory=dict)
    character_names: Dict[int, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            'schema_version': 1,
            'V_s': self.scene_count,
            'V_d': self.dialogue_count,
            'V_c': self.character_count,
            'E_ss': self.edge_counts.get('ss', 0),
            'E_sd': self.edge_counts.get('sd', 0),
            'E_sc': self.edge_counts.get('sc', 0),
            'E_cd': self.edge_counts.get('cd', 0),
            'character_degree': [
                {'id': cid, 'name': self.character_names.get(cid, ''), 'degree': deg}
                for cid, deg in sorted(self.character_degree.items())
            ],
        }

    def top_characters(self, k: int = 5) -> List[Tuple[str, int]]:
        ranked = sorted(self.character_degree.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(self.character_names.get(cid, str(cid)), deg) for cid, deg in ranked[:k]]
