"""
Export Service for the DiscoGraMS pipeline
Serializes CaD graphs to canonical JSON (round-trippable), GEXF and DOT
"""

import io
import json
import logging
from typing import Any, Dict, Union

import jsonschema
import networkx as nx
import numpy as np

from discograms.models.graph import (
    CHARACTER, DIALOGUE, EDGE_TYPES, NODE_TYPES, SCENE, CaDGraph, NodeTable
)
from discograms.utils.exceptions import SchemaViolation, UnsupportedFormat
from discograms.utils.validators import GraphValidator

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMATS = ('json', 'gexf', 'dot')
TABLE_KEYS = {SCENE: 'scenes', DIALOGUE: 'dialogues', CHARACTER: 'characters'}
NODE_PREFIX = {SCENE: 's', DIALOGUE: 'd', CHARACTER: 'c'}

_NODE_LIST = {
    'type': 'array',
    'items': {
        'type': 'object',
        'required': ['id', 'emb'],
        'properties': {
            'id': {'type': 'integer', 'minimum': 0},
            'label': {'type': 'string'},
            'emb': {'type': 'array', 'items': {'type': 'number'}},
        },
    },
}
_EDGE_LIST = {
    'type': 'array',
    'items': {'type': 'array', 'items': {'type': 'integer', 'minimum': 0}, 'minItems': 2, 'maxItems': 2},
}

GRAPH_SCHEMA = {
    'type': 'object',
    'required': ['dim', 'scenes', 'dialogues', 'characters', 'edges'],
    'properties': {
        'schema_version': {'type': 'integer'},
        'screenplay_id': {'type': 'string'},
        'post_training': {'type': 'boolean'},
        'dim': {'type': 'integer', 'minimum': 1},
        'scenes': _NODE_LIST,
        'dialogues': _NODE_LIST,
        'characters': _NODE_LIST,
        'edges': {
            'type': 'object',
            'required': list(EDGE_TYPES),
            'properties': {etype: _EDGE_LIST for etype in EDGE_TYPES},
        },
    },
}


def node_key(ntype: str, node_id: int) -> str:
    """Stable node id used by every export format"""
    return f"{NODE_PREFIX[ntype]}{node_id}"


def graph_to_dict(graph: CaDGraph) -> Dict[str, Any]:
    """Canonical JSON-ready dict (embeddings included)"""
    data: Dict[str, Any] = {
        'schema_version': SCHEMA_VERSION,
        'screenplay_id': graph.screenplay_id,
        'post_training': graph.post_training,
        'dim': graph.dim,
    }
    for ntype in NODE_TYPES:
        table = graph.table(ntype)
        data[TABLE_KEYS[ntype]] = [
            {'id': node_id, 'label': label, 'emb': [float(x) for x in row]}
            for node_id, label, row in zip(table.ids, table.labels, table.features)
        ]
    data['edges'] = {etype: [list(e) for e in graph.edges(etype)] for etype in EDGE_TYPES}
    return data


def to_networkx(graph: CaDGraph) -> nx.Graph:
    """Undirected networkx view with ``ntype``/``label`` node attributes and ``etype`` edges"""
    g = nx.Graph()
    for ntype in NODE_TYPES:
        table = graph.table(ntype)
        for node_id, label in zip(table.ids, table.labels):
            g.add_node(node_key(ntype, node_id), ntype=ntype, label=label)
    for etype, (left, right) in EDGE_TYPES.items():
        for a, b in graph.edges(etype):
            g.add_edge(node_key(left, a), node_key(right, b), etype=etype)
    return g


def _dot_safe(text: str) -> str:
    # pydot rejects unquoted values containing ':'
    return '"' + text.replace('\\', '/').replace('"', "'") + '"'


def export_graph(graph: CaDGraph, fmt: str = 'json') -> bytes:
    """
    Export a graph

    Args:
        graph: Graph to export
        fmt: 'json' (canonical, with embeddings), 'gexf' or 'dot' (structure only)

    Returns:
        UTF-8 encoded bytes

    Raises:
        UnsupportedFormat: For any other format
    """
    if fmt == 'json':
        payload = json.dumps(graph_to_dict(graph), sort_keys=True, separators=(',', ':'),
                             ensure_ascii=False)
        return payload.encode('utf-8')

    if fmt == 'gexf':
        buffer = io.BytesIO()
        nx.write_gexf(to_networkx(graph), buffer, version='1.2draft')
        return buffer.getvalue()

    if fmt == 'dot':
        g = to_networkx(graph)
        for _, attrs in g.nodes(data=True):
            attrs['label'] = _dot_safe(attrs['label'])
        return nx.nx_pydot.to_pydot(g).to_string().encode('utf-8')

    raise UnsupportedFormat(f"Unsupported export format: {fmt}", {'supported': list(FORMATS)})


def import_graph(data: Union[bytes, str], fmt: str = 'json') -> CaDGraph:
    """
    Import a graph exported as canonical JSON

    Args:
        data: JSON bytes or text
        fmt: Only 'json' is importable

    Returns:
        CaDGraph with all invariants revalidated

    Raises:
        UnsupportedFormat: For non-JSON formats
        SchemaViolation: If the document does not match the schema or dims disagree
        InvariantViolation: If the graph breaks a structural invariant
    """
    if fmt != 'json':
        raise UnsupportedFormat(f"Only json graphs can be imported, got {fmt}")

    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SchemaViolation(f"Graph file is not JSON: {e}") from e

    try:
        jsonschema.validate(doc, GRAPH_SCHEMA)
    except jsonschema.ValidationError as e:
        raise SchemaViolation(f"Graph file does not match schema: {e.message}",
                              {'path': list(e.absolute_path)}) from e

    dim = doc['dim']
    tables = {}
    for ntype in NODE_TYPES:
        nodes = doc[TABLE_KEYS[ntype]]
        for node in nodes:
            if len(node['emb']) != dim:
                raise SchemaViolation(
                    f"{ntype} node {node['id']} has embedding of length {len(node['emb'])}, expected {dim}",
                    {'node': node_key(ntype, node['id'])}
                )
        features = np.array([n['emb'] for n in nodes], dtype=np.float32).reshape(len(nodes), dim)
        tables[ntype] = NodeTable(ntype, tuple(n['id'] for n in nodes),
                                  tuple(n.get('label', '') for n in nodes), features)

    graph = CaDGraph(
        dim=dim,
        scenes=tables[SCENE],
        dialogues=tables[DIALOGUE],
        characters=tables[CHARACTER],
        screenplay_id=doc.get('screenplay_id', ''),
        post_training=doc.get('post_training', False),
        **{f'edges_{etype}': tuple(tuple(e) for e in doc['edges'][etype]) for etype in EDGE_TYPES},
    )
    GraphValidator().validate(graph)
    logger.debug(f"Imported graph '{graph.screenplay_id}' with {graph.node_count} nodes")
    return graph
