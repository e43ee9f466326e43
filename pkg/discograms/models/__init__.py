"""
Models Module for the DiscoGraMS pipeline

Domain types for screenplays, graphs, reports and configuration.
"""

from .screenplay import (
    Action, CharacterRegistry, CorpusPair, Dialogue, ReferenceSummary, Scene, Screenplay,
    SummarySource
)
from .graph import CaDGraph, GraphStats, NodeTable, CHARACTER, DIALOGUE, SCENE, EDGE_TYPES
from .lgat_config import LgatConfig
from .reports import (
    PRF, CharacterAnalysis, EvalReport, ExtractedScene, NoveltyReport, TrainingResult
)

__all__ = [
    'Action',
    'CharacterRegistry',
    'CorpusPair',
    'Dialogue',
    'ReferenceSummary',
    'Scene',
    'Screenplay',
    'SummarySource',
    'CaDGraph',
    'GraphStats',
    'NodeTable',
    'CHARACTER',
    'DIALOGUE',
    'SCENE',
    'EDGE_TYPES',
    'LgatConfig',
    'PRF',
    'CharacterAnalysis',
    'EvalReport',
    'ExtractedScene',
    'NoveltyReport',
    'TrainingResult',
]
