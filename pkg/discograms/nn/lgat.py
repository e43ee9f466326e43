"""
The LGAT model: graph encoder, chunked text encoder, fusion and summary decoder.
"""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from discograms.core.checkpoint import load_checkpoint, load_optimizer_state, save_checkpoint
from discograms.core.optim import Adam
from discograms.core.tensor import Tensor, no_grad
from discograms.models.graph import CaDGraph
from discograms.models.lgat_config import LgatConfig
from discograms.nn.decoder import SummaryDecoder
from discograms.nn.encoders import TextEncoder
from discograms.nn.fusion import FusionBlock
from discograms.nn.gat import GraphEncoder, split_nodes
from discograms.nn.layers import Module
from discograms.nn.vocab import Vocabulary
from discograms.services.graph_service import strip_characters
from discograms.utils.exceptions import (
    ConfigMismatch, SchemaViolation, ShapeMismatch, UnreadableFile, UnwritableFile
)

logger = logging.getLogger(__name__)

CONFIG_FILE = 'config.json'
VOCAB_FILE = 'vocab.json'


class Variant(str, Enum):
    """Which encoders feed the decoder"""
    TEXT_ONLY = 'text_only'
    GRAPH_ONLY = 'graph_only'
    FULL = 'full'
    FULL_WITHOUT_CHARACTERS = 'full_without_characters'

    @property
    def uses_graph(self) -> bool:
        return self is not Variant.TEXT_ONLY

    @property
    def uses_text(self) -> bool:
        return self is not Variant.GRAPH_ONLY

    @property
    def fused(self) -> bool:
        return self.uses_graph and self.uses_text


class LgatModel(Module):
    """
    LGAT at configurable scale.

    Only the modules a variant uses are built, so single-modality checkpoints
    hold no unused parameters.
    """

    def __init__(self, config: LgatConfig, source_vocab: Vocabulary, target_vocab: Vocabulary,
                 variant: Union[Variant, str] = Variant.FULL):
        self.config = config
        self.variant = Variant(variant)
        self.source_vocab = source_vocab
        self.target_vocab = target_vocab
        self.rng = np.random.default_rng(config.seed)

        self.graph_encoder = None
        self.text_encoder = None
        self.fusion = None
        if self.variant.uses_graph:
            self.graph_encoder = GraphEncoder(config.embed_dim, config.gat_layers, config.gat_heads,
                                              config.gat_hidden, config.arch_dim, config.gat_dropout,
                                              self.rng)
        if self.variant.uses_text:
            self.text_encoder = TextEncoder(source_vocab, config.chunk_dim, config.chunk_heads,
                                            config.max_tokens, config.arch_dim, config.pool_heads,
                                            config.encoder_dropout, self.rng)
        if self.variant.fused:
            self.fusion = FusionBlock(config.arch_dim, config.fusion_heads, config.fusion_dropout, self.rng)
        self.decoder = SummaryDecoder(target_vocab, config.arch_dim, config.decoder_layers,
                                      config.decoder_heads, config.decoder_ff, config.max_target_len,
                                      config.decoder_dropout, self.rng)

    def input_graph(self, graph: CaDGraph) -> CaDGraph:
        """The graph as this variant sees it."""
        if graph.dim != self.config.embed_dim:
            raise ShapeMismatch(f"Graph dim {graph.dim} does not match model embed dim {self.config.embed_dim}",
                                {'graph_dim': graph.dim, 'embed_dim': self.config.embed_dim})
        if self.variant is Variant.FULL_WITHOUT_CHARACTERS:
            return strip_characters(graph)
        return graph

    def encode_graph(self, graph: CaDGraph) -> Tensor:
        if self.graph_encoder is None:
            raise ConfigMismatch(f"Variant {self.variant.value} has no graph encoder")
        encoding, _, _ = self.graph_encoder(self.input_graph(graph))
        return encoding

    def node_embeddings(self, graph: CaDGraph) -> Dict[str, np.ndarray]:
        """Final-layer GAT embeddings per node type, in storage order."""
        if self.graph_encoder is None:
            raise ConfigMismatch(f"Variant {self.variant.value} has no graph encoder")
        graph = self.input_graph(graph)
        with no_grad():
            _, nodes, _ = self.graph_encoder(graph)
        return split_nodes(graph, nodes.data)

    def encode_text(self, chunks: Sequence[Sequence[str]]) -> Tensor:
        if self.text_encoder is None:
            raise ConfigMismatch(f"Variant {self.variant.value} has no text encoder")
        return self.text_encoder(chunks)

    def fuse(self, graph_enc: Tensor, text_enc: Tensor) -> Tensor:
        if self.fusion is None:
            raise ConfigMismatch(f"Variant {self.variant.value} has no fusion block")
        return self.fusion(graph_enc, text_enc)

    def memory(self, graph: Optional[CaDGraph], chunks: Optional[Sequence[Sequence[str]]]) -> Tensor:
        """The [1, A] vector the decoder attends to."""
        if self.variant.fused:
            return self.fuse(self.encode_graph(graph), self.encode_text(chunks))
        if self.variant.uses_graph:
            return self.encode_graph(graph)
        return self.encode_text(chunks)

    def loss(self, graph: Optional[CaDGraph], chunks: Optional[Sequence[Sequence[str]]],
             target: Sequence[str]) -> Tensor:
        return self.decoder.loss(self.memory(graph, chunks), target)

    def generate(self, graph: Optional[CaDGraph], chunks: Optional[Sequence[Sequence[str]]]) -> List[str]:
        with no_grad():
            memory = self.memory(graph, chunks)
        return self.target_vocab.decode(self.decoder.greedy(memory))

    def save(self, directory: Union[str, Path], optimizer: Optional[Adam] = None,
             extra: Optional[Dict[str, object]] = None) -> Path:
        """
        Write parameters, manifest, config and vocabularies.

        Args:
            directory: Checkpoint directory
            optimizer: Adam state to store for resuming
            extra: Additional manifest entries

        Returns:
            The checkpoint directory
        """
        named = [(name, p.data) for name, p in self.named_parameters()]
        manifest = {'variant': self.variant.value, 'embed_dim': self.config.embed_dim}
        manifest.update(extra or {})
        moments = (optimizer.m, optimizer.v) if optimizer is not None else None
        step = optimizer.step_count if optimizer is not None else 0
        directory = save_checkpoint(directory, named, step, self.config.config_hash, manifest, moments)
        vocab = {'source': json.loads(self.source_vocab.to_json()),
                 'target': json.loads(self.target_vocab.to_json())}
        try:
            (directory / CONFIG_FILE).write_text(self.config.model_dump_json(indent=2), encoding='utf-8')
            (directory / VOCAB_FILE).write_text(json.dumps(vocab, ensure_ascii=False), encoding='utf-8')
        except OSError as e:
            raise UnwritableFile(f"Cannot write checkpoint metadata to {directory}: {e}",
                                 {'path': str(directory)}) from e
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path], with_optimizer: bool = False):
        """
        Rebuild a model from a checkpoint directory.

        Returns:
            The model, or (model, Adam) when ``with_optimizer`` is set

        Raises:
            UnreadableFile: If a checkpoint file is missing
            ConfigMismatch: If the stored config hash disagrees with config.json
        """
        directory = Path(directory)
        arrays, manifest = load_checkpoint(directory)
        try:
            config = LgatConfig.model_validate_json((directory / CONFIG_FILE).read_text(encoding='utf-8'))
            vocab = json.loads((directory / VOCAB_FILE).read_text(encoding='utf-8'))
        except OSError as e:
            raise UnreadableFile(f"Incomplete checkpoint {directory}: {e}", {'path': str(directory)}) from e
        except ValueError as e:
            raise SchemaViolation(f"Invalid checkpoint metadata in {directory}: {e}") from e

        if config.config_hash != manifest['config_hash']:
            raise ConfigMismatch("Checkpoint config does not match its manifest hash",
                                 {'manifest': manifest['config_hash'], 'config': config.config_hash})

        model = cls(config, Vocabulary(vocab['source']['tokens']), Vocabulary(vocab['target']['tokens']),
                    manifest.get('variant', Variant.FULL.value))
        model.load_state(arrays)
        model.eval()
        logger.info(f"Loaded {model.variant.value} model from {directory} (step {manifest['step']})")

        if not with_optimizer:
            return model
        optimizer = Adam(model.parameters(), config.learning_rate, config.adam_beta1,
                         config.adam_beta2, config.adam_eps)
        state = load_optimizer_state(directory, manifest)
        if state is not None:
            optimizer.load_state(manifest['step'], *state)
        return model, optimizer


def encode_graph(model: LgatModel, graph: CaDGraph) -> Tensor:
    return model.encode_graph(graph)


def encode_text(model: LgatModel, chunks: Sequence[Sequence[str]]) -> Tensor:
    return model.encode_text(chunks)


def fuse(model: LgatModel, graph_enc: Tensor, text_enc: Tensor) -> Tensor:
    return model.fuse(graph_enc, text_enc)


def decode(model: LgatModel, fused: Tensor, target: Optional[Sequence[str]] = None):
    """
    Teacher-forced logits for ``target``, or greedy tokens when no target is given.

    Raises:
        VocabularyMiss: If a target token is not in the target vocabulary
        LengthExceeded: If the target does not fit the decoder
    """
    if target is None:
        return model.target_vocab.decode(model.decoder.greedy(fused))
    ids = model.decoder.target_ids(target)
    return model.decoder(fused, [model.target_vocab.bos_id] + ids)
