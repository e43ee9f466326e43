"""
Training Service for the DiscoGraMS pipeline
Trains LGAT variants on (screenplay, summary) corpora and runs ablations
"""

import logging
import math
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from discograms.core.optim import Adam
from discograms.models.graph import CaDGraph
from discograms.models.lgat_config import LgatConfig
from discograms.models.reports import EvalReport, TrainingResult
from discograms.models.screenplay import CorpusPair
from discograms.nn.encoders import chunk_script
from discograms.nn.lgat import LgatModel, Variant
from discograms.nn.vocab import Vocabulary
from discograms.services.embedding_service import Embedder, HashingEmbedder
from discograms.services.evaluation_service import evaluate_batch
from discograms.services.graph_service import build_graph
from discograms.services.screenplay_service import screenplay_to_text
from discograms.utils.exceptions import ConfigMismatch, EmptyCorpus, NonFinite, UnwritableFile
from discograms.utils.helpers import whitespace_tokens

logger = logging.getLogger(__name__)

LOSS_FILE = 'loss.csv'
HOLDOUT_FRACTION = 0.2


@dataclass(frozen=True)
class TrainingExample:
    """One corpus pair turned into model inputs"""
    movie: str
    graph: Optional[CaDGraph]
    chunks: List[List[str]]
    script: str
    target: List[str]
    reference: str


class TrainingService:
    """
    Prepares corpora, trains LGAT models and evaluates ablation variants
    """

    def __init__(self, config: LgatConfig, embedder: Optional[Embedder] = None):
        """
        Initialize training service

        Args:
            config: Validated model and training configuration
            embedder: Embedder for graph features (hashing embedder of config.embed_dim by default)

        Raises:
            ConfigMismatch: If the embedder dimension differs from config.embed_dim
        """
        self.config = config
        self.embedder = embedder or HashingEmbedder(config.embed_dim, config.embed_seed)
        if self.embedder.dim != config.embed_dim:
            raise ConfigMismatch(f"Embedder dimension {self.embedder.dim} != embed_dim {config.embed_dim}",
                                 {'embedder_dim': self.embedder.dim, 'embed_dim': config.embed_dim})
        logger.debug(f"Training service ready: profile={config.profile} embedder={self.embedder.describe()}")

    def _example(self, pair: CorpusPair, with_graph: bool) -> TrainingExample:
        cfg = self.config
        script = screenplay_to_text(pair.screenplay)
        graph = None
        if with_graph:
            graph = build_graph(pair.screenplay, self.embedder, cfg.include_heading, cfg.include_mentions)
        target = whitespace_tokens(pair.summary.text)
        if len(target) > cfg.max_target_len - 1:
            logger.warning(f"Summary of '{pair.screenplay.id}' truncated from {len(target)} to "
                           f"{cfg.max_target_len - 1} tokens")
            target = target[:cfg.max_target_len - 1]
        return TrainingExample(
            movie=pair.screenplay.id,
            graph=graph,
            chunks=chunk_script(script, cfg.max_tokens),
            script=script,
            target=target,
            reference=pair.summary.text,
        )

    def prepare(self, corpus: Sequence[CorpusPair], variant: Variant) -> List[TrainingExample]:
        """
        Build graphs and chunks for every pair, in parallel when ``workers`` > 1

        Raises:
            EmptyCorpus: If the corpus is empty
        """
        if not corpus:
            raise EmptyCorpus("Training corpus is empty")
        with_graph = Variant(variant).uses_graph
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                examples = list(pool.map(lambda p: self._example(p, with_graph), corpus))
        else:
            examples = [self._example(p, with_graph) for p in corpus]
        logger.info(f"Prepared {len(examples)} training examples ({self.config.workers} worker(s))")
        return examples

    def build_model(self, examples: Sequence[TrainingExample], variant: Variant) -> LgatModel:
        source = Vocabulary.build((e.script for e in examples), self.config.source_min_freq)
        target = Vocabulary.build((e.reference for e in examples), self.config.target_min_freq)
        logger.info(f"Vocabularies: {len(source)} source tokens, {len(target)} target tokens")
        return LgatModel(self.config, source, target, variant)

    def fit(self, examples: Sequence[TrainingExample], variant: Union[Variant, str],
            out_dir: Union[str, Path]) -> Tuple[LgatModel, TrainingResult]:
        """
        Train a fresh model and write its checkpoint

        Args:
            examples: Prepared examples
            variant: Model variant
            out_dir: Checkpoint directory

        Returns:
            (trained model in eval mode, TrainingResult)

        Raises:
            NonFinite: If a loss or gradient stops being finite
        """
        cfg = self.config
        variant = Variant(variant)
        model = self.build_model(examples, variant)
        model.train()
        optimizer = Adam(model.parameters(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        order_rng = np.random.default_rng(cfg.seed)

        losses: List[float] = []
        epoch_losses: List[float] = []
        done = False
        for epoch in range(1, cfg.epochs + 1):
            epoch_total, epoch_steps = 0.0, 0
            for idx in order_rng.permutation(len(examples)):
                example = examples[idx]
                optimizer.zero_grad()
                loss = model.loss(example.graph, example.chunks, example.target)
                value = loss.item()
                if not math.isfinite(value):
                    logger.error(f"Non-finite loss at step {optimizer.step_count + 1} on '{example.movie}'")
                    raise NonFinite("Training loss is not finite",
                                    {'step': optimizer.step_count + 1, 'epoch': epoch, 'movie': example.movie})
                loss.backward()
                optimizer.step()

                losses.append(value)
                epoch_total += value
                epoch_steps += 1
                logger.debug(f"step {optimizer.step_count} epoch {epoch} '{example.movie}': loss {value:.6f}")
                if cfg.max_steps is not None and optimizer.step_count >= cfg.max_steps:
                    done = True
                    break

            epoch_losses.append(epoch_total / max(epoch_steps, 1))
            logger.info(f"Epoch {epoch}: mean loss {epoch_losses[-1]:.6f} over {epoch_steps} steps")
            if done:
                break

        model.eval()
        out_dir = Path(out_dir)
        model.save(out_dir, optimizer, {'epochs_completed': len(epoch_losses),
                                        'epoch_losses': epoch_losses})
        self.write_loss_curve(out_dir / LOSS_FILE, losses)

        result = TrainingResult(out_dir, variant.value, optimizer.step_count, tuple(losses), tuple(epoch_losses))
        return model, result

    @staticmethod
    def write_loss_curve(path: Path, losses: Sequence[float]) -> None:
        frame = pd.DataFrame({'step': np.arange(1, len(losses) + 1), 'loss': losses})
        try:
            frame.to_csv(path, index=False)
        except OSError as e:
            raise UnwritableFile(f"Cannot write loss curve {path}: {e}", {'path': str(path)}) from e

    def train(self, corpus: Sequence[CorpusPair], variant: Union[Variant, str],
              out_dir: Union[str, Path]) -> TrainingResult:
        examples = self.prepare(corpus, Variant(variant))
        _, result = self.fit(examples, variant, out_dir)
        return result

    @staticmethod
    def split(corpus: Sequence[CorpusPair], seed: int,
              holdout: float = HOLDOUT_FRACTION) -> Tuple[List[CorpusPair], List[CorpusPair]]:
        """Seeded train/held-out split; a one-pair corpus is evaluated on itself."""
        pairs = list(corpus)
        if len(pairs) < 2:
            return pairs, pairs
        order = np.random.default_rng(seed).permutation(len(pairs))
        n_hold = min(max(1, int(round(len(pairs) * holdout))), len(pairs) - 1)
        held = sorted(order[:n_hold])
        kept = sorted(order[n_hold:])
        return [pairs[i] for i in kept], [pairs[i] for i in held]

    def run_ablation(self, corpus: Sequence[CorpusPair], variant: Union[Variant, str],
                     out_dir: Optional[Union[str, Path]] = None,
                     eval_csv: Optional[Union[str, Path]] = None) -> EvalReport:
        """
        Train one variant and evaluate it on held-out pairs

        Args:
            corpus: Full corpus
            variant: Variant to train
            out_dir: Checkpoint directory (temporary when omitted)
            eval_csv: Optional per-movie evaluation CSV

        Returns:
            Mean EvalReport over the held-out pairs
        """
        variant = Variant(variant)
        if not corpus:
            raise EmptyCorpus("Ablation corpus is empty")
        train_pairs, held_pairs = self.split(corpus, self.config.seed)

        with tempfile.TemporaryDirectory(prefix='discograms-') as scratch:
            target_dir = Path(out_dir) if out_dir is not None else Path(scratch) / variant.value
            model, result = self.fit(self.prepare(train_pairs, variant), variant, target_dir)

            rows = []
            for example in self.prepare(held_pairs, variant):
                candidate = ' '.join(model.generate(example.graph, example.chunks))
                rows.append((example.movie, variant.value, candidate, example.reference))
            _, report = evaluate_batch(rows, self.embedder, eval_csv)

        logger.info(f"Ablation {variant.value}: {result.steps} steps, ROUGE-1 F1 {report.rouge1.f1:.4f} "
                    f"on {len(held_pairs)} held-out pairs")
        return report


def train(corpus: Sequence[CorpusPair], config: LgatConfig, out_dir: Union[str, Path],
          variant: Union[Variant, str] = Variant.FULL, embedder: Optional[Embedder] = None) -> TrainingResult:
    """
    Train an LGAT variant and write checkpoint plus loss curve

    Raises:
        EmptyCorpus: If the corpus is empty
        NonFinite: If training diverges
    """
    return TrainingService(config, embedder).train(corpus, variant, out_dir)


def run_ablation(corpus: Sequence[CorpusPair], variant: Union[Variant, str], config: LgatConfig,
                 out_dir: Optional[Union[str, Path]] = None, embedder: Optional[Embedder] = None) -> EvalReport:
    """Train ``variant`` on the corpus minus a held-out split and evaluate on that split."""
    return TrainingService(config, embedder).run_ablation(corpus, variant, out_dir)
