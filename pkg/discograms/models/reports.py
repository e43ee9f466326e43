"""
Report Models for the DiscoGraMS pipeline

Results produced by evaluation, summarization, analysis and training, each
with a JSON-ready ``to_dict``.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

SCHEMA_VERSION = 1


def f1_score(precision: float, recall: float) -> float:
    total = precision + recall
    return 2 * precision * recall / total if total > 0 else 0.0


@dataclass(frozen=True)
class PRF:
    """Precision, recall and their harmonic mean"""
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0

    @classmethod
    def of(cls, precision: float, recall: float) -> 'PRF':
        return cls(float(precision), float(recall), f1_score(precision, recall))

    def to_dict(self) -> Dict[str, float]:
        return {'precision': self.precision, 'recall': self.recall, 'f1': self.f1}


@dataclass(frozen=True)
class EvalReport:
    """ROUGE-1/2/L and embedding-score results for one candidate/reference pair"""
    rouge1: PRF
    rouge2: PRF
    rougeL: PRF
    embed: PRF
    candidate_tokens: int = 0
    reference_tokens: int = 0

    @property
    def embed_p(self) -> float:
        return self.embed.precision

    @property
    def embed_r(self) -> float:
        return self.embed.recall

    @property
    def embed_f1(self) -> float:
        return self.embed.f1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'rouge1': self.rouge1.to_dict(),
            'rouge2': self.rouge2.to_dict(),
            'rougeL': self.rougeL.to_dict(),
            'embed_p': self.embed.precision,
            'embed_r': self.embed.recall,
            'embed_f1': self.embed.f1,
            'candidate_tokens': self.candidate_tokens,
            'reference_tokens': self.reference_tokens,
        }

    def to_row(self) -> Dict[str, float]:
        """Flat record for tabular output"""
        row: Dict[str, float] = {}
        for name in ('rouge1', 'rouge2', 'rougeL'):
            for key, value in getattr(self, name).to_dict().items():
                row[f'{name}_{key}'] = value
        row.update({'embed_p': self.embed.precision, 'embed_r': self.embed.recall,
                    'embed_f1': self.embed.f1, 'candidate_tokens': self.candidate_tokens,
                    'reference_tokens': self.reference_tokens})
        return row

    @classmethod
    def mean(cls, reports: Sequence['EvalReport']) -> 'EvalReport':
        """Metric-wise mean; f1 values are averaged, not recomputed"""
        if not reports:
            return cls(PRF(), PRF(), PRF(), PRF())

        def avg(name: str) -> PRF:
            items = [getattr(r, name) for r in reports]
            return PRF(float(np.mean([i.precision for i in items])),
                       float(np.mean([i.recall for i in items])),
                       float(np.mean([i.f1 for i in items])))

        return cls(avg('rouge1'), avg('rouge2'), avg('rougeL'), avg('embed'),
                   int(round(np.mean([r.candidate_tokens for r in reports]))),
                   int(round(np.mean([r.reference_tokens for r in reports]))))


@dataclass(frozen=True)
class NoveltyReport:
    """Percentage of distinct summary n-grams absent from the script, per n"""
    percentages: Dict[int, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'novel_ngrams': {str(n): pct for n, pct in sorted(self.percentages.items())},
        }


@dataclass(frozen=True)
class ExtractedScene:
    """One scene picked by the extractive summarizer"""
    scene_index: int
    score: float
    text: str

    def to_dict(self) -> Dict[str, Any]:
        return {'scene_index': self.scene_index, 'score': self.score, 'text': self.text}


@dataclass
class CharacterAnalysis:
    """
    PCA projection and K-Means clustering of character embeddings

    ``components`` rows are orthonormal; axes listed in ``degenerate`` carry
    no variance and are padding.
    """
    character_ids: List[int]
    names: List[str]
    embeddings: np.ndarray
    components: np.ndarray
    mean: np.ndarray
    projections: np.ndarray
    explained_variance: np.ndarray
    degenerate: List[int] = field(default_factory=list)
    assignments: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    k: int = 0
    inertia: List[float] = field(default_factory=list)
    degrees: Optional[Dict[int, int]] = None

    def records(self) -> List[Dict[str, Any]]:
        out = []
        for row, (cid, name) in enumerate(zip(self.character_ids, self.names)):
            x, y, z = (float(v) for v in self.projections[row])
            record = {'name': name, 'x': x, 'y': y, 'z': z, 'cluster': int(self.assignments[row])}
            if self.degrees is not None:
                record['degree'] = int(self.degrees.get(cid, 0))
            out.append(record)
        return out


@dataclass(frozen=True)
class TrainingResult:
    """Outcome of one training run"""
    checkpoint: Path
    variant: str
    steps: int
    losses: Tuple[float, ...]
    epoch_losses: Tuple[float, ...]

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float('nan')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'checkpoint': str(self.checkpoint),
            'variant': self.variant,
            'steps': self.steps,
            'final_loss': self.final_loss,
            'epoch_losses': list(self.epoch_losses),
        }
