"""
Evaluation Service for the DiscoGraMS pipeline
Scores generated summaries against references, singly or in batches
"""

import logging
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import pandas as pd

from discograms.models.reports import EvalReport
from discograms.services.embedding_service import Embedder, HashingEmbedder
from discograms.utils.exceptions import UnwritableFile
from discograms.utils.helpers import metric_tokens
from discograms.utils.metrics import embed_score, rouge_l, rouge_n

logger = logging.getLogger(__name__)

BATCH_COLUMNS = ('movie', 'variant')


def evaluate(candidate: str, reference: str, embedder: Optional[Embedder] = None) -> EvalReport:
    """
    Compute ROUGE-1/2/L and the embedding score for one pair

    Args:
        candidate: Generated summary
        reference: Reference summary
        embedder: Token embedder for the embedding score (hashing embedder by default)

    Returns:
        EvalReport
    """
    embedder = embedder or HashingEmbedder()
    return EvalReport(
        rouge1=rouge_n(candidate, reference, 1),
        rouge2=rouge_n(candidate, reference, 2),
        rougeL=rouge_l(candidate, reference),
        embed=embed_score(candidate, reference, embedder),
        candidate_tokens=len(metric_tokens(candidate)),
        reference_tokens=len(metric_tokens(reference)),
    )


def evaluate_batch(rows: Iterable[Tuple[str, str, str, str]], embedder: Optional[Embedder] = None,
                   out_csv: Optional[Union[str, Path]] = None) -> Tuple[pd.DataFrame, EvalReport]:
    """
    Evaluate many (movie, variant, candidate, reference) rows

    Args:
        rows: Tuples of movie id, variant name, candidate and reference
        embedder: Token embedder for the embedding score
        out_csv: Optional CSV path, one row per (movie, variant)

    Returns:
        (per-row DataFrame, mean EvalReport)

    Raises:
        UnwritableFile: If the CSV cannot be written
    """
    embedder = embedder or HashingEmbedder()
    reports, records = [], []
    for movie, variant, candidate, reference in rows:
        report = evaluate(candidate, reference, embedder)
        reports.append(report)
        records.append({'movie': movie, 'variant': variant, **report.to_row()})

    frame = pd.DataFrame.from_records(records)
    if out_csv is not None:
        try:
            frame.to_csv(out_csv, index=False)
        except OSError as e:
            raise UnwritableFile(f"Cannot write evaluation CSV {out_csv}: {e}", {'path': str(out_csv)}) from e
        logger.info(f"Wrote {len(frame)} evaluation rows to {out_csv}")

    return frame, EvalReport.mean(reports)
