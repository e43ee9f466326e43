"""
Metric functions for summary evaluation
ROUGE-1/2/L, greedy-matching embedding score and novel n-gram percentages

Metric tokenization is lowercase alphanumeric runs, without stemming; the
ROUGE scorer from ``rouge_score`` applies the same rule.
"""

import logging
from functools import lru_cache
from typing import Dict, Iterable, List, Set, Tuple

from rouge_score import rouge_scorer

from discograms.models.reports import PRF, NoveltyReport
from discograms.services.embedding_service import Embedder, cosine_matrix
from discograms.utils.helpers import metric_tokens

logger = logging.getLogger(__name__)


class MetricConstants:
    """Constants shared by the metric functions"""

    MAX_SCORER_N = 9
    NOVELTY_ORDERS = (1, 2, 3, 4)


@lru_cache(maxsize=None)
def _scorer(rouge_type: str) -> rouge_scorer.RougeScorer:
    return rouge_scorer.RougeScorer([rouge_type], use_stemmer=False)


def _score(rouge_type: str, candidate: str, reference: str) -> PRF:
    score = _scorer(rouge_type).score(reference, candidate)[rouge_type]
    return PRF.of(score.precision, score.recall)


def rouge_n(candidate: str, reference: str, n: int) -> PRF:
    """
    Clipped n-gram overlap

    Orders up to 9 go through the packaged ``rougeN`` scorers; higher orders
    use the same n-gram counting on metric tokens.

    Args:
        candidate: Generated summary
        reference: Reference summary
        n: n-gram order, at least 1

    Returns:
        PRF with p = C/|candidate n-grams| and r = C/|reference n-grams|; zeros if either side has none
    """
    if n < 1:
        raise ValueError(f"ROUGE-N order must be at least 1, got {n}")
    if n <= MetricConstants.MAX_SCORER_N:
        return _score(f'rouge{n}', candidate, reference)
    score = rouge_scorer._score_ngrams(
        rouge_scorer._create_ngrams(metric_tokens(reference), n),
        rouge_scorer._create_ngrams(metric_tokens(candidate), n),
    )
    return PRF.of(score.precision, score.recall)


def rouge_l(candidate: str, reference: str) -> PRF:
    """Token-level longest common subsequence: p = LCS/|candidate|, r = LCS/|reference|."""
    return _score('rougeL', candidate, reference)


def embed_score(candidate: str, reference: str, embedder: Embedder) -> PRF:
    """
    Greedy-matching cosine similarity between token embeddings

    Each token is embedded on its own; p is the mean over candidate tokens
    of the best similarity to any reference token, r the converse. Tokens
    with a zero vector contribute similarity 0.

    Args:
        candidate: Generated summary
        reference: Reference summary
        embedder: Embedder used for every token

    Returns:
        PRF with values in [-1, 1]
    """
    cand = metric_tokens(candidate)
    ref = metric_tokens(reference)
    if not cand or not ref:
        return PRF()
    sims = cosine_matrix(embedder.embed_many(cand), embedder.embed_many(ref))
    precision = float(sims.max(axis=1).mean())
    recall = float(sims.max(axis=0).mean())
    return PRF.of(precision, recall)


def ngrams(tokens: List[str], n: int) -> Set[Tuple[str, ...]]:
    return {tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)}


def ngram_novelty(summary: str, script: str,
                  orders: Iterable[int] = MetricConstants.NOVELTY_ORDERS) -> NoveltyReport:
    """
    Percentage of distinct summary n-grams that never occur in the script

    Args:
        summary: Summary text
        script: Source script text
        orders: n values to report

    Returns:
        NoveltyReport with percentages in [0, 100]; 0 when the summary has no n-grams of an order
    """
    summary_tokens = metric_tokens(summary)
    script_tokens = metric_tokens(script)
    percentages: Dict[int, float] = {}
    for n in orders:
        wanted = ngrams(summary_tokens, n)
        if not wanted:
            percentages[n] = 0.0
            continue
        novel = wanted - ngrams(script_tokens, n)
        percentages[n] = 100.0 * len(novel) / len(wanted)
    return NoveltyReport(percentages)
