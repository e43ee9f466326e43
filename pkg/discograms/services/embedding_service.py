"""
Embedding Service for the DiscoGraMS pipeline
Deterministic text -> vector backends standing in for the sentence encoder
"""

import hashlib
import json
import logging
import math
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Union

import numpy as np
from sklearn.utils import murmurhash3_32

from discograms.utils.exceptions import DimInconsistent, MissingField, MissingText, SchemaViolation, UnreadableFile
from discograms.utils.helpers import metric_tokens

logger = logging.getLogger(__name__)

DEFAULT_DIM = 768


class Embedder:
    """
    Base class for text embedders

    Subclasses implement ``embed`` and set ``dim``; vectors are float32 of
    length ``dim`` and identical texts always give identical vectors.
    """

    dim: int

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_many(self, texts: Iterable[str]) -> np.ndarray:
        """Embed several texts into a [n, dim] matrix, embedding repeats once."""
        texts = list(texts)
        cache: Dict[str, np.ndarray] = {}
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            if text not in cache:
                cache[text] = self.embed(text)
            out[i] = cache[text]
        return out

    def describe(self) -> Dict[str, object]:
        return {'type': self.__class__.__name__, 'dim': self.dim}


class HashingEmbedder(Embedder):
    """
    Signed feature hashing over lowercase alphanumeric tokens

    Each token is hashed (MurmurHash3, seeded) to a bucket in 0..dim-1 and a
    sign. Counts, optionally idf-weighted, are accumulated and the result is
    L2-normalized; texts without tokens map to the zero vector.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0,
                 idf: Optional[Mapping[str, float]] = None):
        if dim <= 0:
            raise ValueError(f"Embedding dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.seed = int(seed)
        self.idf = dict(idf) if idf else None

    def _bucket(self, token: str):
        h = murmurhash3_32(token, seed=self.seed)
        return abs(h) % self.dim, (1.0 if h >= 0 else -1.0)

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token, count in Counter(metric_tokens(text)).items():
            bucket, sign = self._bucket(token)
            weight = self.idf.get(token, 1.0) if self.idf else 1.0
            vec[bucket] += sign * count * weight

        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec.astype(np.float32)

    def fit_idf(self, documents: Iterable[str]) -> 'HashingEmbedder':
        """
        Return a copy weighted by smoothed idf fitted on ``documents``

        Args:
            documents: Texts to count document frequencies over

        Returns:
            HashingEmbedder sharing dim and seed
        """
        df: Counter = Counter()
        n = 0
        for doc in documents:
            n += 1
            df.update(set(metric_tokens(doc)))
        idf = {tok: math.log((1 + n) / (1 + c)) + 1.0 for tok, c in df.items()}
        logger.info(f"Fitted idf over {n} documents ({len(idf)} tokens)")
        return HashingEmbedder(self.dim, self.seed, idf)

    def describe(self) -> Dict[str, object]:
        return {'type': 'hash', 'dim': self.dim, 'seed': self.seed, 'idf': self.idf is not None}


class ExternalEmbedder(Embedder):
    """Lookup of vectors computed offline, keyed by exact text or SHA-256 of the text"""

    def __init__(self, by_text: Mapping[str, np.ndarray], by_hash: Mapping[str, np.ndarray], dim: int):
        self.by_text = dict(by_text)
        self.by_hash = dict(by_hash)
        self.dim = int(dim)

    @staticmethod
    def text_hash(text: str) -> str:
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    def embed(self, text: str) -> np.ndarray:
        vec = self.by_text.get(text)
        if vec is None:
            vec = self.by_hash.get(self.text_hash(text))
        if vec is None:
            raise MissingText(f"No external vector for text: {text[:60]!r}",
                              {'hash': self.text_hash(text)})
        return vec.copy()

    def describe(self) -> Dict[str, object]:
        return {'type': 'external', 'dim': self.dim, 'entries': len(self.by_text) + len(self.by_hash)}


def hash_embed(text: str, dim: int = DEFAULT_DIM, seed: int = 0) -> np.ndarray:
    """Functional form of ``HashingEmbedder(dim, seed).embed(text)``."""
    return HashingEmbedder(dim, seed).embed(text)


def load_external(path: Union[str, Path]) -> ExternalEmbedder:
    """
    Load an external vector file

    Args:
        path: JSON-lines file of {"text": ..., "vec": [...]} or {"hash": hex, "vec": [...]}

    Returns:
        ExternalEmbedder

    Raises:
        UnreadableFile: If the file cannot be read
        DimInconsistent: If vectors disagree on dimension
    """
    try:
        content = Path(path).read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise UnreadableFile(f"Cannot read vectors {path}: {e}", {'path': str(path)}) from e

    by_text: Dict[str, np.ndarray] = {}
    by_hash: Dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    for line_no, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaViolation(f"Line {line_no} is not JSON: {e}", {'line': line_no}) from e
        if 'vec' not in record:
            raise MissingField(f"Line {line_no} is missing 'vec'", {'line': line_no, 'field': 'vec'})

        vec = np.asarray(record['vec'], dtype=np.float32)
        if vec.ndim != 1 or vec.size == 0:
            raise SchemaViolation(f"Line {line_no}: 'vec' must be a non-empty list of numbers",
                                  {'line': line_no})
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise DimInconsistent(f"Line {line_no} has dimension {vec.size}, expected {dim}",
                                  {'line': line_no, 'expected': dim, 'got': int(vec.size)})

        if 'text' in record:
            by_text[record['text']] = vec
        elif 'hash' in record:
            by_hash[str(record['hash']).lower()] = vec
        else:
            raise MissingField(f"Line {line_no} needs 'text' or 'hash'", {'line': line_no, 'field': 'text'})

    if dim is None:
        raise SchemaViolation(f"Vector file {path} holds no vectors", {'path': str(path)})

    logger.info(f"Loaded {len(by_text) + len(by_hash)} external vectors of dim {dim} from {path}")
    return ExternalEmbedder(by_text, by_hash, dim)


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity; rows with zero norm give similarity 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nb = np.linalg.norm(b, axis=1, keepdims=True)
    a = np.divide(a, na, out=np.zeros_like(a), where=na > 0)
    b = np.divide(b, nb, out=np.zeros_like(b), where=nb > 0)
    return a @ b.T


def build_embedder(kind: str, dim: int = DEFAULT_DIM, seed: int = 0,
                   vectors: Optional[Union[str, Path]] = None) -> Embedder:
    """
    Construct an embedder by name

    Args:
        kind: 'hash' or 'external'
        dim: Dimension for the hashing embedder
        seed: Hash seed
        vectors: Vector file for the external embedder

    Returns:
        Embedder
    """
    if kind == 'hash':
        return HashingEmbedder(dim, seed)
    if kind == 'external':
        if vectors is None:
            raise MissingField("External embedder needs a vector file", {'field': 'vectors'})
        return load_external(vectors)
    raise ValueError(f"Unknown embedder kind: {kind}")
