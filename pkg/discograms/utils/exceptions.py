"""
Custom exceptions for the DiscoGraMS pipeline.
"""

from typing import Any, Dict, Optional


SCHEMA_VERSION = 1


class DiscoGraMSError(Exception):
    """Base exception for the DiscoGraMS pipeline."""

    def __init__(self, message: str = '', details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    @property
    def code(self) -> str:
        return self.__class__.__name__

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable rendering used by the CLI error channel."""
        return {
            'schema_version': SCHEMA_VERSION,
            'error': self.code,
            'message': self.message,
            'details': self.details,
        }


# Parsing and I/O

class MalformedXml(DiscoGraMSError):
    """Raised when a screenplay document is not parseable XML."""
    pass


class SchemaViolation(DiscoGraMSError):
    """Raised when a document does not follow the expected schema."""
    pass


class EmptyScreenplay(DiscoGraMSError):
    """Raised when a document yields zero scenes."""
    pass


class DuplicateId(DiscoGraMSError):
    """Raised when a summary file repeats a screenplay id."""
    pass


class MissingField(DiscoGraMSError):
    """Raised when a record lacks a required field."""
    pass


class UnreadableFile(DiscoGraMSError):
    """Raised when an input file cannot be read or decoded."""
    pass


class UnwritableFile(DiscoGraMSError):
    """Raised when an output file cannot be written."""
    pass


# Graph

class EmbeddingDimMismatch(DiscoGraMSError):
    """Raised when an embedder returns a vector of the wrong dimension."""
    pass


class InvariantViolation(DiscoGraMSError):
    """Raised when a graph breaks one of its structural invariants."""
    pass


class UnsupportedFormat(DiscoGraMSError):
    """Raised when an export or import format is not supported."""
    pass


# Embeddings

class DimInconsistent(DiscoGraMSError):
    """Raised when stored vectors disagree on dimension."""
    pass


class MissingText(DiscoGraMSError):
    """Raised when an external embedder has no vector for a text."""
    pass


# Tensor engine

class ShapeMismatch(DiscoGraMSError):
    """Raised when tensor shapes are incompatible."""
    pass


class NonFinite(DiscoGraMSError):
    """Raised when a NaN or Inf shows up in values or gradients."""
    pass


# Model, training and summarization

class VocabularyMiss(DiscoGraMSError):
    """Raised when a target token is not in the vocabulary."""
    pass


class LengthExceeded(DiscoGraMSError):
    """Raised when a target sequence is longer than the decoder allows."""
    pass


class EmptyCorpus(DiscoGraMSError):
    """Raised when training is requested on an empty corpus."""
    pass


class ConfigMismatch(DiscoGraMSError):
    """Raised when a checkpoint does not match the supplied inputs."""
    pass


class ConfigurationError(DiscoGraMSError):
    """Raised when configuration is invalid."""
    pass


# Analysis

class NoCharacters(DiscoGraMSError):
    """Raised when a graph has no character nodes to analyze."""
    pass


class TooFewPoints(DiscoGraMSError):
    """Raised when there are not enough points for PCA or clustering."""
    pass


class DegenerateRank(DiscoGraMSError):
    """Raised in strict mode when PCA finds fewer than three informative axes."""
    pass
