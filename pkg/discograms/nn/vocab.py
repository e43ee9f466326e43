"""
Whitespace-token vocabularies for the chunk encoder and the summary decoder.
"""

import json
import logging
from collections import Counter
from typing import Dict, Iterable, List, Sequence

from discograms.utils.exceptions import SchemaViolation, VocabularyMiss
from discograms.utils.helpers import whitespace_tokens

logger = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = '<pad>', '<bos>', '<eos>', '<unk>'
SPECIALS = (PAD, BOS, EOS, UNK)


class Vocabulary:
    """
    Token <-> id mapping with four reserved ids (pad 0, bos 1, eos 2, unk 3).

    Regular tokens follow in order of decreasing frequency, ties broken
    alphabetically, so the same corpus always yields the same ids.
    """

    def __init__(self, tokens: Sequence[str]):
        self.tokens: List[str] = list(SPECIALS) + [t for t in tokens if t not in SPECIALS]
        self._ids: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}

    pad_id = 0
    bos_id = 1
    eos_id = 2
    unk_id = 3

    @classmethod
    def build(cls, texts: Iterable[str], min_freq: int = 1) -> 'Vocabulary':
        """
        Build from whitespace-tokenized texts, keeping tokens seen at least ``min_freq`` times.

        Args:
            texts: Training texts
            min_freq: Frequency cutoff

        Returns:
            Vocabulary
        """
        counts: Counter = Counter()
        for text in texts:
            counts.update(whitespace_tokens(text))
        kept = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
        logger.debug(f"Vocabulary: kept {len(kept)} of {len(counts)} token types (min_freq={min_freq})")
        return cls(kept)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_of(self, token: str) -> int:
        return self._ids.get(token, self.unk_id)

    def encode(self, tokens: Sequence[str], strict: bool = False) -> List[int]:
        """
        Map tokens to ids.

        Args:
            tokens: Tokens to encode
            strict: Raise instead of mapping unknown tokens to unk

        Raises:
            VocabularyMiss: In strict mode, for the first unknown token
        """
        if strict:
            for token in tokens:
                if token not in self._ids:
                    raise VocabularyMiss(f"Token {token!r} is not in the vocabulary", {'token': token})
        return [self.id_of(t) for t in tokens]

    def decode(self, ids: Sequence[int]) -> List[str]:
        """Tokens up to the first eos, special tokens dropped."""
        out = []
        for i in ids:
            if i == self.eos_id:
                break
            if i >= len(SPECIALS) and i < len(self.tokens):
                out.append(self.tokens[i])
        return out

    def to_json(self) -> str:
        return json.dumps({'tokens': self.tokens[len(SPECIALS):]}, ensure_ascii=False)

    @classmethod
    def from_json(cls, payload: str) -> 'Vocabulary':
        try:
            data = json.loads(payload)
            return cls(list(data['tokens']))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise SchemaViolation(f"Invalid vocabulary file: {e}") from e
