"""
Text utility functions for the DiscoGraMS pipeline
"""

import re
from typing import List


_WHITESPACE = re.compile(r'\s+')
_TRAILING_PARENTHETICAL = re.compile(r'\s*\([^()]*\)\s*$')
_NON_ALNUM = re.compile(r'[^0-9a-z]+')


def normalize_whitespace(text):
    """
    Collapse whitespace runs to single spaces and trim

    Args:
        text (str): Raw text

    Returns:
        str: Normalized text
    """
    if not text:
        return ''
    return _WHITESPACE.sub(' ', text).strip()


def normalize_name(raw):
    """
    Normalize a character name to its registry key

    Uppercases, strips trailing parentheticals such as "(V.O.)" or
    "(CONT'D)", trims and collapses internal whitespace. The result may be
    empty; callers decide whether that is an error.

    Examples:
        >>> normalize_name("Joe (V.O.)")
        'JOE'
        >>> normalize_name("  mary   jane ")
        'MARY JANE'

    Args:
        raw (str): Name as written in the script

    Returns:
        str: Normalized name
    """
    name = normalize_whitespace(raw)
    while True:
        stripped = _TRAILING_PARENTHETICAL.sub('', name)
        if stripped == name:
            break
        name = stripped
    return normalize_whitespace(name).upper()


def metric_tokens(text) -> List[str]:
    """Lowercase and split on non-alphanumerics (tokenizer for metrics and hashing)."""
    if not text:
        return []
    return [t for t in _NON_ALNUM.split(text.lower()) if t]


def whitespace_tokens(text) -> List[str]:
    """Split on whitespace (tokenizer for chunking and the decoder vocabulary)."""
    if not text:
        return []
    return text.split()
