"""
DiscoGraMS - character-aware discourse graphs for screenplay summarization
"""

__version__ = '0.1.0'
