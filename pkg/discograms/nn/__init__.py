"""
Neural network modules for the LGAT summarizer

Layers, graph attention, chunked text encoding, fusion and the summary
decoder, all built on ``discograms.core.tensor``.
"""
