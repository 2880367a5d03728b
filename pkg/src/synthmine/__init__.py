"""Synthetic clinical-text corpus pipeline.

Generates labeled synthetic NER/RE corpora through a chat-completion
model (or a deterministic mock), gates them for quality, benchmarks
zero-shot baselines, scores predictions, and quantifies the
synthetic-vs-original distribution gap.
"""

__version__ = "0.1.0"
