"""Cheap deterministic baselines that stand in for fine-tuning.

The learning-curve driver needs an eval hook that maps a training corpus
to metrics without a GPU. For NER that is a surface gazetteer (memorize
every training mention, tag by longest token-sequence match); for RE a
nearest-neighbour classifier over token overlap. Real fine-tuning plugs
into the same hook through prediction files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import EntitySpan, REExample, Tag, TaggedSentence, Token, spans_from_tags, tags_from_spans
from .gate import normalize


@dataclass
class Gazetteer:
    surfaces: dict[tuple[str, ...], str]  # lowercased token sequence -> entity type
    max_len: int


def train_gazetteer(sentences: Sequence[TaggedSentence]) -> Gazetteer:
    surfaces: dict[tuple[str, ...], str] = {}
    max_len = 1
    for sentence in sentences:
        for span in spans_from_tags(sentence):
            key = tuple(
                tok.text.lower() for tok in sentence.tokens[span.start : span.end + 1]
            )
            # keep the lexicographically smallest type on collisions
            current = surfaces.get(key)
            if current is None or span.entity_type < current:
                surfaces[key] = span.entity_type
            max_len = max(max_len, len(key))
    return Gazetteer(surfaces=surfaces, max_len=max_len)


def gazetteer_tags(gazetteer: Gazetteer, tokens: Sequence[Token]) -> list[Tag]:
    """Longest-match, left-to-right, non-overlapping tagging."""
    lowered = [tok.text.lower() for tok in tokens]
    spans: list[EntitySpan] = []
    i = 0
    while i < len(lowered):
        matched = False
        top = min(gazetteer.max_len, len(lowered) - i)
        for length in range(top, 0, -1):
            etype = gazetteer.surfaces.get(tuple(lowered[i : i + length]))
            if etype is not None:
                spans.append(EntitySpan(i, i + length - 1, etype))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return tags_from_spans(len(tokens), spans)


def nearest_label(train: Sequence[REExample], sentence: str) -> str:
    """Label of the training example with the highest token overlap."""
    target = set(normalize(sentence).split())
    best_label = "No"
    best_score = -1.0
    for example in train:
        other = set(normalize(example.sentence).split())
        union = target | other
        score = len(target & other) / len(union) if union else 0.0
        if score > best_score:
            best_score = score
            best_label = example.label
    return best_label
