"""Deterministic synthetic-vs-original distribution statistics.

The gap between corpora is quantified with n-gram Jensen-Shannon
divergence (base-2, bounded in [0, 1]) and vocabulary overlap, and made
visible through a two-component PCA projection of per-sentence vectors.
Vectors come either from an external embedding file or from the built-in
hashed bag-of-words vectorizer, which is stable across platforms.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCorpus
from .gate import normalize

HASHED_VECTOR_DIM = 256


def _sentence_tokens(corpus: Iterable[str]) -> list[list[str]]:
    return [normalize(sentence).split() for sentence in corpus]


@dataclass
class CorpusStats:
    vocab: Counter = field(default_factory=Counter)
    length_histogram: Counter = field(default_factory=Counter)
    sentences: list[list[str]] = field(default_factory=list)

    @classmethod
    def from_texts(cls, corpus: Iterable[str]) -> "CorpusStats":
        stats = cls()
        for tokens in _sentence_tokens(corpus):
            stats.sentences.append(tokens)
            stats.vocab.update(tokens)
            stats.length_histogram[len(tokens)] += 1
        return stats

    def ngram_dist(self, n: int) -> dict[tuple[str, ...], float]:
        """Probability distribution over n-grams (sentence-internal)."""
        counts: Counter = Counter()
        for tokens in self.sentences:
            for i in range(len(tokens) - n + 1):
                counts[tuple(tokens[i : i + n])] += 1
        total = sum(counts.values())
        if total == 0:
            raise EmptyCorpus(f"no {n}-grams in corpus")
        return {gram: count / total for gram, count in counts.items()}


def ngram_js_divergence(a: Iterable[str], b: Iterable[str], n: int = 1) -> float:
    """Base-2 Jensen-Shannon divergence between two n-gram distributions.

    JSD(P, Q) = KL(P||M)/2 + KL(Q||M)/2 with M the even mixture; no
    smoothing is needed because M covers the support of both sides.
    """
    p = CorpusStats.from_texts(a).ngram_dist(n)
    q = CorpusStats.from_texts(b).ngram_dist(n)
    total = 0.0
    for gram in p.keys() | q.keys():
        pv = p.get(gram, 0.0)
        qv = q.get(gram, 0.0)
        mv = (pv + qv) / 2.0
        if pv > 0:
            total += 0.5 * pv * math.log2(pv / mv)
        if qv > 0:
            total += 0.5 * qv * math.log2(qv / mv)
    return min(max(total, 0.0), 1.0)


def vocab_overlap(a: Iterable[str], b: Iterable[str]) -> float:
    """Jaccard similarity of normalized token-type sets."""
    types_a = set(CorpusStats.from_texts(a).vocab)
    types_b = set(CorpusStats.from_texts(b).vocab)
    if not types_a or not types_b:
        raise EmptyCorpus("vocab_overlap needs two non-empty corpora")
    return len(types_a & types_b) / len(types_a | types_b)


# -- projection ------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectedPoint:
    x: float
    y: float
    source: str
    sentence_id: str


@dataclass
class ProjectionSet:
    points: list[ProjectedPoint]
    degenerate: bool = False


def hashed_bow_vector(sentence: str, dim: int = HASHED_VECTOR_DIM) -> np.ndarray:
    """L2-normalized token-count vector with SHA-256 bucket assignment.

    hashlib (not the salted builtin hash) keeps the bucket for a token
    identical across runs and platforms.
    """
    vec = np.zeros(dim, dtype=np.float64)
    for token in normalize(sentence).split():
        bucket = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big") % dim
        vec[bucket] += 1.0
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def pca_project(
    vectors: Sequence[np.ndarray] | np.ndarray,
    dims: int = 2,
    ids: Sequence[str] | None = None,
    sources: Sequence[str] | None = None,
) -> ProjectionSet:
    """Mean-centered PCA onto the top components via eigendecomposition.

    Component signs are fixed by making each component's largest-magnitude
    coordinate positive, so the projection is fully deterministic. All
    vectors identical is flagged as degenerate, with every point at the
    origin.
    """
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatch("vectors must share one dimension")
    count, width = matrix.shape
    if width < dims:
        raise DimensionMismatch(f"vector dimension {width} is below {dims}")
    if count < 2:
        raise DimensionMismatch("need at least two vectors to project")
    ids = list(ids) if ids is not None else [str(i) for i in range(count)]
    sources = list(sources) if sources is not None else ["original"] * count
    if len(ids) != count or len(sources) != count:
        raise DimensionMismatch("ids/sources length must match vector count")

    centered = matrix - matrix.mean(axis=0)
    if not np.any(np.abs(centered) > 1e-15):
        points = [ProjectedPoint(0.0, 0.0, sources[i], ids[i]) for i in range(count)]
        return ProjectionSet(points=points, degenerate=True)

    cov = (centered.T @ centered) / (count - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:dims]
    components = eigvecs[:, order]
    for k in range(components.shape[1]):
        pivot = int(np.argmax(np.abs(components[:, k])))
        if components[pivot, k] < 0:
            components[:, k] = -components[:, k]
    coords = centered @ components
    points = [
        ProjectedPoint(float(coords[i, 0]), float(coords[i, 1]), sources[i], ids[i])
        for i in range(count)
    ]
    return ProjectionSet(points=points, degenerate=False)


def project_corpora(original: Sequence[str], synthetic: Sequence[str]) -> ProjectionSet:
    """Hashed bag-of-words vectors for both corpora, projected together."""
    vectors = [hashed_bow_vector(s) for s in original] + [hashed_bow_vector(s) for s in synthetic]
    ids = [f"orig-{i}" for i in range(len(original))] + [f"syn-{i}" for i in range(len(synthetic))]
    sources = ["original"] * len(original) + ["synthetic"] * len(synthetic)
    return pca_project(vectors, ids=ids, sources=sources)


# -- vector and scatter files -----------------------------------------------------

def read_vector_file(path: Path | str) -> tuple[list[str], list[np.ndarray]]:
    """Read ``id<TAB>v1,v2,...,vk`` lines."""
    ids: list[str] = []
    vectors: list[np.ndarray] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise DimensionMismatch(f"{path}:{lineno}: expected 'id<TAB>v1,v2,...'")
        sid, values = line.split("\t", 1)
        vectors.append(np.array([float(v) for v in values.split(",")], dtype=np.float64))
        ids.append(sid)
    return ids, vectors


def write_vector_file(ids: Sequence[str], vectors: Sequence[np.ndarray], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for sid, vec in zip(ids, vectors):
            fh.write(sid + "\t" + ",".join(f"{v:.8g}" for v in vec) + "\n")


def export_scatter(projection: ProjectionSet, path: Path | str) -> None:
    """TSV with x, y, source, id columns, rows in input order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("x\ty\tsource\tid\n")
        for point in projection.points:
            fh.write(f"{point.x:.10g}\t{point.y:.10g}\t{point.source}\t{point.sentence_id}\n")
