"""Frozen teacher interface: sentence -> normalized embedding vector.

Students are trained against whatever implements this protocol. Two
implementations ship: a synthetic teacher (bag of subword counts sent
through a fixed random projection) for self-contained experiments, and
a lookup over precomputed embeddings for real teacher models.
"""

from __future__ import annotations

import math
from typing import Protocol, runtime_checkable

import numpy as np

from ..embstore import EmbeddingMatrix, SentenceIndexMap, as_normalized
from ..errors import DataError
from .vocab import SubwordVocab


def truncate_words(sentence: str, fraction: float) -> str:
    """First ceil(fraction * word_count) whitespace words of a sentence."""
    words = sentence.split()
    if not words or fraction >= 1.0:
        return " ".join(words)
    keep = max(1, math.ceil(fraction * len(words)))
    return " ".join(words[:keep])


@runtime_checkable
class Teacher(Protocol):
    dim: int

    def embed_sentences(self, sentences) -> np.ndarray:
        """(n, dim) float32, rows L2-normalized."""
        ...

    def truncate_sentence(self, sentence: str, fraction: float) -> str:
        ...


class SyntheticTeacher:
    """Deterministic stand-in teacher: no trained model required.

    A sentence is tokenized with the teacher's own subword vocabulary,
    the bag of subword counts is sent through a frozen Gaussian
    projection, and the result is L2-normalized. The map is fixed by
    the vocab and seed alone.
    """

    def __init__(self, vocab: SubwordVocab, dim: int = 64, *, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.vocab = vocab
        rng = np.random.default_rng(seed)
        self._proj = rng.standard_normal((vocab.size, dim)).astype(np.float64)
        self._proj /= math.sqrt(vocab.size)

    def embed_sentences(self, sentences) -> np.ndarray:
        out = np.empty((len(sentences), self.dim), dtype=np.float64)
        for i, s in enumerate(sentences):
            v = np.zeros(self.dim, dtype=np.float64)
            for piece_id in self.vocab.tokenize(s):
                v += self._proj[piece_id]
            norm = np.linalg.norm(v)
            if norm == 0.0:
                v = self._proj[0].copy()
                norm = np.linalg.norm(v)
            out[i] = v / norm
        return out.astype(np.float32)

    def truncate_sentence(self, sentence: str, fraction: float) -> str:
        return truncate_words(sentence, fraction)


class PrecomputedTeacher:
    """Lookup teacher over an embedding matrix keyed by sentence text."""

    def __init__(self, matrix: EmbeddingMatrix, index: SentenceIndexMap):
        index.check_against(matrix)
        self.dim = matrix.dim
        self._matrix = as_normalized(matrix)
        self._rows = {}
        for row, key in enumerate(index.ids):
            self._rows.setdefault(key, row)

    def embed_sentences(self, sentences) -> np.ndarray:
        out = np.empty((len(sentences), self.dim), dtype=np.float32)
        for i, s in enumerate(sentences):
            row = self._rows.get(s)
            if row is None:
                raise DataError(
                    f"sentence not in precomputed teacher embeddings: {s[:80]!r}")
            out[i] = self._matrix.data[row]
        return out

    def truncate_sentence(self, sentence: str, fraction: float) -> str:
        return truncate_words(sentence, fraction)
