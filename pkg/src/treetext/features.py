"""Leaf-node features: pretrained word vector concatenated with a one-hot
position slot. Out-of-vocabulary words get a seeded uniform[-0.01, 0.01]
vector, cached per word type so every occurrence shares it."""
from __future__ import annotations

import hashlib

import numpy as np

from .graphio import ConfigError, DocumentGraph

OOV_SCALE = 0.01


class EmbeddingParseError(ValueError):
    pass


class EmbeddingTable:
    def __init__(self, dimension: int, vectors: dict[str, np.ndarray]):
        self.dimension = dimension
        self.vectors = vectors

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path) -> EmbeddingTable:
    """Text file of lines "word v1 ... vd", whitespace separated.
    Dimension is inferred from the first line; duplicates keep the first."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            word, vals = parts[0], parts[1:]
            if dim is None:
                if not vals:
                    raise EmbeddingParseError(f"{path}:{lineno}: no vector values")
                dim = len(vals)
            elif len(vals) != dim:
                raise EmbeddingParseError(
                    f"{path}:{lineno}: expected {dim} values, found {len(vals)}")
            if word in vectors:
                continue
            try:
                vectors[word] = np.asarray([float(v) for v in vals], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingParseError(f"{path}:{lineno}: {exc}") from exc
    if dim is None:
        raise EmbeddingParseError(f"{path}: empty embedding file")
    return EmbeddingTable(dimension=dim, vectors=vectors)


def oov_vector(word: str, dimension: int, seed: int) -> np.ndarray:
    """Deterministic per-word-type vector, independent of encounter order."""
    word_key = int.from_bytes(hashlib.sha256(word.encode("utf-8")).digest()[:8], "little")
    rng = np.random.default_rng((seed, word_key))
    return rng.uniform(-OOV_SCALE, OOV_SCALE, size=dimension)


def featurize(graph: DocumentGraph, table: EmbeddingTable,
              pos_slots: int, seed: int) -> np.ndarray:
    """Rows indexed by token id: word vector then one-hot position block.
    Positions beyond the last slot share the last slot."""
    if pos_slots < 1:
        raise ConfigError(f"pos_slots must be >= 1, got {pos_slots}")
    n = graph.num_tokens
    d = table.dimension + pos_slots
    out = np.zeros((n, d), dtype=np.float64)
    for tok in graph.tokens:
        vec = table.vectors.get(tok.text)
        if vec is None:
            vec = oov_vector(tok.text, table.dimension, seed)
        out[tok.id, :table.dimension] = vec
        out[tok.id, table.dimension + min(tok.id, pos_slots - 1)] = 1.0
    return out
