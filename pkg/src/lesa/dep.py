"""Dependency tri-gram encoding with parent-position signals and the
per-viewpoint transformer pillars.

Each token's tri-gram embedding is augmented by adding the concatenation of
two sinusoidal encodings: one for the token's own 1-based position and one
for the position of its syntactic head (0 for the root). The augmented
sequence runs through a transformer block, a masked global average pool,
and two dense layers down to the 32-dim fusion interface.
"""

from __future__ import annotations

import numpy as np

from .corpus import Record
from .errors import ConfigError, DataError
from .nn.layers import Dense, EmbeddingLayer, TransformerBlock
from .nn.store import ParamStore, Rng
from .pos import NgramVocab, build_pos_vocab, pos_ngrams

__all__ = [
    "dep_trigrams",
    "build_dep_vocab",
    "position_signal",
    "DepPillar",
]


def dep_trigrams(deprels: list[str]) -> list[tuple[str, str, str]]:
    """Tri-grams over dependency tags, same boundary padding as POS k-grams."""
    return pos_ngrams(deprels, 3)


def build_dep_vocab(tag_sequences: list[list[str]]) -> NgramVocab:
    """Frequency >= 3 tri-gram vocabulary over dependency tags."""
    return build_pos_vocab(tag_sequences, 3)


def position_signal(index: int, dim: int = 10) -> np.ndarray:
    """Interleaved sin/cos encoding of a non-negative position index."""
    if index < 0:
        raise DataError(f"position index must be >= 0, got {index}")
    if dim % 2 != 0:
        raise ConfigError(f"position signal dim must be even, got {dim}")
    out = np.zeros(dim)
    half = dim // 2
    for i in range(half):
        angle = index / (10000.0 ** (2.0 * i / dim))
        out[2 * i] = np.sin(angle)
        out[2 * i + 1] = np.cos(angle)
    return out


class DepPillar:
    """One viewpoint's dependency encoder with a 32-dim output."""

    OUT_DIM = 32

    def __init__(
        self,
        store: ParamStore,
        name: str,
        vocab: NgramVocab,
        rng: Rng,
        embed_dim: int = 20,
        heads: int = 5,
        ff_dim: int = 128,
        hidden: int = 64,
        max_len: int = 128,
        use_position_signals: bool = True,
    ):
        if embed_dim % 2 != 0:
            raise ConfigError("dep embedding dim must be even to split position signals")
        self.name = name
        self.vocab = vocab
        self.max_len = max_len
        self.embed_dim = embed_dim
        self.use_position_signals = use_position_signals
        self.embedding = EmbeddingLayer(store, f"{name}.emb", len(vocab), embed_dim, rng)
        self.encoder = TransformerBlock(store, f"{name}.encoder", embed_dim, heads, ff_dim, rng)
        self.fc1 = Dense(store, f"{name}.fc1", embed_dim, hidden, rng, activation="relu")
        self.fc2 = Dense(store, f"{name}.fc2", hidden, self.OUT_DIM, rng)
        self._length = 0
        self._full_len = 0

    def encode_record(self, record: Record) -> tuple[list[int], list[int], list[int]]:
        """Tri-gram indices, 1-based token positions, and parent positions."""
        idx = [self.vocab.lookup(g) for g in dep_trigrams(record.deprel)]
        positions = list(range(1, record.n_tokens + 1))
        parents = list(record.head)
        for parent in parents:
            if not 0 <= parent <= record.n_tokens:
                raise DataError(
                    f"record {record.id}: parent position {parent} outside [0, {record.n_tokens}]"
                )
        return idx[: self.max_len], positions[: self.max_len], parents[: self.max_len]

    def encode_vectors(
        self,
        ngram_idx: list[int],
        positions: list[int],
        parent_positions: list[int],
    ) -> np.ndarray:
        """Tri-gram embeddings plus the concatenated position/parent signals."""
        if not (len(ngram_idx) == len(positions) == len(parent_positions)):
            raise DataError(f"{self.name}: unequal sequence component lengths")
        vectors = self.embedding.forward(ngram_idx)
        if self.use_position_signals:
            half = self.embed_dim // 2
            signal = np.zeros_like(vectors)
            for j, (pos, parent) in enumerate(zip(positions, parent_positions)):
                signal[j, :half] = position_signal(pos, half)
                signal[j, half:] = position_signal(parent, half)
            vectors = vectors + signal
        return vectors

    def forward(
        self,
        ngram_idx: list[int],
        positions: list[int],
        parent_positions: list[int],
        length: int | None = None,
    ) -> np.ndarray:
        """Encode one sequence; `length` marks the valid prefix when the
        inputs carry right padding."""
        if not ngram_idx:
            raise DataError(f"{self.name}: empty tri-gram sequence")
        vectors = self.encode_vectors(ngram_idx, positions, parent_positions)
        length = len(ngram_idx) if length is None else int(length)
        states = self.encoder.forward(vectors, length=length)
        self._length = length
        self._full_len = len(ngram_idx)
        pooled = states[:length].mean(axis=0)
        hidden = self.fc1.forward(pooled)
        return self.fc2.forward(hidden)[0]

    def backward(self, dout: np.ndarray) -> None:
        dhidden = self.fc2.backward(dout[None, :])
        dpooled = self.fc1.backward(dhidden)[0]
        dstates = np.zeros((self._full_len, self.embed_dim))
        dstates[: self._length] = dpooled / self._length
        dvectors = self.encoder.backward(dstates)
        self.embedding.backward(dvectors)

    def param_prefix(self) -> str:
        return self.name + "."

    def set_embedding_table(self, table: np.ndarray) -> None:
        if table.shape != self.embedding.table.shape:
            raise DataError(
                f"{self.name}: embedding table shape {table.shape} != "
                f"{self.embedding.table.shape}"
            )
        self.embedding.table[...] = table
