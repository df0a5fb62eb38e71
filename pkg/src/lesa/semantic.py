"""Semantic branch: precomputed sentence vectors projected down to 32 dims.

Vectors are produced offline (a frozen contextual encoder) and exchanged
through a small binary format; a deterministic hashing embedder stands in
when no vector file is available so the rest of the toolkit stays
self-contained.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .nn.layers import Dense
from .nn.store import ParamStore, Rng

__all__ = [
    "EMBEDDING_MAGIC",
    "EmbeddingTable",
    "SemanticHead",
    "load_embeddings",
    "write_embeddings",
    "fallback_embed",
]

EMBEDDING_MAGIC = b"LESAEMB1"


class EmbeddingTable:
    """Immutable id -> float32 vector map with a fixed dimension."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray] | None = None):
        if dim < 1:
            raise DataError(f"embedding dim must be positive, got {dim}")
        self.dim = dim
        self._vectors: dict[str, np.ndarray] = {}
        for key, vec in (vectors or {}).items():
            self.add(key, vec)

    def add(self, rec_id: str, vec) -> None:
        arr = np.asarray(vec, dtype=np.float32)
        if arr.shape != (self.dim,):
            raise DataError(
                f"vector for {rec_id!r} has shape {arr.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(arr)):
            raise DataError(f"vector for {rec_id!r} has non-finite entries")
        self._vectors[rec_id] = arr

    def __contains__(self, rec_id: str) -> bool:
        return rec_id in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, rec_id: str) -> np.ndarray:
        if rec_id not in self._vectors:
            raise DataError(f"no embedding for record id {rec_id!r}")
        return self._vectors[rec_id]

    def ids(self) -> list[str]:
        return list(self._vectors)


def write_embeddings(path: str | Path, table: EmbeddingTable) -> None:
    """Serialize: magic, u32 count, u32 dim, then per record
    (u16 id length, UTF-8 id, dim x f32 LE)."""
    out = bytearray(EMBEDDING_MAGIC)
    out += struct.pack("<II", len(table), table.dim)
    for rec_id in table.ids():
        encoded = rec_id.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise DataError(f"record id too long: {rec_id!r}")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += table.get(rec_id).astype("<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def load_embeddings(path: str | Path, expected_dim: int | None = None) -> EmbeddingTable:
    raw = Path(path).read_bytes()
    if not raw.startswith(EMBEDDING_MAGIC):
        raise DataError(f"{path}: bad embedding magic")
    pos = len(EMBEDDING_MAGIC)

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise DataError(f"{path}: truncated embedding file")
        chunk = raw[pos : pos + n]
        pos += n
        return chunk

    count, dim = struct.unpack("<II", take(8))
    if expected_dim is not None and dim != expected_dim:
        raise DataError(f"{path}: embedding dim {dim} does not match configured {expected_dim}")
    table = EmbeddingTable(dim)
    for _ in range(count):
        (id_len,) = struct.unpack("<H", take(2))
        rec_id = take(id_len).decode("utf-8")
        vec = np.frombuffer(take(4 * dim), dtype="<f4").astype(np.float32)
        table.add(rec_id, vec)
    if pos != len(raw):
        raise DataError(f"{path}: {len(raw) - pos} trailing bytes after payload")
    return table


def fallback_embed(text: str, dim: int = 768) -> np.ndarray:
    """Deterministic signed-hash embedding of word tri-grams, L2-normalized.

    The token list is padded with boundary markers so any non-empty text
    yields at least one tri-gram (and hence a unit-norm vector).
    """
    if dim < 1:
        raise DataError(f"embedding dim must be positive, got {dim}")
    tokens = text.lower().split()
    vec = np.zeros(dim)
    if tokens:
        padded = ["<s>"] + tokens + ["</s>"]
        for i in range(len(padded) - 2):
            gram = " ".join(padded[i : i + 3])
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=9).digest()
            bucket = int.from_bytes(digest[:8], "little") % dim
            sign = 1.0 if digest[8] & 1 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
    return vec


class SemanticHead:
    """Two dense layers (square then down to 32) with a ReLU between."""

    OUT_DIM = 32

    def __init__(self, store: ParamStore, name: str, rng: Rng, in_dim: int = 768):
        self.name = name
        self.in_dim = in_dim
        self.fc1 = Dense(store, f"{name}.fc1", in_dim, in_dim, rng, activation="relu")
        self.fc2 = Dense(store, f"{name}.fc2", in_dim, self.OUT_DIM, rng)

    def forward(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.in_dim,):
            raise DataError(
                f"{self.name}: input shape {vec.shape}, expected ({self.in_dim},)"
            )
        return self.fc2.forward(self.fc1.forward(vec))[0]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return self.fc1.backward(self.fc2.backward(dout[None, :]))[0]

    def param_prefix(self) -> str:
        return self.name + "."
