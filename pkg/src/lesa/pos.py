"""POS k-gram construction, skip-gram tag embeddings, and the per-viewpoint
POS encoder pillars (embedding -> BiLSTM -> attention pool -> 32-dim output).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Record
from .errors import ConfigError, DataError
from .nn.layers import AttentionPool, BiLSTM, Dense, EmbeddingLayer
from .nn.store import ParamStore, Rng

__all__ = [
    "BOS_TAG",
    "EOS_TAG",
    "UNK",
    "NgramVocab",
    "SkipgramConfig",
    "PosPillar",
    "pos_ngrams",
    "build_pos_vocab",
    "skipgram_pairs",
    "train_skipgram",
    "save_embedding_file",
    "load_embedding_file",
]

BOS_TAG = "<s>"
EOS_TAG = "</s>"
UNK = 0
UNK_KEY = ("<unk>",)

VALID_K = (2, 3, 4)
MIN_NGRAM_FREQ = 3


def pos_ngrams(tags: list[str], k: int) -> list[tuple[str, ...]]:
    """Sliding k-grams over `tags` padded with boundary dummy tags.

    floor((k-1)/2) BOS tags are prepended and ceil((k-1)/2) EOS tags
    appended, so the output always has exactly len(tags) windows.
    """
    if k not in VALID_K:
        raise DataError(f"k must be one of {VALID_K}, got {k}")
    if not tags:
        raise DataError("pos_ngrams: empty tag sequence")
    left = (k - 1) // 2
    right = k - 1 - left
    padded = [BOS_TAG] * left + list(tags) + [EOS_TAG] * right
    return [tuple(padded[i : i + k]) for i in range(len(tags))]


@dataclass
class NgramVocab:
    """Dense k-gram index with UNK at 0; only frequency >= 3 k-grams are kept."""

    k: int
    index: dict[tuple[str, ...], int] = field(default_factory=dict)
    min_kept_freq: int = MIN_NGRAM_FREQ

    def __len__(self) -> int:
        return len(self.index) + 1

    def lookup(self, ngram: tuple[str, ...]) -> int:
        return self.index.get(ngram, UNK)

    def encode(self, tags: list[str]) -> list[int]:
        return [self.lookup(g) for g in pos_ngrams(tags, self.k)]

    def ordered_ngrams(self) -> list[tuple[str, ...]]:
        """Keys in index order, with the UNK placeholder first."""
        ordered = [UNK_KEY] * len(self)
        for gram, idx in self.index.items():
            ordered[idx] = gram
        return ordered


def build_pos_vocab(tag_sequences: list[list[str]], k: int) -> NgramVocab:
    """Index every k-gram occurring more than twice across the sequences."""
    counts: dict[tuple[str, ...], int] = {}
    for tags in tag_sequences:
        for gram in pos_ngrams(tags, k):
            counts[gram] = counts.get(gram, 0) + 1
    vocab = NgramVocab(k=k)
    next_idx = 1
    for gram in sorted(counts):
        if counts[gram] >= MIN_NGRAM_FREQ:
            vocab.index[gram] = next_idx
            next_idx += 1
    return vocab


# ---------------------------------------------------------------------------
# skip-gram with negative sampling


@dataclass
class SkipgramConfig:
    window: int = 6
    dim: int = 20
    epochs: int = 5
    neg_k: int = 5
    lr: float = 0.05
    noise_power: float = 0.75


def _logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def skipgram_pairs(sequence: list[int], window: int) -> list[tuple[int, int]]:
    """(center, context) pairs within the window, in corpus order."""
    pairs = []
    for i, center in enumerate(sequence):
        lo = max(0, i - window)
        hi = min(len(sequence), i + window + 1)
        for j in range(lo, hi):
            if j != i:
                pairs.append((center, sequence[j]))
    return pairs


def train_skipgram(
    sequences: list[list[int]],
    vocab_size: int,
    cfg: SkipgramConfig,
    rng: Rng,
) -> tuple[np.ndarray, list[float]]:
    """Train tag-gram vectors by skip-gram with negative sampling.

    Noise distribution is unigram frequency raised to `noise_power`. Returns
    the input-side embedding table (vocab_size x dim) and per-epoch mean
    losses.
    """
    if vocab_size < cfg.neg_k + 1:
        raise DataError(
            f"vocabulary of {vocab_size} too small for {cfg.neg_k} negative samples"
        )
    counts = np.zeros(vocab_size)
    for seq in sequences:
        for idx in seq:
            counts[idx] += 1
    weights = counts**cfg.noise_power
    if weights.sum() == 0:
        raise DataError("train_skipgram: empty corpus")
    noise_cdf = np.cumsum(weights / weights.sum())

    bound = 0.5 / cfg.dim
    table_in = rng.uniform(-bound, bound, (vocab_size, cfg.dim))
    table_out = np.zeros((vocab_size, cfg.dim))
    history: list[float] = []
    for _ in range(cfg.epochs):
        total_loss = 0.0
        n_pairs = 0
        for seq in sequences:
            for center, context in skipgram_pairs(seq, cfg.window):
                h = table_in[center]
                draws = np.searchsorted(noise_cdf, rng.random(cfg.neg_k))
                negatives = np.minimum(draws, vocab_size - 1)
                dh = np.zeros(cfg.dim)
                score = _logistic(float(h @ table_out[context]))
                total_loss += -math.log(max(score, 1e-12))
                g = score - 1.0
                dh += g * table_out[context]
                table_out[context] -= cfg.lr * g * h
                for neg in negatives:
                    s = _logistic(float(h @ table_out[neg]))
                    total_loss += -math.log(max(1.0 - s, 1e-12))
                    dh += s * table_out[neg]
                    table_out[neg] -= cfg.lr * s * h
                table_in[center] -= cfg.lr * dh
                n_pairs += 1
        history.append(total_loss / max(n_pairs, 1))
    return table_in, history


# ---------------------------------------------------------------------------
# embedding file format (text; vocab is reconstructable from it)


def save_embedding_file(
    path: str | Path,
    magic: str,
    vocab: NgramVocab,
    table: np.ndarray,
) -> None:
    if table.shape[0] != len(vocab):
        raise DataError(
            f"table rows {table.shape[0]} != vocab size {len(vocab)}"
        )
    lines = [f"{magic} {vocab.k} {table.shape[1]} {table.shape[0]}"]
    for idx, gram in enumerate(vocab.ordered_ngrams()):
        values = " ".join(repr(float(x)) for x in table[idx])
        lines.append(f"{'|'.join(gram)} {values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embedding_file(path: str | Path, magic: str) -> tuple[NgramVocab, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise DataError(f"{path}: empty embedding file")
    header = text[0].split()
    if len(header) != 4 or header[0] != magic:
        raise DataError(f"{path}: bad embedding header, expected magic {magic}")
    k, dim, count = (int(x) for x in header[1:])
    if len(text) - 1 != count:
        raise DataError(f"{path}: expected {count} rows, found {len(text) - 1}")
    vocab = NgramVocab(k=k)
    table = np.zeros((count, dim))
    for idx, line in enumerate(text[1:]):
        parts = line.split()
        gram = tuple(parts[0].split("|"))
        values = [float(x) for x in parts[1:]]
        if len(values) != dim:
            raise DataError(f"{path}: row {idx} has {len(values)} values, expected {dim}")
        table[idx] = values
        if idx != 0:
            vocab.index[gram] = idx
    return vocab, table


# ---------------------------------------------------------------------------
# pillar


class PosPillar:
    """One viewpoint's POS encoder: embedding, BiLSTM, attention pool, 32-dim."""

    OUT_DIM = 32

    def __init__(
        self,
        store: ParamStore,
        name: str,
        vocab: NgramVocab,
        rng: Rng,
        embed_dim: int = 20,
        hidden: int = 32,
        max_len: int = 128,
    ):
        if max_len < 1:
            raise ConfigError("max_len must be positive")
        self.name = name
        self.vocab = vocab
        self.max_len = max_len
        self.embedding = EmbeddingLayer(store, f"{name}.emb", len(vocab), embed_dim, rng)
        self.encoder = BiLSTM(store, f"{name}.bilstm", embed_dim, hidden, rng)
        self.pool = AttentionPool(store, f"{name}.pool", 2 * hidden, rng)
        self.project = Dense(store, f"{name}.proj", 2 * hidden, self.OUT_DIM, rng)

    def encode_record(self, record: Record) -> list[int]:
        return self.vocab.encode(record.upos)[: self.max_len]

    def forward(self, ngram_idx: list[int], length: int | None = None) -> np.ndarray:
        """Encode one sequence; `length` marks the valid prefix when the
        index list carries right padding."""
        if not ngram_idx:
            raise DataError(f"{self.name}: empty k-gram sequence")
        length = len(ngram_idx) if length is None else int(length)
        vectors = self.embedding.forward(ngram_idx)
        states = self.encoder.forward(vectors, length=length)
        mask = np.arange(len(ngram_idx)) < length
        _, pooled = self.pool.forward(states, mask=mask)
        return self.project.forward(pooled)[0]

    def backward(self, dout: np.ndarray) -> None:
        dpooled = self.project.backward(dout[None, :])[0]
        dstates = self.pool.backward(dpooled)
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
