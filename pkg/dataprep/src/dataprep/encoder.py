"""Sentence encoders producing fixed-dimension float32 vectors.

`hash` is a deterministic signed word-tri-gram hashing encoder needing no
model files; `transformers` mean-pools the last hidden states of an
installed HuggingFace model.
"""

from __future__ import annotations

import hashlib

import numpy as np

from . import ExportError

DEFAULT_DIM = 768


class HashEncoder:
    name = "hash"
    pooling = "signed-trigram-hash"

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ExportError(f"encoder dim must be positive, got {dim}")
        self.dim = dim

    def encode(self, text: str) -> np.ndarray:
        tokens = text.lower().split()
        vec = np.zeros(self.dim, dtype=np.float64)
        if tokens:
            padded = ["<s>"] + tokens + ["</s>"]
            for i in range(len(padded) - 2):
                gram = " ".join(padded[i : i + 3])
                digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=9).digest()
                bucket = int.from_bytes(digest[:8], "little") % self.dim
                sign = 1.0 if digest[8] & 1 else -1.0
                vec[bucket] += sign
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec /= norm
        return vec.astype(np.float32)


class TransformersEncoder:
    name = "transformers"
    pooling = "mean-of-last-layer-token-states"

    def __init__(self, model: str = "bert-base-uncased", dim: int = DEFAULT_DIM):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ExportError(
                "encoder 'transformers' requested but torch/transformers are not installed"
            ) from exc
        self.dim = dim
        self._tokenizer = AutoTokenizer.from_pretrained(model)
        self._model = AutoModel.from_pretrained(model)
        self._model.eval()

    def encode(self, text: str) -> np.ndarray:
        import torch

        with torch.no_grad():
            inputs = self._tokenizer(text, return_tensors="pt", truncation=True, max_length=256)
            states = self._model(**inputs).last_hidden_state[0]
            pooled = states.mean(dim=0).cpu().numpy().astype(np.float32)
        if pooled.shape != (self.dim,):
            raise ExportError(f"encoder produced dim {pooled.shape}, expected ({self.dim},)")
        return pooled


def make_encoder(name: str, dim: int = DEFAULT_DIM):
    if name == "hash":
        return HashEncoder(dim)
    if name == "transformers":
        return TransformersEncoder(dim=dim)
    raise ExportError(f"unknown encoder {name!r}")
