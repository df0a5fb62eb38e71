"""Minimal differentiable-layer toolkit: forward + exact backward, Adam,
finite-difference gradient checking, and tensor checkpointing."""

from .checkpoint import MAGIC, load_tensors, save_tensors
from .functional import PROB_FLOOR, cross_entropy, relu, sigmoid, softmax
from .gradcheck import gradient_check
from .layers import AttentionPool, BiLSTM, Dense, Dropout, EmbeddingLayer, TransformerBlock
from .store import ParamStore, Rng, check_finite, glorot_uniform, small_uniform

__all__ = [
    "MAGIC",
    "PROB_FLOOR",
    "AttentionPool",
    "BiLSTM",
    "Dense",
    "Dropout",
    "EmbeddingLayer",
    "ParamStore",
    "Rng",
    "TransformerBlock",
    "check_finite",
    "cross_entropy",
    "glorot_uniform",
    "gradient_check",
    "load_tensors",
    "relu",
    "save_tensors",
    "sigmoid",
    "small_uniform",
    "softmax",
]
