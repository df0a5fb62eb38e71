"""Differentiable layers: forward plus exact hand-written backward.

Each layer registers its parameters in a shared ParamStore and caches the
forward intermediates it needs for one backward call. Layers are therefore
single-use between forward and backward; inference never calls backward, so
a frozen store can be shared across concurrent readers as long as each
worker owns its own layer wrappers.

Sequence layers take the valid prefix length of a right-padded sequence;
positions at and beyond that length produce zero output and receive no
gradient, which is what makes pooled outputs invariant to extra padding.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError
from .functional import relu, sigmoid, softmax
from .store import ParamStore, Rng, glorot_uniform, small_uniform

__all__ = [
    "Dense",
    "EmbeddingLayer",
    "AttentionPool",
    "BiLSTM",
    "TransformerBlock",
    "Dropout",
]


class Dense:
    """Affine map with an optional activation: y = act(x W + b)."""

    def __init__(
        self,
        store: ParamStore,
        name: str,
        in_dim: int,
        out_dim: int,
        rng: Rng,
        activation: str = "linear",
    ):
        if activation not in ("linear", "relu", "tanh"):
            raise ConfigError(f"unknown activation {activation!r}")
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.w = store.create(f"{name}.w", glorot_uniform(rng, in_dim, out_dim, (in_dim, out_dim)))
        self.b = store.create(f"{name}.b", np.zeros(out_dim))
        self.gw = store.grad(f"{name}.w")
        self.gb = store.grad(f"{name}.b")
        self._x: np.ndarray | None = None
        self._act: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.in_dim:
            raise DataError(f"{self.name}: expected input dim {self.in_dim}, got {x.shape[1]}")
        z = x @ self.w + self.b
        if self.activation == "relu":
            out = relu(z)
        elif self.activation == "tanh":
            out = np.tanh(z)
        else:
            out = z
        self._x = x
        self._act = out
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dy = np.atleast_2d(np.asarray(dy, dtype=np.float64))
        x, act = self._x, self._act
        if self.activation == "relu":
            dz = dy * (act > 0)
        elif self.activation == "tanh":
            dz = dy * (1.0 - act * act)
        else:
            dz = dy
        self.gw += x.T @ dz
        self.gb += dz.sum(axis=0)
        return dz @ self.w.T


class EmbeddingLayer:
    """Index lookup into a trainable table of row vectors."""

    def __init__(self, store: ParamStore, name: str, vocab_size: int, dim: int, rng: Rng):
        self.name = name
        self.dim = dim
        self.table = store.create(f"{name}.table", small_uniform(rng, (vocab_size, dim)))
        self.gtable = store.grad(f"{name}.table")
        self._idx: np.ndarray | None = None

    def forward(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        self._idx = idx
        return self.table[idx].copy()

    def backward(self, dy: np.ndarray) -> None:
        np.add.at(self.gtable, self._idx, dy)


class AttentionPool:
    """Additive attention: scalar score per vector, softmax weights, convex pool.

    score_i = v . tanh(u_i W + b); masked positions get weight exactly 0.
    """

    def __init__(self, store: ParamStore, name: str, dim: int, rng: Rng, hidden: int | None = None):
        hidden = dim if hidden is None else hidden
        self.name = name
        self.dim = dim
        self.hidden = hidden
        self.w = store.create(f"{name}.w", glorot_uniform(rng, dim, hidden, (dim, hidden)))
        self.b = store.create(f"{name}.b", np.zeros(hidden))
        self.v = store.create(f"{name}.v", glorot_uniform(rng, hidden, 1, (hidden,)))
        self.gw = store.grad(f"{name}.w")
        self.gb = store.grad(f"{name}.b")
        self.gv = store.grad(f"{name}.v")
        self._cache = None

    def forward(self, vectors: np.ndarray, mask=None) -> tuple[np.ndarray, np.ndarray]:
        u = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        n = u.shape[0]
        if u.shape[1] != self.dim:
            raise DataError(f"{self.name}: expected dim {self.dim}, got {u.shape[1]}")
        mask = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if not mask.any():
            raise DataError(f"{self.name}: all positions masked")
        a = np.tanh(u @ self.w + self.b)
        scores = a @ self.v
        weights = np.zeros(n)
        weights[mask] = softmax(scores[mask])
        pooled = weights @ u
        self._cache = (u, mask, a, weights)
        return weights, pooled

    def backward(self, dpooled: np.ndarray, dweights: np.ndarray | None = None) -> np.ndarray:
        u, mask, a, w = self._cache
        dpooled = np.asarray(dpooled, dtype=np.float64)
        du = w[:, None] * dpooled[None, :]
        dw_total = u @ dpooled
        if dweights is not None:
            dw_total = dw_total + dweights
        # softmax over the unmasked scores
        inner = float(np.sum(w * dw_total))
        dscores = w * (dw_total - inner)
        dscores[~mask] = 0.0
        self.gv += a.T @ dscores
        da = dscores[:, None] * self.v[None, :]
        dz = da * (1.0 - a * a)
        self.gw += u.T @ dz
        self.gb += dz.sum(axis=0)
        du += dz @ self.w.T
        return du


class _LstmDirection:
    """One LSTM direction; gates ordered [input, forget, cell, output]."""

    def __init__(self, store: ParamStore, name: str, in_dim: int, hidden: int, rng: Rng):
        self.name = name
        self.in_dim = in_dim
        self.hidden = hidden
        self.wx = store.create(f"{name}.wx", small_uniform(rng, (in_dim, 4 * hidden)))
        self.wh = store.create(f"{name}.wh", small_uniform(rng, (hidden, 4 * hidden)))
        self.b = store.create(f"{name}.b", np.zeros(4 * hidden))
        self.gwx = store.grad(f"{name}.wx")
        self.gwh = store.grad(f"{name}.wh")
        self.gb = store.grad(f"{name}.b")
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self.hidden
        steps = []
        h_prev = np.zeros(h)
        c_prev = np.zeros(h)
        outs = np.zeros((x.shape[0], h))
        for t in range(x.shape[0]):
            gates = x[t] @ self.wx + h_prev @ self.wh + self.b
            i = sigmoid(gates[:h])
            f = sigmoid(gates[h : 2 * h])
            g = np.tanh(gates[2 * h : 3 * h])
            o = sigmoid(gates[3 * h :])
            c = f * c_prev + i * g
            tc = np.tanh(c)
            ht = o * tc
            steps.append((x[t], h_prev, c_prev, i, f, g, o, tc))
            outs[t] = ht
            h_prev, c_prev = ht, c
        self._cache = steps
        return outs

    def backward(self, douts: np.ndarray) -> np.ndarray:
        h = self.hidden
        steps = self._cache
        dx = np.zeros((douts.shape[0], self.in_dim))
        dh_next = np.zeros(h)
        dc_next = np.zeros(h)
        for t in range(len(steps) - 1, -1, -1):
            xt, h_prev, c_prev, i, f, g, o, tc = steps[t]
            dh = douts[t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dgates = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ]
            )
            self.gwx += np.outer(xt, dgates)
            self.gwh += np.outer(h_prev, dgates)
            self.gb += dgates
            dx[t] = dgates @ self.wx.T
            dh_next = dgates @ self.wh.T
        return dx


class BiLSTM:
    """Bidirectional LSTM over the valid prefix of a right-padded sequence.

    Output per position is [forward_state, backward_state]; padded positions
    are zero.
    """

    def __init__(self, store: ParamStore, name: str, in_dim: int, hidden: int, rng: Rng):
        self.name = name
        self.in_dim = in_dim
        self.hidden = hidden
        self.fwd = _LstmDirection(store, f"{name}.fwd", in_dim, hidden, rng)
        self.bwd = _LstmDirection(store, f"{name}.bwd", in_dim, hidden, rng)
        self._length = 0

    def forward(self, x: np.ndarray, length: int | None = None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[0] == 0:
            raise DataError(f"{self.name}: empty sequence")
        if x.shape[1] != self.in_dim:
            raise DataError(f"{self.name}: expected input dim {self.in_dim}, got {x.shape[1]}")
        length = x.shape[0] if length is None else int(length)
        if not 1 <= length <= x.shape[0]:
            raise DataError(f"{self.name}: invalid valid-prefix length {length}")
        self._length = length
        valid = x[:length]
        hf = self.fwd.forward(valid)
        hb = self.bwd.forward(valid[::-1])[::-1]
        out = np.zeros((x.shape[0], 2 * self.hidden))
        out[:length] = np.concatenate([hf, hb], axis=1)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        length = self._length
        h = self.hidden
        d_valid = dout[:length]
        dxf = self.fwd.backward(d_valid[:, :h])
        dxb = self.bwd.backward(d_valid[::-1, h:])[::-1]
        dx = np.zeros((dout.shape[0], self.in_dim))
        dx[:length] = dxf + dxb
        return dx


class _LayerNorm:
    """Per-position layer normalization with eps 1e-5."""

    EPS = 1e-5

    def __init__(self, store: ParamStore, name: str, dim: int):
        self.gamma = store.create(f"{name}.gamma", np.ones(dim))
        self.beta = store.create(f"{name}.beta", np.zeros(dim))
        self.ggamma = store.grad(f"{name}.gamma")
        self.gbeta = store.grad(f"{name}.beta")
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        mu = x.mean(axis=1, keepdims=True)
        var = x.var(axis=1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.EPS)
        xhat = (x - mu) * inv
        self._cache = (xhat, inv)
        return xhat * self.gamma + self.beta

    def backward(self, dy: np.ndarray) -> np.ndarray:
        xhat, inv = self._cache
        self.ggamma += (dy * xhat).sum(axis=0)
        self.gbeta += dy.sum(axis=0)
        dxhat = dy * self.gamma
        mean_dxhat = dxhat.mean(axis=1, keepdims=True)
        mean_dxhat_xhat = (dxhat * xhat).mean(axis=1, keepdims=True)
        return inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)


class TransformerBlock:
    """Multi-head self-attention + feed-forward, each with residual and norm.

    Operates on the valid prefix only, so padded positions neither attend nor
    are attended to and their outputs stay zero.
    """

    def __init__(
        self,
        store: ParamStore,
        name: str,
        dim: int,
        heads: int,
        ff_dim: int,
        rng: Rng,
    ):
        if dim % heads != 0:
            raise ConfigError(f"{name}: model dim {dim} not divisible by {heads} heads")
        self.name = name
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.wq = store.create(f"{name}.wq", glorot_uniform(rng, dim, dim, (dim, dim)))
        self.wk = store.create(f"{name}.wk", glorot_uniform(rng, dim, dim, (dim, dim)))
        self.wv = store.create(f"{name}.wv", glorot_uniform(rng, dim, dim, (dim, dim)))
        self.wo = store.create(f"{name}.wo", glorot_uniform(rng, dim, dim, (dim, dim)))
        self.bq = store.create(f"{name}.bq", np.zeros(dim))
        self.bk = store.create(f"{name}.bk", np.zeros(dim))
        self.bv = store.create(f"{name}.bv", np.zeros(dim))
        self.bo = store.create(f"{name}.bo", np.zeros(dim))
        self.gwq = store.grad(f"{name}.wq")
        self.gwk = store.grad(f"{name}.wk")
        self.gwv = store.grad(f"{name}.wv")
        self.gwo = store.grad(f"{name}.wo")
        self.gbq = store.grad(f"{name}.bq")
        self.gbk = store.grad(f"{name}.bk")
        self.gbv = store.grad(f"{name}.bv")
        self.gbo = store.grad(f"{name}.bo")
        self.ln1 = _LayerNorm(store, f"{name}.ln1", dim)
        self.ln2 = _LayerNorm(store, f"{name}.ln2", dim)
        self.ff1 = store.create(f"{name}.ff1", glorot_uniform(rng, dim, ff_dim, (dim, ff_dim)))
        self.ff1b = store.create(f"{name}.ff1b", np.zeros(ff_dim))
        self.ff2 = store.create(f"{name}.ff2", glorot_uniform(rng, ff_dim, dim, (ff_dim, dim)))
        self.ff2b = store.create(f"{name}.ff2b", np.zeros(dim))
        self.gff1 = store.grad(f"{name}.ff1")
        self.gff1b = store.grad(f"{name}.ff1b")
        self.gff2 = store.grad(f"{name}.ff2")
        self.gff2b = store.grad(f"{name}.ff2b")
        self._cache = None

    def _split(self, m: np.ndarray) -> np.ndarray:
        n = m.shape[0]
        return m.reshape(n, self.heads, self.head_dim).transpose(1, 0, 2)

    def _merge(self, m: np.ndarray) -> np.ndarray:
        return m.transpose(1, 0, 2).reshape(m.shape[1], self.dim)

    def forward(self, x: np.ndarray, length: int | None = None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim:
            raise DataError(f"{self.name}: expected dim {self.dim}, got {x.shape[1]}")
        length = x.shape[0] if length is None else int(length)
        if not 1 <= length <= x.shape[0]:
            raise DataError(f"{self.name}: invalid valid-prefix length {length}")
        xv = x[:length]
        q = self._split(xv @ self.wq + self.bq)
        k = self._split(xv @ self.wk + self.bk)
        v = self._split(xv @ self.wv + self.bv)
        scale = 1.0 / np.sqrt(self.head_dim)
        scores = np.einsum("hid,hjd->hij", q, k) * scale
        scores -= scores.max(axis=2, keepdims=True)
        e = np.exp(scores)
        attn = e / e.sum(axis=2, keepdims=True)
        ctx = np.einsum("hij,hjd->hid", attn, v)
        merged = self._merge(ctx)
        proj = merged @ self.wo + self.bo
        u = self.ln1.forward(xv + proj)
        ffh = relu(u @ self.ff1 + self.ff1b)
        ffo = ffh @ self.ff2 + self.ff2b
        y = self.ln2.forward(u + ffo)
        out = np.zeros_like(x)
        out[:length] = y
        self._cache = (xv, q, k, v, attn, merged, u, ffh, length, x.shape[0])
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xv, q, k, v, attn, merged, u, ffh, length, full_len = self._cache
        dy = self.ln2.backward(dout[:length])
        # feed-forward branch
        dffo = dy
        dffh = dffo @ self.ff2.T
        self.gff2 += ffh.T @ dffo
        self.gff2b += dffo.sum(axis=0)
        dffz = dffh * (ffh > 0)
        self.gff1 += u.T @ dffz
        self.gff1b += dffz.sum(axis=0)
        du = dy + dffz @ self.ff1.T
        dmid = self.ln1.backward(du)
        # attention branch
        dproj = dmid
        dmerged = dproj @ self.wo.T
        self.gwo += merged.T @ dproj
        self.gbo += dproj.sum(axis=0)
        dctx = self._split(dmerged)
        dattn = np.einsum("hid,hjd->hij", dctx, v)
        dv = np.einsum("hij,hid->hjd", attn, dctx)
        inner = (dattn * attn).sum(axis=2, keepdims=True)
        dscores = attn * (dattn - inner)
        scale = 1.0 / np.sqrt(self.head_dim)
        dq = np.einsum("hij,hjd->hid", dscores, k) * scale
        dk = np.einsum("hij,hid->hjd", dscores, q) * scale
        dq = self._merge(dq)
        dk = self._merge(dk)
        dv = self._merge(dv)
        dxv = dmid + dq @ self.wq.T + dk @ self.wk.T + dv @ self.wv.T
        self.gwq += xv.T @ dq
        self.gwk += xv.T @ dk
        self.gwv += xv.T @ dv
        self.gbq += dq.sum(axis=0)
        self.gbk += dk.sum(axis=0)
        self.gbv += dv.sum(axis=0)
        dx = np.zeros((full_len, self.dim))
        dx[:length] = dxv
        return dx


class Dropout:
    """Inverted-scaling dropout; identity when not training."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate {rate} outside [0, 1)")
        self.rate = rate
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray, rng: Rng | None = None, training: bool = False) -> np.ndarray:
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ConfigError("training-mode dropout requires an Rng")
        keep = rng.random(x.shape) >= self.rate
        self._mask = keep / (1.0 - self.rate)
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return dy
        return dy * self._mask
