"""Parameter storage, deterministic RNG, and the Adam update.

All tensors are C-contiguous float64 numpy arrays. A ParamStore owns every
trainable array of one model plus its gradient and Adam moment buffers; the
arrays are mutated in place so that layer objects can hold direct references.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import ConfigError, NumericError

__all__ = ["Rng", "ParamStore", "check_finite", "glorot_uniform", "small_uniform"]

_MASK64 = (1 << 64) - 1


def check_finite(x: np.ndarray | float, what: str) -> None:
    """Raise NumericError if `x` holds NaN or Inf."""
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite values in {what}")


class Rng:
    """Deterministic random source: identical seed, identical draw sequence."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.draw_count = 0
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def spawn(self, tag: str) -> "Rng":
        """Derive an independent, reproducible child stream."""
        digest = hashlib.blake2b(f"{self.seed}:{tag}".encode(), digest_size=8).digest()
        return Rng(int.from_bytes(digest, "little"))

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        self.draw_count += 1
        return self._gen.uniform(low, high, size=shape).astype(np.float64)

    def random(self, shape=None) -> np.ndarray | float:
        self.draw_count += 1
        return self._gen.random(size=shape)

    def integers(self, low: int, high: int, size=None):
        self.draw_count += 1
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        self.draw_count += 1
        return self._gen.permutation(n)

    def shuffled(self, items: list) -> list:
        order = self.permutation(len(items))
        return [items[i] for i in order]


def glorot_uniform(rng: Rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, shape)


def small_uniform(rng: Rng, shape, scale: float = 0.08) -> np.ndarray:
    return rng.uniform(-scale, scale, shape)


class ParamStore:
    """Named parameter tensors with mirrored grad and Adam moment buffers."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.adam_m: dict[str, np.ndarray] = {}
        self.adam_v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def create(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.params:
            raise ConfigError(f"duplicate parameter name: {name}")
        arr = np.ascontiguousarray(value, dtype=np.float64)
        check_finite(arr, f"parameter {name}")
        self.params[name] = arr
        self.grads[name] = np.zeros_like(arr)
        self.adam_m[name] = np.zeros_like(arr)
        self.adam_v[name] = np.zeros_like(arr)
        return arr

    def grad(self, name: str) -> np.ndarray:
        return self.grads[name]

    def names(self) -> list[str]:
        return list(self.params)

    def total_size(self) -> int:
        return sum(p.size for p in self.params.values())

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def adam_step(
        self,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        names=None,
    ) -> None:
        """Bias-corrected Adam update over `names` (default: every parameter).

        Gradients of the updated parameters are zeroed afterwards.
        """
        selected = list(self.params) if names is None else list(names)
        for name in selected:
            if name not in self.grads:
                raise NumericError(f"missing grad for parameter {name}")
            check_finite(self.grads[name], f"grad of {name}")
        self.step_count += 1
        t = self.step_count
        for name in selected:
            g = self.grads[name]
            m = self.adam_m[name]
            v = self.adam_v[name]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            m_hat = m / (1.0 - beta1**t)
            v_hat = v / (1.0 - beta2**t)
            self.params[name] -= lr * m_hat / (np.sqrt(v_hat) + eps)
            g.fill(0.0)

    def reset_optimizer(self) -> None:
        for m in self.adam_m.values():
            m.fill(0.0)
        for v in self.adam_v.values():
            v.fill(0.0)
        self.step_count = 0

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.copy() for name, p in self.params.items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        for name, value in snap.items():
            self.params[name][...] = value
