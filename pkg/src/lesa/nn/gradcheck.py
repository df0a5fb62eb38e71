"""Finite-difference verification of the hand-written backward passes."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NumericError
from .store import ParamStore, Rng

__all__ = ["gradient_check"]


def gradient_check(
    store: ParamStore,
    run,
    rng: Rng,
    coords_per_param: int = 4,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    `run()` must evaluate the scalar loss at the store's current parameter
    values AND accumulate the analytic gradients into `store.grads`. It has
    to be deterministic (dropout off, no fresh randomness). The error at a
    sampled coordinate is |g_a - g_fd| / max(1, |g_a|, |g_fd|).
    """
    store.zero_grads()
    base = run()
    if not math.isfinite(base):
        raise NumericError("gradient_check: non-finite loss")
    analytic = {name: g.copy() for name, g in store.grads.items()}
    worst = 0.0
    for name in sorted(store.params):
        flat = store.params[name].reshape(-1)
        k = min(coords_per_param, flat.size)
        coords = rng.permutation(flat.size)[:k]
        for i in coords:
            orig = flat[i]
            flat[i] = orig + step
            store.zero_grads()
            loss_plus = run()
            flat[i] = orig - step
            store.zero_grads()
            loss_minus = run()
            flat[i] = orig
            if not (math.isfinite(loss_plus) and math.isfinite(loss_minus)):
                raise NumericError("gradient_check: non-finite loss at perturbed point")
            g_fd = (loss_plus - loss_minus) / (2.0 * step)
            g_a = float(analytic[name].reshape(-1)[i])
            err = abs(g_a - g_fd) / max(1.0, abs(g_a), abs(g_fd))
            worst = max(worst, err)
    store.zero_grads()
    return worst
