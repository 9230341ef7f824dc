"""Finite-difference verification of the analytic parameter gradients."""

from __future__ import annotations

import numpy as np

from .network import Network


def grad_check(net: Network, sample, epsilon: float = 1e-5, max_per_tensor: int | None = None,
               seed: int = 0) -> float:
    """Max over parameters of ``|g_a - g_n| / max(1, |g_a|, |g_n|)``.

    ``g_n`` is the central difference of the single-sample MSE loss. Every
    parameter entry is checked unless `max_per_tensor` is given, in which
    case that many entries per tensor are drawn with PCG64(seed); biases and
    tensors smaller than the cap are always checked in full.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError("epsilon must lie in [1e-7, 1e-3]")
    window, target = sample
    x = np.asarray(window, dtype=float)[None]
    y = np.asarray(target, dtype=float).reshape(1, -1)
    _, grads = net.loss_and_grads(x, y)
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for p, g in zip(net.params, grads):
        if p is None:
            continue
        for key in ("w", "b"):
            arr, ga = p[key].reshape(-1), g[key].reshape(-1)
            if max_per_tensor is None or arr.size <= max_per_tensor:
                idx = np.arange(arr.size)
            else:
                idx = rng.choice(arr.size, size=max_per_tensor, replace=False)
            for j in idx:
                orig = arr[j]
                arr[j] = orig + epsilon
                lp = net.loss(x, y)
                arr[j] = orig - epsilon
                lm = net.loss(x, y)
                arr[j] = orig
                gn = (lp - lm) / (2.0 * epsilon)
                err = abs(ga[j] - gn) / max(1.0, abs(ga[j]), abs(gn))
                worst = max(worst, err)
    return worst
