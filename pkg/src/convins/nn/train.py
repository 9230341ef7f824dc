"""Mini-batch training on mean-squared error."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .network import Network


class TrainingError(RuntimeError):
    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message if epoch is None else f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def as_arrays(dataset):
    """Accept ``(X, Y)`` arrays or a sequence of ``(window, target)`` pairs."""
    if isinstance(dataset, tuple) and len(dataset) == 2 and np.ndim(dataset[0]) == 3:
        x, y = dataset
    else:
        pairs = list(dataset)
        if not pairs:
            raise ValueError("empty dataset")
        x = np.stack([np.asarray(w, float) for w, _ in pairs])
        y = np.stack([np.asarray(t, float) for _, t in pairs])
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).reshape(len(x), -1)
    if len(x) == 0:
        raise ValueError("empty dataset")
    return x, y


@njit(cache=True)
def _adam_kernel(p, g, m, v, lr, b1, b2, eps):
    for i in range(p.size):
        m[i] += (1.0 - b1) * (g[i] - m[i])
        v[i] += (1.0 - b2) * (g[i] * g[i] - v[i])
        p[i] -= lr * m[i] / (math.sqrt(v[i]) + eps)


class _Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg
        self.m = [None if p is None else {k: np.zeros_like(v) for k, v in p.items()} for p in params]
        self.v = [None if p is None else {k: np.zeros_like(v) for k, v in p.items()} for p in params]
        self.t = 0

    def update(self, params, grads):
        c = self.cfg
        self.t += 1
        lr = c.learning_rate * math.sqrt(1 - c.beta2 ** self.t) / (1 - c.beta1 ** self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p is None:
                continue
            for k in p:
                if not p[k].flags.c_contiguous:
                    # the kernel updates through a flat view
                    p[k] = np.ascontiguousarray(p[k])
                _adam_kernel(p[k].reshape(-1), g[k].reshape(-1), m[k].reshape(-1),
                             v[k].reshape(-1), lr, c.beta1, c.beta2, c.epsilon)


class _Sgd:
    def __init__(self, params, cfg: TrainConfig):
        self.lr = cfg.learning_rate

    def update(self, params, grads):
        for p, g in zip(params, grads):
            if p is not None:
                for k in p:
                    p[k] -= self.lr * g[k]


def train(net: Network, dataset, cfg: TrainConfig, callback=None):
    """Fit `net` in place; return ``(net, per-epoch mean training loss)``.

    Shuffling uses PCG64(cfg.seed), so two runs on the same data and
    initial weights are bitwise identical.
    """
    x, y = as_arrays(dataset)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    opt = (_Adam if cfg.optimizer == "adam" else _Sgd)(net.params, cfg)
    history: list[float] = []
    n = len(x)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = net.loss_and_grads(x[idx], y[idx])
            if not math.isfinite(loss):
                raise TrainingError("non-finite loss", epoch)
            total += loss * len(idx)
            opt.update(net.params, grads)
        history.append(total / n)
        if callback is not None:
            callback(epoch, history[-1])
    return net, history
