"""Layer kernels. Activations are laid out ``(batch, time, channels)``.

Every forward accepts an unbatched array as well (leading axis dropped) and
returns the matching rank.
"""

import numpy as np


class ShapeError(ValueError):
    pass


def _batched(x, rank):
    x = np.asarray(x, dtype=float)
    if x.ndim == rank - 1:
        return x[None], True
    if x.ndim != rank:
        raise ShapeError(f"expected rank {rank - 1} or {rank}, got shape {x.shape}")
    return x, False


def _im2col(x, k):
    """(B, T, C) -> (B, T, k*C) with same padding, left pad k // 2."""
    b, t, c = x.shape
    left = k // 2
    xp = np.zeros((b, t + k - 1, c))
    xp[:, left:left + t] = x
    cols = np.empty((b, t, k * c))
    for m in range(k):
        cols[:, :, m * c:(m + 1) * c] = xp[:, m:m + t]
    return cols


def conv_forward(x, kernels, bias, return_cols=False):
    """Same-padded correlation along time.

    ``out[t, f] = sum_{m, c} x[t + m - k//2, c] * kernels[f, m, c] + bias[f]``
    with zeros outside the input. `kernels` is ``(filters, k, channels)``.
    """
    x, squeeze = _batched(x, 3)
    kernels = np.asarray(kernels, dtype=float)
    bias = np.asarray(bias, dtype=float)
    f, k, c = kernels.shape
    if x.shape[2] != c or bias.shape != (f,):
        raise ShapeError(f"conv shapes: input {x.shape}, kernels {kernels.shape}, bias {bias.shape}")
    if k > x.shape[1]:
        raise ShapeError(f"kernel {k} longer than input time extent {x.shape[1]}")
    cols = _im2col(x, k)
    b, t, _ = cols.shape
    out = (cols.reshape(b * t, k * c) @ kernels.reshape(f, k * c).T + bias).reshape(b, t, f)
    out = out[0] if squeeze else out
    return (out, cols) if return_cols else out


def conv_backward(cols, kernels, grad):
    """Gradients w.r.t. input, kernels and bias given the cached im2col matrix."""
    f, k, c = kernels.shape
    b, t, _ = grad.shape
    g2 = grad.reshape(b * t, f)
    dk = (g2.T @ cols.reshape(b * t, k * c)).reshape(f, k, c)
    db = g2.sum(axis=0)
    dcols = (g2 @ kernels.reshape(f, k * c)).reshape(b, t, k * c)
    left = k // 2
    dxp = np.zeros((b, t + k - 1, c))
    for m in range(k):
        dxp[:, m:m + t] += dcols[:, :, m * c:(m + 1) * c]
    return dxp[:, left:left + t], dk, db


def maxpool_forward(x, pool, return_index=False):
    """Non-overlapping max over windows of `pool` samples; the remainder is dropped."""
    x, squeeze = _batched(x, 3)
    b, t, c = x.shape
    if pool < 1 or pool > t:
        raise ShapeError(f"pool {pool} incompatible with time extent {t}")
    tp = t // pool
    xr = x[:, :tp * pool].reshape(b, tp, pool, c)
    idx = np.argmax(xr, axis=2)
    out = np.take_along_axis(xr, idx[:, :, None, :], axis=2)[:, :, 0, :]
    out = out[0] if squeeze else out
    return (out, idx) if return_index else out


def maxpool_backward(grad, idx, input_shape, pool):
    b, t, c = input_shape
    tp = grad.shape[1]
    dx = np.zeros((b, tp, pool, c))
    np.put_along_axis(dx, idx[:, :, None, :], grad[:, :, None, :], axis=2)
    out = np.zeros(input_shape)
    out[:, :tp * pool] = dx.reshape(b, tp * pool, c)
    return out


def fc_forward(x, weights, bias):
    """Affine map ``weights @ x + bias`` on the last axis."""
    x, squeeze = _batched(x, 2)
    weights = np.asarray(weights, dtype=float)
    bias = np.asarray(bias, dtype=float)
    if weights.ndim != 2 or weights.shape[1] != x.shape[1] or bias.shape != (weights.shape[0],):
        raise ShapeError(f"fc shapes: input {x.shape}, weights {weights.shape}, bias {bias.shape}")
    out = x @ weights.T + bias
    return out[0] if squeeze else out


def fc_backward(x, weights, grad):
    return grad @ weights, grad.T @ x, grad.sum(axis=0)


def relu(x):
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def relu_backward(x, grad):
    return grad * (x > 0)
