"""Network description, the three depth variants, and forward/backward composition."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .layers import (ShapeError, conv_backward, conv_forward, fc_backward, fc_forward,
                     maxpool_backward, maxpool_forward, relu_backward)

KINDS = ("conv", "maxpool", "fc", "relu", "linear_output")
VARIANTS = ("superficial", "medium", "deep")
KERNEL = 3
POOL = 2


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    filters: int | None = None
    kernel: int | None = None
    pool: int | None = None
    units: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        need = {"conv": ("filters", "kernel"), "maxpool": ("pool",),
                "fc": ("units",), "linear_output": ("units",)}.get(self.kind, ())
        for name in need:
            v = getattr(self, name)
            if v is None or int(v) != v or v < 1:
                raise ValueError(f"{self.kind} layer needs a positive integer {name}")

    @property
    def has_params(self) -> bool:
        return self.kind in ("conv", "fc", "linear_output")


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    layers: tuple[LayerSpec, ...]
    input_window: int
    input_channels: int = 3
    output_dim: int = 3

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        self.shapes()

    def shapes(self) -> list[tuple[int, ...]]:
        """Per-layer output shapes (unbatched); raises ShapeError if the window is too small."""
        shape: tuple[int, ...] = (self.input_window, self.input_channels)
        out = []
        for i, layer in enumerate(self.layers):
            if layer.kind == "conv":
                if len(shape) != 2:
                    raise ShapeError(f"layer {i}: conv after flatten")
                if layer.kernel > shape[0]:
                    raise ShapeError(f"layer {i}: kernel {layer.kernel} exceeds time extent {shape[0]}"
                                     f" (input_window {self.input_window} too small)")
                shape = (shape[0], layer.filters)
            elif layer.kind == "maxpool":
                if len(shape) != 2 or layer.pool > shape[0]:
                    raise ShapeError(f"layer {i}: pool {layer.pool} exceeds time extent "
                                     f"(input_window {self.input_window} too small)")
                shape = (shape[0] // layer.pool, shape[1])
            elif layer.kind in ("fc", "linear_output"):
                shape = (layer.units,)
            out.append(shape)
        if not self.layers or self.layers[-1].kind != "linear_output" \
                or self.layers[-1].units != self.output_dim:
            raise ShapeError("network must end in a linear_output layer of output_dim units")
        return out


def _conv(f):
    return [LayerSpec("conv", filters=f, kernel=KERNEL), LayerSpec("relu")]


def _fc(u):
    return [LayerSpec("fc", units=u), LayerSpec("relu")]


_POOL = [LayerSpec("maxpool", pool=POOL)]


def build_variant(name: str, input_window: int = 32) -> NetworkSpec:
    """One of the three depth variants, with a linear 3-unit regression head."""
    if name == "superficial":
        body = _conv(32) + _POOL + _conv(64) + _POOL + _fc(128)
    elif name == "medium":
        body = _conv(32) + _conv(64) + _POOL + _conv(128) + _conv(256) + _POOL + _fc(512) + _fc(256)
    elif name == "deep":
        body = (_conv(32) + _conv(64) + _POOL + _conv(128) + _conv(256) + _POOL
                + _conv(512) + _conv(512) + _POOL + _conv(1024) + _conv(1024) + _POOL
                + _fc(1024) + _fc(512) + _fc(256))
    else:
        raise ValueError(f"unknown variant {name!r}; expected one of {VARIANTS}")
    return NetworkSpec(name, tuple(body + [LayerSpec("linear_output", units=3)]), input_window)


@dataclass
class Normalization:
    """Per-channel affine constants: ``z = (x - mean) / std``."""

    input_mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    input_std: np.ndarray = field(default_factory=lambda: np.ones(3))
    target_mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    target_std: np.ndarray = field(default_factory=lambda: np.ones(3))


class Network:
    """Parameters and normalization for a `NetworkSpec`.

    ``params[i]`` is ``{"w": ..., "b": ...}`` for conv/fc/output layers and
    None otherwise. Conv kernels are ``(filters, kernel, channels)``; fc
    weights ``(units, fan_in)`` with fan-in ordered time-major.
    """

    def __init__(self, spec: NetworkSpec, params=None, norm: Normalization | None = None):
        self.spec = spec
        self.params = params if params is not None else self._zeros()
        self.norm = norm or Normalization()

    @classmethod
    def initialize(cls, spec: NetworkSpec, seed: int) -> "Network":
        """He-scaled uniform weights, zero biases, drawn from PCG64(seed)."""
        net = cls(spec)
        rng = np.random.Generator(np.random.PCG64(seed))
        for p in net.params:
            if p is None:
                continue
            w = p["w"]
            fan_in = int(np.prod(w.shape[1:]))
            lim = np.sqrt(6.0 / fan_in)
            p["w"] = rng.uniform(-lim, lim, size=w.shape)
        return net

    def _zeros(self):
        params = []
        shape = (self.spec.input_window, self.spec.input_channels)
        for layer, out in zip(self.spec.layers, self.spec.shapes()):
            if layer.kind == "conv":
                params.append({"w": np.zeros((layer.filters, layer.kernel, shape[1])),
                               "b": np.zeros(layer.filters)})
            elif layer.kind in ("fc", "linear_output"):
                params.append({"w": np.zeros((layer.units, int(np.prod(shape)))),
                               "b": np.zeros(layer.units)})
            else:
                params.append(None)
            shape = out
        return params

    def copy(self) -> "Network":
        return Network(self.spec, copy.deepcopy(self.params), copy.deepcopy(self.norm))

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, p in enumerate(self.params):
            if p is not None:
                out += [(f"{i}.w", p["w"]), (f"{i}.b", p["b"])]
        return out

    @property
    def n_parameters(self) -> int:
        return sum(a.size for _, a in self.named_parameters())

    def _check_input(self, x):
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 2
        if squeeze:
            x = x[None]
        want = (self.spec.input_window, self.spec.input_channels)
        if x.ndim != 3 or x.shape[1:] != want:
            raise ShapeError(f"input shape {x.shape}, expected (batch, {want[0]}, {want[1]})")
        return x, squeeze

    def forward(self, x) -> np.ndarray:
        """Normalized window(s) ``(W, 3)`` or ``(B, W, 3)`` -> output ``(3,)`` or ``(B, 3)``."""
        x, squeeze = self._check_input(x)
        out, _ = self._forward(x, keep=False)
        return out[0] if squeeze else out

    def _forward(self, x, keep=True):
        caches = []
        h = x
        for layer, p in zip(self.spec.layers, self.params):
            if layer.kind == "conv":
                h, cols = conv_forward(h, p["w"], p["b"], return_cols=True)
                cache = cols
            elif layer.kind == "maxpool":
                shape = h.shape
                h, idx = maxpool_forward(h, layer.pool, return_index=True)
                cache = (idx, shape)
            elif layer.kind == "relu":
                cache = h
                h = np.maximum(h, 0.0)
            else:
                shape = h.shape
                h = h.reshape(shape[0], -1)
                cache = (h, shape)
                h = fc_forward(h, p["w"], p["b"])
            caches.append(cache if keep else None)
        return h, caches

    def _backward(self, caches, grad):
        grads = [None] * len(self.params)
        for i in range(len(self.params) - 1, -1, -1):
            layer, p, cache = self.spec.layers[i], self.params[i], caches[i]
            if layer.kind == "conv":
                grad, dw, db = conv_backward(cache, p["w"], grad)
                grads[i] = {"w": dw, "b": db}
            elif layer.kind == "maxpool":
                idx, shape = cache
                grad = maxpool_backward(grad, idx, shape, layer.pool)
            elif layer.kind == "relu":
                grad = relu_backward(cache, grad)
            else:
                h, shape = cache
                dx, dw, db = fc_backward(h, p["w"], grad)
                grads[i] = {"w": dw, "b": db}
                grad = dx.reshape(shape)
        return grads, grad

    def loss_and_grads(self, x, y):
        """Mean squared error over batch and outputs, with parameter gradients."""
        x, _ = self._check_input(x)
        y = np.asarray(y, dtype=float).reshape(x.shape[0], -1)
        out, caches = self._forward(x)
        diff = out - y
        loss = float(np.mean(diff ** 2))
        grads, _ = self._backward(caches, 2.0 * diff / diff.size)
        return loss, grads

    def loss(self, x, y) -> float:
        x, _ = self._check_input(x)
        y = np.asarray(y, dtype=float).reshape(x.shape[0], -1)
        return float(np.mean((self.forward(x) - y) ** 2))

    # raw-unit helpers -------------------------------------------------
    def normalize_inputs(self, windows):
        return (np.asarray(windows, float) - self.norm.input_mean) / self.norm.input_std

    def predict_correction(self, raw_windows) -> np.ndarray:
        """Correction in meters for raw ENU windows."""
        z = self.forward(self.normalize_inputs(raw_windows))
        return z * self.norm.target_std + self.norm.target_mean


def forward(net: Network, window) -> np.ndarray:
    return net.forward(window)
