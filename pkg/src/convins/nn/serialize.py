"""Model container: ``.npz`` with a JSON header and one array per tensor."""

from __future__ import annotations

import io
import json

import numpy as np

from ..csvio import atomic_write_bytes
from .network import LayerSpec, Network, NetworkSpec, Normalization

FORMAT = "convins-model"
VERSION = 1


def save_network(net: Network, path) -> None:
    header = {
        "format": FORMAT,
        "version": VERSION,
        "name": net.spec.name,
        "input_window": net.spec.input_window,
        "input_channels": net.spec.input_channels,
        "output_dim": net.spec.output_dim,
        "layers": [{k: v for k, v in vars(l).items() if v is not None} for l in net.spec.layers],
    }
    arrays = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)}
    for name in ("input_mean", "input_std", "target_mean", "target_std"):
        arrays[f"norm.{name}"] = getattr(net.norm, name)
    for name, arr in net.named_parameters():
        arrays[f"param.{name}"] = arr
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    atomic_write_bytes(path, buf.getvalue())


def load_network(path) -> Network:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("format") != FORMAT:
            raise ValueError(f"{path}: not a {FORMAT} file")
        if header.get("version") != VERSION:
            raise ValueError(f"{path}: unsupported version {header.get('version')}")
        spec = NetworkSpec(header["name"], tuple(LayerSpec(**l) for l in header["layers"]),
                           header["input_window"], header["input_channels"], header["output_dim"])
        norm = Normalization(*(data[f"norm.{n}"].copy() for n in
                               ("input_mean", "input_std", "target_mean", "target_std")))
        net = Network(spec, norm=norm)
        for i, p in enumerate(net.params):
            if p is not None:
                p["w"] = data[f"param.{i}.w"].copy()
                p["b"] = data[f"param.{i}.b"].copy()
    return net
