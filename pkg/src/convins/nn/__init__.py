"""Minimal double-precision 1-D ConvNet engine with hand-written backward passes."""

from .layers import conv_forward, fc_forward, maxpool_forward, relu
from .network import LayerSpec, Network, NetworkSpec, ShapeError, build_variant
from .train import TrainConfig, TrainingError, train
from .gradcheck import grad_check
from .serialize import load_network, save_network

__all__ = [
    "LayerSpec", "Network", "NetworkSpec", "ShapeError", "TrainConfig", "TrainingError",
    "build_variant", "conv_forward", "fc_forward", "grad_check", "load_network",
    "maxpool_forward", "relu", "save_network", "train",
]
