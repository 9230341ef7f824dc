"""Strapdown INS simulation and ConvNet depth study for position-error correction."""

__version__ = "0.1.0"
