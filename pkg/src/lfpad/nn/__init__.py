"""Minimal dense-tensor layer library with reverse-mode gradients."""

from .layers import (
    Clamp01,
    Concat,
    Conv2D,
    Dense,
    Flatten,
    LayerInfo,
    MaxPool2x2,
    ReLU,
    Softmax,
    Upsample2x,
    conv2d_forward,
)
from .losses import cross_entropy_loss, mse_loss, nll_loss, softmax
from .network import Network
from .optim import minibatches, sgd_step
from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint

__all__ = [
    "Clamp01",
    "Concat",
    "Conv2D",
    "Dense",
    "Flatten",
    "LayerInfo",
    "MaxPool2x2",
    "Network",
    "ReLU",
    "Softmax",
    "Upsample2x",
    "conv2d_forward",
    "cross_entropy_loss",
    "mse_loss",
    "nll_loss",
    "softmax",
    "sgd_step",
    "minibatches",
    "save_checkpoint",
    "load_checkpoint",
    "read_checkpoint",
]
