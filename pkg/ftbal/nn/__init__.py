"""
Minimal differentiable-computation facility

Dense layers, activations, dropout, Adam and a finite-difference oracle.
Everything in forecast/ and agents/ is built from these pieces.
"""

from .functional import (
    activate,
    activate_backward,
    dropout,
    linear_backward,
    linear_forward,
    sigmoid,
    softmax,
    softmax_backward,
)
from .gradcheck import finite_diff_check
from .layers import Activation, Dropout, Layer, Linear, Sequential
from .optim import Adam, adam_step
from .parameter import Parameter, clip_grad_norm, restore, snapshot

__all__ = [
    "activate",
    "activate_backward",
    "dropout",
    "linear_backward",
    "linear_forward",
    "sigmoid",
    "softmax",
    "softmax_backward",
    "finite_diff_check",
    "Activation",
    "Dropout",
    "Layer",
    "Linear",
    "Sequential",
    "Adam",
    "adam_step",
    "Parameter",
    "clip_grad_norm",
    "restore",
    "snapshot",
]
