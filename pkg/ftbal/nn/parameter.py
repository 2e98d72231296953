"""
Trainable parameter container
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping

import numpy as np

from ..errors import DimensionError


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array"""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(name, arr.shape)
    return arr


@dataclass
class Parameter:
    """A weight matrix with its gradient and Adam moments"""

    value: np.ndarray
    name: str = ""
    grad: np.ndarray = field(init=False)
    m: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)
    step: int = field(default=0, init=False)

    def __post_init__(self):
        self.value = as_matrix(self.value, self.name or "parameter").copy()
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def accumulate(self, grad: np.ndarray) -> None:
        if grad.shape != self.value.shape:
            raise DimensionError(f"gradient for {self.name}", grad.shape, self.value.shape)
        self.grad += grad


ParameterSet = Dict[str, Parameter]


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def snapshot(params: Mapping[str, Parameter]) -> Dict[str, np.ndarray]:
    """Copy of every parameter value, keyed by name"""
    return {name: p.value.copy() for name, p in params.items()}


def restore(params: Mapping[str, Parameter], values: Mapping[str, np.ndarray]) -> None:
    for name, p in params.items():
        if name not in values:
            raise KeyError(f"snapshot has no parameter '{name}'")
        if values[name].shape != p.value.shape:
            raise DimensionError(f"restore {name}", values[name].shape, p.value.shape)
        p.value[...] = values[name]


def global_grad_norm(params: Iterable[Parameter]) -> float:
    return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params)))


def clip_grad_norm(params: Iterable[Parameter], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm; returns the pre-clip norm"""
    params = list(params)
    norm = global_grad_norm(params)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for p in params:
            p.grad *= scale
    return norm
