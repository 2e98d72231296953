"""
Stateful layers for feed-forward stacks

Each layer caches what its backward pass needs during forward, so one
forward must be followed by at most one backward before the next forward.
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..common.rng import RngStream
from . import functional as F
from .parameter import Parameter


class Layer(ABC):
    """Abstract base class for layers"""

    @abstractmethod
    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        pass

    @abstractmethod
    def backward(self, dout: np.ndarray) -> np.ndarray:
        pass

    def parameters(self) -> Dict[str, Parameter]:
        return {}


class Linear(Layer):
    """Dense layer x @ W + b"""

    def __init__(self, n_in: int, n_out: int, rng: RngStream, name: str = "linear", init: str = "xavier_uniform"):
        self.name = name
        self.W = Parameter(F.init_weight(n_in, n_out, rng, init), name=f"{name}.W")
        self.b = Parameter(np.zeros((1, n_out)), name=f"{name}.b")
        self._x: Optional[np.ndarray] = None

    def forward(self, x, training=False):
        self._x = np.asarray(x, dtype=np.float64)
        return F.linear_forward(self._x, self.W.value, self.b.value)

    def backward(self, dout):
        dx, dW, db = F.linear_backward(self._x, self.W.value, dout)
        self.W.accumulate(dW)
        self.b.accumulate(db)
        return dx

    def parameters(self):
        return {self.W.name: self.W, self.b.name: self.b}


class Activation(Layer):
    def __init__(self, kind: str):
        if kind not in F.ACTIVATIONS:
            raise ValueError(f"unknown activation '{kind}'")
        self.kind = kind
        self._out: Optional[np.ndarray] = None

    def forward(self, x, training=False):
        self._out = F.activate(x, self.kind)
        return self._out

    def backward(self, dout):
        return F.activate_backward(self.kind, self._out, dout)


class Dropout(Layer):
    """Inverted dropout; identity outside training"""

    def __init__(self, p: float, rng: RngStream):
        self.p = p
        self.rng = rng
        self._mask: Optional[np.ndarray] = None

    def forward(self, x, training=False):
        out, self._mask = F.dropout(x, self.p, training, self.rng, return_mask=True)
        return out

    def backward(self, dout):
        return dout if self._mask is None else dout * self._mask


class Sequential(Layer):
    def __init__(self, layers: Sequence[Layer]):
        self.layers: List[Layer] = list(layers)

    def forward(self, x, training=False):
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def parameters(self):
        params: Dict[str, Parameter] = {}
        for layer in self.layers:
            params.update(layer.parameters())
        return params
