"""
Adam optimizer
"""

from typing import Iterable

import numpy as np

from ..errors import NumericError
from .parameter import Parameter


def require_finite_grads(params: Iterable[Parameter]) -> None:
    """Raises NumericError before any parameter is touched"""
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise NumericError(f"non-finite gradient in parameter '{p.name}'")


def _adam_update(param: Parameter, lr: float, beta1: float, beta2: float, eps: float) -> Parameter:
    param.step += 1
    param.m = beta1 * param.m + (1.0 - beta1) * param.grad
    param.v = beta2 * param.v + (1.0 - beta2) * param.grad * param.grad
    m_hat = param.m / (1.0 - beta1 ** param.step)
    v_hat = param.v / (1.0 - beta2 ** param.step)
    param.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return param


def adam_step(
    param: Parameter,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Parameter:
    """One bias-corrected Adam update of param in place"""
    require_finite_grads([param])
    return _adam_update(param, lr, beta1, beta2, eps)


class Adam:
    """Adam over a fixed set of parameters; a non-finite gradient anywhere aborts the whole step"""

    def __init__(self, params: Iterable[Parameter], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self) -> None:
        require_finite_grads(self.params)
        for p in self.params:
            _adam_update(p, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


def sgd_step(param: Parameter, lr: float) -> Parameter:
    require_finite_grads([param])
    param.value -= lr * param.grad
    return param
