"""
Differentiable primitives with analytic backward passes

Matrices are float64 numpy arrays. Row vectors are the convention, so a
dense layer computes x @ W + b with W shaped [n_in x n_out].
"""

from typing import Optional, Tuple

import numpy as np

from ..common.rng import RngStream
from ..errors import ConfigError, DimensionError

ACTIVATIONS = ("sigmoid", "tanh", "relu", "softmax_rows", "identity")


def linear_forward(x: np.ndarray, W: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """out[i][j] = sum_k x[i][k] * W[k][j] + bias[0][j]"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0]:
        raise DimensionError("linear_forward", x.shape, W.shape)
    bias = np.asarray(bias, dtype=np.float64).reshape(1, -1)
    if bias.shape[1] != W.shape[1]:
        raise DimensionError("linear_forward bias", bias.shape, W.shape)
    return x @ W + bias


def linear_backward(x: np.ndarray, W: np.ndarray, dout: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dW, dbias) for linear_forward"""
    return dout @ W.T, x.T @ dout, dout.sum(axis=0, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax with max subtraction; -inf entries receive exactly zero weight"""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def activate(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return np.tanh(np.asarray(x, dtype=np.float64))
    if kind == "relu":
        return np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    if kind == "softmax_rows":
        return softmax(x, axis=-1)
    if kind == "identity":
        return np.asarray(x, dtype=np.float64)
    raise ConfigError(f"unknown activation '{kind}'")


def activate_backward(kind: str, out: np.ndarray, dout: np.ndarray, x: Optional[np.ndarray] = None) -> np.ndarray:
    """Gradient w.r.t. the activation input, expressed through its output"""
    if kind == "sigmoid":
        return dout * out * (1.0 - out)
    if kind == "tanh":
        return dout * (1.0 - out * out)
    if kind == "relu":
        return dout * (out > 0.0)
    if kind == "softmax_rows":
        return softmax_backward(out, dout)
    if kind == "identity":
        return dout
    raise ConfigError(f"unknown activation '{kind}'")


def softmax_backward(out: np.ndarray, dout: np.ndarray, axis: int = -1) -> np.ndarray:
    return out * (dout - np.sum(out * dout, axis=axis, keepdims=True))


def dropout_mask(shape, p: float, rng: RngStream) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability p, survivors scaled by 1/(1-p)"""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def dropout(
    x: np.ndarray,
    p: float,
    training: bool,
    rng: Optional[RngStream] = None,
    return_mask: bool = False,
):
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    x = np.asarray(x, dtype=np.float64)
    if not training or p == 0.0:
        mask = None
        out = x
    else:
        if rng is None:
            raise ConfigError("training-mode dropout needs an rng stream")
        mask = dropout_mask(x.shape, p, rng)
        out = x * mask
    return (out, mask) if return_mask else out


def xavier_uniform(fan_in: int, fan_out: int, rng: RngStream) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def xavier_normal(fan_in: int, fan_out: int, rng: RngStream) -> np.ndarray:
    std = np.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, std, size=(fan_in, fan_out))


def init_weight(fan_in: int, fan_out: int, rng: RngStream, scheme: str = "xavier_uniform") -> np.ndarray:
    if scheme == "xavier_uniform":
        return xavier_uniform(fan_in, fan_out, rng)
    if scheme == "xavier_normal":
        return xavier_normal(fan_in, fan_out, rng)
    raise ConfigError(f"unknown init scheme '{scheme}'")
