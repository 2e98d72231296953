"""
Building blocks of the temporal fusion forecaster with analytic backward passes

Every forward function returns its output together with a cache; the
matching *_backward function consumes the cache. Leading dimensions are
treated as batch dimensions throughout.
"""

from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..errors import ConfigError, DimensionError
from ..nn.functional import sigmoid, softmax, softmax_backward

Cache = Dict[str, np.ndarray]


def _matmul_grad(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Gradient of W for out = a @ W, summed over every leading dimension"""
    return a.reshape(-1, a.shape[-1]).T @ d.reshape(-1, d.shape[-1])


# ---------------------------------------------------------------- gate

def gate(x: np.ndarray, W_g: np.ndarray, b_g: np.ndarray) -> Tuple[np.ndarray, Cache]:
    """sigmoid(x W_g + b_g) * x"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != W_g.shape[0] or W_g.shape[1] != x.shape[-1]:
        raise DimensionError("gate", x.shape, W_g.shape)
    g = sigmoid(x @ W_g + b_g.reshape(-1))
    return g * x, {"x": x, "g": g}


def gate_backward(dout: np.ndarray, cache: Cache, W_g: np.ndarray):
    """Returns (dx, dW_g, db_g)"""
    x, g = cache["x"], cache["g"]
    dpre = dout * x * g * (1.0 - g)
    dx = dout * g + dpre @ W_g.T
    return dx, _matmul_grad(x, dpre), dpre.reshape(-1, dpre.shape[-1]).sum(axis=0, keepdims=True)


# ---------------------------------------------------------------- variable selection

def variable_select(
    embeddings: np.ndarray,
    w_vs: np.ndarray,
    offsets: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, Cache]:
    """
    Softmax-weighted combination of per-variable embeddings

    Args:
        embeddings: [..., n_vars, d]
        w_vs: scoring vector, [d] or [d x 1]
        offsets: additive score terms broadcastable to [..., n_vars]
            (static context and per-variable bias)

    Returns:
        (weights [..., n_vars], combined [..., d], cache)
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim < 2 or embeddings.shape[-2] == 0:
        raise DimensionError("variable_select: empty feature list", embeddings.shape)
    w = np.asarray(w_vs, dtype=np.float64).reshape(-1)
    if w.shape[0] != embeddings.shape[-1]:
        raise DimensionError("variable_select", embeddings.shape, w.shape)
    scores = embeddings @ w
    if offsets is not None:
        scores = scores + offsets
    weights = softmax(scores, axis=-1)
    combined = np.einsum("...n,...nd->...d", weights, embeddings)
    return weights, combined, {"emb": embeddings, "w": w, "weights": weights}


def variable_select_backward(dcombined: np.ndarray, cache: Cache):
    """Returns (d_embeddings, d_w_vs [d x 1], d_scores [..., n_vars])"""
    emb, w, weights = cache["emb"], cache["w"], cache["weights"]
    demb = weights[..., None] * dcombined[..., None, :]
    dweights = np.einsum("...nd,...d->...n", emb, dcombined)
    dscores = softmax_backward(weights, dweights)
    demb = demb + dscores[..., None] * w
    dw = _matmul_grad(dscores[..., None], emb).reshape(-1, 1)
    return demb, dw, dscores


# ---------------------------------------------------------------- attention

def causal_mask(t_q: int, t_k: int) -> np.ndarray:
    """True where query i may not see key j: j > i + (t_k - t_q)"""
    i = np.arange(t_q)[:, None]
    j = np.arange(t_k)[None, :]
    return j > i + (t_k - t_q)


def attention(
    Q: np.ndarray,
    K: np.ndarray,
    V: np.ndarray,
    causal: bool = True,
) -> Tuple[np.ndarray, np.ndarray, Cache]:
    """
    Scaled dot-product attention softmax(Q K^T / sqrt(d_k)) V

    Queries are aligned with the last t_q keys, so with t_q == t_k the
    causal mask is the usual upper triangle.
    """
    Q, K, V = (np.asarray(a, dtype=np.float64) for a in (Q, K, V))
    d_k = Q.shape[-1]
    if d_k == 0:
        raise ConfigError("attention key dimension must be positive")
    if K.shape[-1] != d_k or K.shape[-2] != V.shape[-2]:
        raise DimensionError("attention", Q.shape, K.shape, V.shape)
    t_q, t_k = Q.shape[-2], K.shape[-2]
    scale = 1.0 / np.sqrt(d_k)
    scores = (Q @ np.swapaxes(K, -1, -2)) * scale
    if causal:
        if t_k < t_q:
            raise DimensionError("causal attention needs at least as many keys as queries", Q.shape, K.shape)
        scores = np.where(causal_mask(t_q, t_k), -np.inf, scores)
    weights = softmax(scores, axis=-1)
    out = weights @ V
    return out, weights, {"Q": Q, "K": K, "V": V, "weights": weights, "scale": np.float64(scale)}


def attention_backward(dout: np.ndarray, cache: Cache):
    """Returns (dQ, dK, dV); masked positions receive no gradient"""
    Q, K, V, weights, scale = cache["Q"], cache["K"], cache["V"], cache["weights"], cache["scale"]
    dV = np.swapaxes(weights, -1, -2) @ dout
    dweights = dout @ np.swapaxes(V, -1, -2)
    dscores = softmax_backward(weights, dweights) * scale
    dQ = dscores @ K
    dK = np.swapaxes(dscores, -1, -2) @ Q
    return dQ, dK, dV


# ---------------------------------------------------------------- recurrent cells

GRU_KEYS = ("W_z", "b_z", "W_r", "b_r", "W_h", "b_h")
LSTM_KEYS = ("W_f", "b_f", "W_i", "b_i", "W_c", "b_c", "W_o", "b_o")


def gru_step(h_prev: np.ndarray, x: np.ndarray, params: Mapping[str, np.ndarray]) -> Tuple[np.ndarray, Cache]:
    """
    z = sigmoid([h, x] W_z + b_z)
    r = sigmoid([h, x] W_r + b_r)
    h~ = tanh([r*h, x] W_h + b_h)
    h' = (1 - z) * h + z * h~
    """
    h_prev = np.asarray(h_prev, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    a = np.concatenate([h_prev, x], axis=-1)
    if a.shape[-1] != params["W_z"].shape[0]:
        raise DimensionError("gru_step", a.shape, params["W_z"].shape)
    z = sigmoid(a @ params["W_z"] + params["b_z"].reshape(-1))
    r = sigmoid(a @ params["W_r"] + params["b_r"].reshape(-1))
    a_h = np.concatenate([r * h_prev, x], axis=-1)
    h_tilde = np.tanh(a_h @ params["W_h"] + params["b_h"].reshape(-1))
    h = (1.0 - z) * h_prev + z * h_tilde
    return h, {"h_prev": h_prev, "a": a, "a_h": a_h, "z": z, "r": r, "h_tilde": h_tilde}


def gru_step_backward(dh: np.ndarray, cache: Cache, params: Mapping[str, np.ndarray]):
    """Returns (dh_prev, dx, grads keyed like params)"""
    h_prev, a, a_h = cache["h_prev"], cache["a"], cache["a_h"]
    z, r, h_tilde = cache["z"], cache["r"], cache["h_tilde"]
    n_h = h_prev.shape[-1]

    dz = dh * (h_tilde - h_prev)
    dh_prev = dh * (1.0 - z)
    dpre_h = dh * z * (1.0 - h_tilde * h_tilde)
    da_h = dpre_h @ params["W_h"].T
    drh = da_h[..., :n_h]
    dx = da_h[..., n_h:]
    dh_prev = dh_prev + drh * r
    dpre_r = drh * h_prev * r * (1.0 - r)
    dpre_z = dz * z * (1.0 - z)
    da = dpre_r @ params["W_r"].T + dpre_z @ params["W_z"].T
    dh_prev = dh_prev + da[..., :n_h]
    dx = dx + da[..., n_h:]

    def bias(d):
        return d.reshape(-1, d.shape[-1]).sum(axis=0, keepdims=True)

    grads = {
        "W_z": _matmul_grad(a, dpre_z),
        "b_z": bias(dpre_z),
        "W_r": _matmul_grad(a, dpre_r),
        "b_r": bias(dpre_r),
        "W_h": _matmul_grad(a_h, dpre_h),
        "b_h": bias(dpre_h),
    }
    return dh_prev, dx, grads


def lstm_step(
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    x: np.ndarray,
    params: Mapping[str, np.ndarray],
) -> Tuple[np.ndarray, np.ndarray, Cache]:
    """
    f = sigmoid([h, x] W_f + b_f), i = sigmoid([h, x] W_i + b_i)
    c~ = tanh([h, x] W_c + b_c), c' = f * c + i * c~
    o = sigmoid([h, x] W_o + b_o), h' = o * tanh(c')
    """
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    a = np.concatenate([h_prev, np.asarray(x, dtype=np.float64)], axis=-1)
    if a.shape[-1] != params["W_f"].shape[0]:
        raise DimensionError("lstm_step", a.shape, params["W_f"].shape)
    f = sigmoid(a @ params["W_f"] + params["b_f"].reshape(-1))
    i = sigmoid(a @ params["W_i"] + params["b_i"].reshape(-1))
    c_tilde = np.tanh(a @ params["W_c"] + params["b_c"].reshape(-1))
    o = sigmoid(a @ params["W_o"] + params["b_o"].reshape(-1))
    c = f * c_prev + i * c_tilde
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = {"a": a, "c_prev": c_prev, "f": f, "i": i, "c_tilde": c_tilde, "o": o, "tanh_c": tanh_c}
    return h, c, cache


def lstm_step_backward(dh: np.ndarray, dc: np.ndarray, cache: Cache, params: Mapping[str, np.ndarray]):
    """Returns (dh_prev, dc_prev, dx, grads keyed like params)"""
    a, c_prev = cache["a"], cache["c_prev"]
    f, i, c_tilde, o, tanh_c = cache["f"], cache["i"], cache["c_tilde"], cache["o"], cache["tanh_c"]
    n_h = c_prev.shape[-1]

    do = dh * tanh_c
    dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dpre = {
        "f": dc * c_prev * f * (1.0 - f),
        "i": dc * c_tilde * i * (1.0 - i),
        "c": dc * i * (1.0 - c_tilde * c_tilde),
        "o": do * o * (1.0 - o),
    }
    dc_prev = dc * f
    da = sum(dpre[k] @ params[f"W_{k}"].T for k in ("f", "i", "c", "o"))
    grads = {}
    for k in ("f", "i", "c", "o"):
        grads[f"W_{k}"] = _matmul_grad(a, dpre[k])
        grads[f"b_{k}"] = dpre[k].reshape(-1, n_h).sum(axis=0, keepdims=True)
    return da[..., :n_h], dc_prev, da[..., n_h:], grads
