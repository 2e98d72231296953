"""
LSTM baseline: one recurrent layer over the encoder window and a direct
multi-output head predicting every horizon at once
"""

from typing import Dict, Optional

import numpy as np

from ..common.rng import RngStream
from ..errors import DimensionError
from ..nn.functional import init_weight
from ..nn.layers import Linear
from ..nn.parameter import Parameter
from .components import LSTM_KEYS, lstm_step, lstm_step_backward
from .losses import mse_loss


class LstmForecaster:
    component = "lstm"

    def __init__(self, n_features: int, hidden_size: int, pred_len: int, rng: RngStream, init: str = "xavier_uniform"):
        self.n_features = n_features
        self.hidden_size = hidden_size
        self.pred_len = pred_len
        self.epochs_trained = 0
        init_rng = rng.child("init")
        self.params: Dict[str, Parameter] = {}
        for k in LSTM_KEYS:
            name = f"lstm.{k}"
            if k.startswith("W"):
                value = init_weight(hidden_size + n_features, hidden_size, init_rng.child(name), init)
            else:
                value = np.zeros((1, hidden_size))
            self.params[name] = Parameter(value, name=name)
        self.head = Linear(hidden_size, pred_len, init_rng.child("head"), name="head", init=init)
        self.params.update(self.head.parameters())
        self._caches = []

    def parameters(self) -> Dict[str, Parameter]:
        return self.params

    def _lstm_params(self) -> Dict[str, np.ndarray]:
        return {k: self.params[f"lstm.{k}"].value for k in LSTM_KEYS}

    def forward(self, encoder: np.ndarray, training: bool = False) -> np.ndarray:
        """[B x T x F] -> [B x pred_len]"""
        encoder = np.asarray(encoder, dtype=np.float64)
        if encoder.ndim != 3 or encoder.shape[2] != self.n_features:
            raise DimensionError("lstm encoder input", encoder.shape, ("B", "T", self.n_features))
        B = encoder.shape[0]
        h = np.zeros((B, self.hidden_size))
        c = np.zeros((B, self.hidden_size))
        params = self._lstm_params()
        self._caches = []
        for t in range(encoder.shape[1]):
            h, c, cache = lstm_step(h, c, encoder[:, t], params)
            self._caches.append(cache)
        return self.head.forward(h, training)

    def backward(self, dy: np.ndarray) -> None:
        dh = self.head.backward(dy)
        dc = np.zeros_like(dh)
        params = self._lstm_params()
        for cache in reversed(self._caches):
            dh, dc, _, grads = lstm_step_backward(dh, dc, cache, params)
            for k, g in grads.items():
                self.params[f"lstm.{k}"].accumulate(g)

    def loss_and_backward(self, batch, training: bool = True, rng: Optional[RngStream] = None, backward: bool = True) -> float:
        y_hat = self.forward(batch.encoder, training)
        loss, dy = mse_loss(batch.target, y_hat)
        if backward:
            self.backward(dy)
        return loss

    def point_forecast(self, batch) -> np.ndarray:
        return self.forward(batch.encoder, training=False)

    def describe(self) -> Dict[str, object]:
        return {"n_features": self.n_features, "hidden_size": self.hidden_size, "pred_len": self.pred_len}
