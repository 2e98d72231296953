"""
Miniature temporal fusion transformer

Pipeline per window:
    static ids -> embeddings -> static variable selection -> context c
    encoder/decoder inputs -> per-feature embeddings -> variable selection
        (conditioned on c) -> GRU over encoder + decoder steps (h0 = c)
    decoder states attend causally over all states -> dropout -> gate
    -> residual with decoder states -> dense quantile head
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..common.rng import RngStream
from ..errors import ConfigError, DimensionError
from ..nn.functional import dropout, init_weight, linear_backward, linear_forward
from ..nn.parameter import Parameter
from .components import (
    GRU_KEYS,
    _matmul_grad,
    attention,
    attention_backward,
    gate,
    gate_backward,
    gru_step,
    gru_step_backward,
    variable_select,
    variable_select_backward,
)
from .losses import quantile_loss_batch

logger = logging.getLogger(__name__)


class TftConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    hidden_size: int = Field(default=8, ge=1)
    attention_heads: int = Field(default=1, ge=1)
    dropout: float = Field(default=0.1, ge=0.0)
    hidden_continuous_size: int = Field(default=8, ge=1)
    batch_size: int = Field(default=128, ge=1)
    enc_len: int = Field(default=24, ge=1)
    pred_len: int = Field(default=12, ge=1)
    quantiles: List[float] = Field(default_factory=lambda: [0.1, 0.5, 0.9])
    learning_rate: float = Field(default=6.6069345e-5, gt=0.0)
    max_epochs: int = Field(default=64, ge=1)
    log_interval: int = Field(default=2, ge=1)
    init: str = "xavier_uniform"

    @model_validator(mode="after")
    def _check(self) -> "TftConfig":
        if self.hidden_size % self.attention_heads != 0:
            raise ConfigError(
                f"hidden_size {self.hidden_size} is not divisible by attention_heads {self.attention_heads}"
            )
        if self.dropout >= 1.0:
            raise ConfigError(f"dropout must be < 1, got {self.dropout}")
        q = self.quantiles
        if not q or any(not 0.0 < t < 1.0 for t in q) or any(b <= a for a, b in zip(q, q[1:])):
            raise ConfigError(f"quantiles must be strictly increasing in (0, 1), got {q}")
        if 0.5 not in q:
            raise ConfigError("quantiles must contain 0.5")
        return self

    @property
    def median_index(self) -> int:
        return self.quantiles.index(0.5)


class TemporalFusionTransformer:
    """
    Args:
        config: architecture and training hyper-parameters
        n_encoder_features: observed + known inputs per encoder step
        n_known: known inputs per decoder step
        cardinalities: embedding rows per static variable (UNKNOWN included)
        rng: initialization and default dropout stream
    """

    component = "tft"

    def __init__(
        self,
        config: TftConfig,
        n_encoder_features: int,
        n_known: int,
        cardinalities: Sequence[int],
        rng: RngStream,
    ):
        if n_encoder_features < 1 or n_known < 1 or len(cardinalities) < 1:
            raise ConfigError("the forecaster needs encoder features, known features and static variables")
        self.config = config
        self.n_encoder_features = n_encoder_features
        self.n_known = n_known
        self.cardinalities = [int(c) for c in cardinalities]
        self.rng = rng
        self.dropout_rng = rng.child("dropout")
        self.epochs_trained = 0
        self.params: Dict[str, Parameter] = {}
        self._cache: Dict[str, object] = {}
        self._build(rng.child("init"))

    # ------------------------------------------------------------ parameters

    def _add(self, name: str, value: np.ndarray) -> None:
        self.params[name] = Parameter(value, name=name)

    def _build(self, rng: RngStream) -> None:
        H = self.config.hidden_size
        Hc = self.config.hidden_continuous_size
        S = len(self.cardinalities)
        init = self.config.init

        def w(fan_in, fan_out, name):
            return init_weight(fan_in, fan_out, rng.child(name), init)

        for j, card in enumerate(self.cardinalities):
            self._add(f"static.emb{j}", w(card, H, f"static.emb{j}"))
        self._add("static.vsn.w", w(H, 1, "static.vsn.w"))
        self._add("static.vsn.b", np.zeros((1, S)))
        self._add("static.ctx.W", w(H, H, "static.ctx.W"))
        self._add("static.ctx.b", np.zeros((1, H)))

        for part, n in (("enc", self.n_encoder_features), ("dec", self.n_known)):
            self._add(f"{part}.emb.W", w(n, Hc, f"{part}.emb.W"))
            self._add(f"{part}.emb.b", np.zeros((n, Hc)))
            self._add(f"{part}.vsn.w", w(Hc, 1, f"{part}.vsn.w"))
            self._add(f"{part}.vsn.V", w(H, n, f"{part}.vsn.V"))
            self._add(f"{part}.vsn.b", np.zeros((1, n)))

        for gate_name in ("z", "r", "h"):
            self._add(f"gru.W_{gate_name}", w(H + Hc, H, f"gru.W_{gate_name}"))
            self._add(f"gru.b_{gate_name}", np.zeros((1, H)))

        for name in ("W_q", "W_k", "W_v", "W_o"):
            self._add(f"attn.{name}", w(H, H, f"attn.{name}"))
        self._add("gate.W", w(H, H, "gate.W"))
        self._add("gate.b", np.zeros((1, H)))
        Q = len(self.config.quantiles)
        self._add("head.W", w(H, Q, "head.W"))
        self._add("head.b", np.zeros((1, Q)))

    def parameters(self) -> Dict[str, Parameter]:
        return self.params

    def _v(self, name: str) -> np.ndarray:
        return self.params[name].value

    def _gru_params(self) -> Dict[str, np.ndarray]:
        return {k: self._v(f"gru.{k}") for k in GRU_KEYS}

    # ------------------------------------------------------------ forward

    def _check_batch(self, encoder, decoder_known, static) -> None:
        B = encoder.shape[0]
        if encoder.ndim != 3 or encoder.shape[2] != self.n_encoder_features:
            raise DimensionError("tft encoder input", encoder.shape, (B, self.config.enc_len, self.n_encoder_features))
        if decoder_known.ndim != 3 or decoder_known.shape[2] != self.n_known or decoder_known.shape[0] != B:
            raise DimensionError("tft decoder input", decoder_known.shape, (B, self.config.pred_len, self.n_known))
        if static.shape != (B, len(self.cardinalities)):
            raise DimensionError("tft static input", static.shape, (B, len(self.cardinalities)))

    def encode_static(self, static_ids: np.ndarray) -> np.ndarray:
        """Context vector [B x hidden_size] for a batch of static id rows"""
        static_ids = np.atleast_2d(np.asarray(static_ids, dtype=np.int64))
        return self._static_forward(static_ids)[0]

    def _static_forward(self, static_ids: np.ndarray):
        ids = []
        embs = []
        for j, card in enumerate(self.cardinalities):
            col = static_ids[:, j]
            col = np.where((col < 0) | (col >= card), 0, col)
            ids.append(col)
            embs.append(self._v(f"static.emb{j}")[col])
        e = np.stack(embs, axis=1)
        weights, combined, vs_cache = variable_select(e, self._v("static.vsn.w"), self._v("static.vsn.b").reshape(-1))
        c = np.tanh(linear_forward(combined, self._v("static.ctx.W"), self._v("static.ctx.b")))
        return c, {"ids": ids, "weights": weights, "combined": combined, "vs": vs_cache, "c": c}

    def _temporal_select(self, part: str, x: np.ndarray, c: np.ndarray):
        emb = x[..., None] * self._v(f"{part}.emb.W") + self._v(f"{part}.emb.b")
        offsets = (c @ self._v(f"{part}.vsn.V"))[:, None, :] + self._v(f"{part}.vsn.b").reshape(-1)
        weights, combined, vs_cache = variable_select(emb, self._v(f"{part}.vsn.w"), offsets)
        return combined, {"x": x, "weights": weights, "vs": vs_cache}

    def forward(
        self,
        encoder: np.ndarray,
        decoder_known: np.ndarray,
        static: np.ndarray,
        training: bool = False,
        rng: Optional[RngStream] = None,
    ) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """
        Raw quantile predictions [B x pred_len x n_quantiles] and diagnostics

        Diagnostics: static_weights [B x S], encoder_weights [B x T_enc x F_enc],
        decoder_weights [B x T_dec x F_known], attention_weights
        [B x heads x T_dec x (T_enc + T_dec)].
        """
        encoder = np.asarray(encoder, dtype=np.float64)
        decoder_known = np.asarray(decoder_known, dtype=np.float64)
        static = np.asarray(static, dtype=np.int64)
        self._check_batch(encoder, decoder_known, static)
        cfg = self.config
        H = cfg.hidden_size
        T_enc, T_dec = encoder.shape[1], decoder_known.shape[1]

        c, static_cache = self._static_forward(static)
        comb_e, enc_cache = self._temporal_select("enc", encoder, c)
        comb_d, dec_cache = self._temporal_select("dec", decoder_known, c)
        u = np.concatenate([comb_e, comb_d], axis=1)

        gru = self._gru_params()
        h = c
        states = []
        gru_caches = []
        for t in range(u.shape[1]):
            h, step_cache = gru_step(h, u[:, t], gru)
            states.append(h)
            gru_caches.append(step_cache)
        hs = np.stack(states, axis=1)
        h_dec = hs[:, T_enc:]

        Qf = h_dec @ self._v("attn.W_q")
        Kf = hs @ self._v("attn.W_k")
        Vf = hs @ self._v("attn.W_v")
        n_heads = cfg.attention_heads
        d_head = H // n_heads
        head_outs, head_weights, head_caches = [], [], []
        for k in range(n_heads):
            sl = slice(k * d_head, (k + 1) * d_head)
            out_k, weights_k, cache_k = attention(Qf[..., sl], Kf[..., sl], Vf[..., sl], causal=True)
            head_outs.append(out_k)
            head_weights.append(weights_k)
            head_caches.append(cache_k)
        concat = np.concatenate(head_outs, axis=-1)
        attn_out = concat @ self._v("attn.W_o")

        attn_drop, mask = dropout(
            attn_out, cfg.dropout, training, rng or self.dropout_rng, return_mask=True
        )
        gated, gate_cache = gate(attn_drop, self._v("gate.W"), self._v("gate.b"))
        res = gated + h_dec
        flat = res.reshape(-1, H)
        y_hat = linear_forward(flat, self._v("head.W"), self._v("head.b")).reshape(res.shape[0], T_dec, -1)

        self._cache = {
            "static": static_cache,
            "enc": enc_cache,
            "dec": dec_cache,
            "gru": gru_caches,
            "hs": hs,
            "T_enc": T_enc,
            "heads": head_caches,
            "concat": concat,
            "mask": mask,
            "gate": gate_cache,
            "res": res,
        }
        diagnostics = {
            "static_weights": static_cache["weights"],
            "encoder_weights": enc_cache["weights"],
            "decoder_weights": dec_cache["weights"],
            "attention_weights": np.stack(head_weights, axis=1),
        }
        return y_hat, diagnostics

    # ------------------------------------------------------------ backward

    def _acc(self, name: str, grad: np.ndarray) -> None:
        self.params[name].accumulate(grad)

    def _temporal_backward(self, part: str, dcombined: np.ndarray, cache, c: np.ndarray) -> np.ndarray:
        """Accumulates embedding / selection grads; returns d context"""
        demb, dw, dscores = variable_select_backward(dcombined, cache["vs"])
        self._acc(f"{part}.vsn.w", dw)
        self._acc(f"{part}.vsn.b", dscores.sum(axis=(0, 1)).reshape(1, -1))
        d_offset = dscores.sum(axis=1)
        self._acc(f"{part}.vsn.V", c.T @ d_offset)
        x = cache["x"]
        self._acc(f"{part}.emb.W", np.einsum("btf,btfh->fh", x, demb))
        self._acc(f"{part}.emb.b", demb.sum(axis=(0, 1)))
        return d_offset @ self._v(f"{part}.vsn.V").T

    def backward(self, dy_hat: np.ndarray) -> None:
        """Accumulate parameter gradients for the most recent forward"""
        cache = self._cache
        cfg = self.config
        H = cfg.hidden_size
        T_enc = cache["T_enc"]
        res = cache["res"]
        B, T_dec = res.shape[0], res.shape[1]

        dflat, dW, db = linear_backward(res.reshape(-1, H), self._v("head.W"), dy_hat.reshape(B * T_dec, -1))
        self._acc("head.W", dW)
        self._acc("head.b", db)
        dres = dflat.reshape(B, T_dec, H)

        dattn_drop, dW_g, db_g = gate_backward(dres, cache["gate"], self._v("gate.W"))
        self._acc("gate.W", dW_g)
        self._acc("gate.b", db_g)
        mask = cache["mask"]
        dattn_out = dattn_drop if mask is None else dattn_drop * mask

        concat = cache["concat"]
        self._acc("attn.W_o", _matmul_grad(concat, dattn_out))
        dconcat = dattn_out @ self._v("attn.W_o").T

        hs = cache["hs"]
        h_dec = hs[:, T_enc:]
        d_head = H // cfg.attention_heads
        dQf = np.zeros_like(h_dec)
        dKf = np.zeros_like(hs)
        dVf = np.zeros_like(hs)
        for k, head_cache in enumerate(cache["heads"]):
            sl = slice(k * d_head, (k + 1) * d_head)
            dQ, dK, dV = attention_backward(dconcat[..., sl], head_cache)
            dQf[..., sl] = dQ
            dKf[..., sl] = dK
            dVf[..., sl] = dV
        self._acc("attn.W_q", _matmul_grad(h_dec, dQf))
        self._acc("attn.W_k", _matmul_grad(hs, dKf))
        self._acc("attn.W_v", _matmul_grad(hs, dVf))
        dhs = dKf @ self._v("attn.W_k").T + dVf @ self._v("attn.W_v").T
        dhs[:, T_enc:] += dQf @ self._v("attn.W_q").T + dres

        gru = self._gru_params()
        du = np.zeros(hs.shape[:2] + (cfg.hidden_continuous_size,))
        dh_next = np.zeros((B, H))
        for t in reversed(range(hs.shape[1])):
            dh_prev, dx, grads = gru_step_backward(dhs[:, t] + dh_next, cache["gru"][t], gru)
            for k, g in grads.items():
                self._acc(f"gru.{k}", g)
            du[:, t] = dx
            dh_next = dh_prev

        static_cache = cache["static"]
        c = static_cache["c"]
        dc = dh_next
        dc = dc + self._temporal_backward("enc", du[:, :T_enc], cache["enc"], c)
        dc = dc + self._temporal_backward("dec", du[:, T_enc:], cache["dec"], c)

        dc_pre = dc * (1.0 - c * c)
        dcombined, dW_ctx, db_ctx = linear_backward(static_cache["combined"], self._v("static.ctx.W"), dc_pre)
        self._acc("static.ctx.W", dW_ctx)
        self._acc("static.ctx.b", db_ctx)
        demb, dw, dscores = variable_select_backward(dcombined, static_cache["vs"])
        self._acc("static.vsn.w", dw)
        self._acc("static.vsn.b", dscores.sum(axis=0, keepdims=True))
        for j, ids in enumerate(static_cache["ids"]):
            dtable = np.zeros_like(self._v(f"static.emb{j}"))
            np.add.at(dtable, ids, demb[:, j])
            self._acc(f"static.emb{j}", dtable)

    # ------------------------------------------------------------ training protocol

    def loss_and_backward(self, batch, training: bool = True, rng: Optional[RngStream] = None, backward: bool = True) -> float:
        y_hat, _ = self.forward(batch.encoder, batch.decoder_known, batch.static, training, rng)
        loss, dy = quantile_loss_batch(batch.target, y_hat, self.config.quantiles)
        if backward:
            self.backward(dy)
        return loss

    def predict(self, batch) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """Quantiles sorted per horizon, plus diagnostics"""
        y_hat, diagnostics = self.forward(batch.encoder, batch.decoder_known, batch.static, training=False)
        return np.sort(y_hat, axis=-1), diagnostics

    def point_forecast(self, batch) -> np.ndarray:
        return self.predict(batch)[0][..., self.config.median_index]

    def describe(self) -> Dict[str, object]:
        return {
            "n_encoder_features": self.n_encoder_features,
            "n_known": self.n_known,
            "cardinalities": self.cardinalities,
        }
