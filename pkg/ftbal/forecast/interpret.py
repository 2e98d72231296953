"""
Interpretability exports: variable-selection importances, attention
profile over the encoder window and actual-vs-predicted tables
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import DataError
from .tft import TemporalFusionTransformer

logger = logging.getLogger(__name__)

UNTRAINED = "untrained_model"


@dataclass
class ImportanceReport:
    static_importance: pd.DataFrame
    encoder_importance: pd.DataFrame
    decoder_importance: pd.DataFrame
    attention_profile: pd.DataFrame
    untrained: bool = False

    def tables(self) -> Dict[str, pd.DataFrame]:
        return {
            "importance_static": self.static_importance,
            "importance_encoder": self.encoder_importance,
            "importance_decoder": self.decoder_importance,
            "attention_profile": self.attention_profile,
        }

    def export(self, directory: Union[str, Path]) -> Dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name, frame in self.tables().items():
            paths[name] = directory / f"{name}.csv"
            frame.to_csv(paths[name], index=False, float_format="%.17g")
        return paths


def _table(labels: Sequence[str], values: np.ndarray, warning: str) -> pd.DataFrame:
    frame = pd.DataFrame({"variable": list(labels), "importance": values})
    frame["warning"] = warning
    return frame.sort_values("importance", ascending=False, kind="mergesort").reset_index(drop=True)


def export_importance(model: TemporalFusionTransformer, windows, batch_size: int = 256) -> ImportanceReport:
    """
    Mean selection weight per variable for each group (each group sums to 1)
    and mean attention paid to each encoder position by the decoder queries
    """
    if len(windows) == 0:
        raise DataError("importance export needs at least one window")
    untrained = model.epochs_trained == 0
    if untrained:
        logger.warning("Importance: model has not been trained; importances reflect the initialization")

    sums = {"static": 0.0, "encoder": 0.0, "decoder": 0.0, "attention": 0.0}
    for idx in windows.batches(batch_size):
        _, diag = model.predict(windows.subset(idx))
        sums["static"] = sums["static"] + diag["static_weights"].sum(axis=0)
        sums["encoder"] = sums["encoder"] + diag["encoder_weights"].sum(axis=(0, 1))
        sums["decoder"] = sums["decoder"] + diag["decoder_weights"].sum(axis=(0, 1))
        # averaged over heads and queries
        sums["attention"] = sums["attention"] + diag["attention_weights"].mean(axis=(1, 2)).sum(axis=0)

    n = len(windows)
    T_enc, T_dec = windows.enc_len, windows.pred_len
    warning = UNTRAINED if untrained else ""
    static = sums["static"] / n
    encoder = sums["encoder"] / (n * T_enc)
    decoder = sums["decoder"] / (n * T_dec)
    attention = (sums["attention"] / n)[:T_enc]

    profile = pd.DataFrame({"relative_time_index": np.arange(-T_enc, 0), "attention": attention})
    profile["warning"] = warning
    return ImportanceReport(
        static_importance=_table(windows.static_features, static / static.sum(), warning),
        encoder_importance=_table(windows.encoder_features, encoder / encoder.sum(), warning),
        decoder_importance=_table(windows.known_features, decoder / decoder.sum(), warning),
        attention_profile=profile,
        untrained=untrained,
    )


def forecast_frame(
    windows,
    quantile_values: np.ndarray,
    actual: np.ndarray,
    quantiles: Sequence[float],
) -> pd.DataFrame:
    """Long table link_id,time_index,horizon,q10,q50,q90,actual"""
    N, H, Q = quantile_values.shape
    frame = pd.DataFrame(
        {
            "link_id": np.repeat(windows.link_ids.astype(str), H),
            "time_index": (windows.time_index[:, None] + np.arange(H)[None, :]).reshape(-1),
            "horizon": np.tile(np.arange(1, H + 1), N),
        }
    )
    for q, tau in enumerate(quantiles):
        frame[f"q{int(round(tau * 100))}"] = quantile_values[..., q].reshape(-1)
    frame["actual"] = np.asarray(actual).reshape(-1)
    return frame
