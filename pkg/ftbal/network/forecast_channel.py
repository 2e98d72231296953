"""
Forecast column of the environment state

Each channel is prepared once per episode and then answers, for every
observation time p, the expected background load (Kbps) of every link at
p + 1.
"""

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, Optional, Type, Union

import numpy as np

from ..data import schema
from ..data.scaling import apply_scaler
from ..data.trace import Trace
from ..data.windows import make_windows
from ..errors import ConfigError, EnvironmentStateError
from ..forecast.bundle import load_forecaster

logger = logging.getLogger(__name__)


class ForecastChannel(ABC):
    """Abstract base class for forecast sources"""

    name: str = ""

    @abstractmethod
    def prepare(self, background: np.ndarray, trace: Optional[Trace], link_names, first_time: int) -> None:
        """
        Called at reset with the episode background [T x L] (Kbps), the
        episode trace when one exists, and the time index of row 0
        """
        pass

    @abstractmethod
    def forecast(self, row: int) -> np.ndarray:
        """Expected background [L] at background row `row + 1`"""
        pass


class ZeroForecast(ForecastChannel):
    name = "zero"

    def prepare(self, background, trace, link_names, first_time):
        self._n_links = background.shape[1]

    def forecast(self, row):
        return np.zeros(self._n_links)


class OracleForecast(ForecastChannel):
    """True next-step background"""

    name = "oracle"

    def prepare(self, background, trace, link_names, first_time):
        self._background = background

    def forecast(self, row):
        return self._background[row + 1].copy()


class ModelForecast(ForecastChannel):
    """
    Median one-step-ahead forecast of a trained temporal fusion model,
    converted from packets to Kbps with the link's average packet size
    """

    name = "model"

    def __init__(self, model=None, meta=None, interval_sec: float = 10.0):
        self.model = model
        self.meta = meta
        self.interval_sec = interval_sec
        self._table: Optional[np.ndarray] = None

    def prepare(self, background, trace, link_names, first_time):
        if self.model is None or self.meta is None:
            raise EnvironmentStateError("model forecast source needs a loaded forecaster checkpoint")
        if trace is None:
            raise EnvironmentStateError("model forecast source needs trace-backed background traffic")
        meta = self.meta
        scaler = meta.scaler_obj()
        n_known = len(meta.known_features)
        observed = meta.encoder_features[: len(meta.encoder_features) - n_known]
        cfg = self.model.config
        windows = make_windows(
            apply_scaler(trace, scaler),
            enc_len=cfg.enc_len,
            pred_len=cfg.pred_len,
            encoder=meta.encoder_obj(),
            observed=observed,
            known_periods=meta.known_periods,
        )

        T, L = background.shape
        # fall back to the current background where no window ends at a row
        table = background.copy()
        column = {name: j for j, name in enumerate(link_names)}
        sizes = trace.pivot("tx_avg_packet_size", list(link_names)).to_numpy(dtype=np.float64)
        for start in range(0, len(windows), 512):
            idx = np.arange(start, min(start + 512, len(windows)))
            batch = windows.subset(idx)
            q50 = self.model.point_forecast(batch)[:, 0]
            packets = np.maximum(scaler.inverse_array(q50, schema.TARGET), 0.0)
            rows = batch.time_index - first_time
            cols = np.array([column[str(l)] for l in batch.link_ids])
            kbps = packets * sizes[rows, cols] * 8.0 / 1000.0 / self.interval_sec
            table[rows, cols] = kbps
        self._table = table

    def forecast(self, row):
        return self._table[row + 1].copy()


FORECAST_CHANNELS: Dict[str, Type[ForecastChannel]] = {
    "zero": ZeroForecast,
    "oracle": OracleForecast,
    "model": ModelForecast,
}


def create_forecast_channel(
    source: str,
    model_dir: Optional[Union[str, Path]] = None,
    interval_sec: float = 10.0,
) -> ForecastChannel:
    """
    Factory for forecast channels

    Raises:
        ConfigError: unknown source
        EnvironmentStateError: model source without a checkpoint directory
        MissingPrerequisiteError: the directory holds no forecaster checkpoint
    """
    if source not in FORECAST_CHANNELS:
        raise ConfigError(f"unknown forecast source '{source}', expected one of {list(FORECAST_CHANNELS)}")
    if source != "model":
        return FORECAST_CHANNELS[source]()
    if model_dir is None:
        raise EnvironmentStateError("model forecast source needs a forecaster checkpoint directory")
    model, meta = load_forecaster(model_dir, "tft")
    return ModelForecast(model, meta, interval_sec)
