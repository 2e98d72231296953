"""
Load-balancing environment over the fat-tree

Each step routes one demand onto the selected link. The observation is an
[L x 4] matrix (throughput, latency, packet_loss, forecast), one row per
link in link order, every entry in [0, 1].
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..common.rng import RngStream, derive_seed
from ..data.synth import SynthProfile, synth_trace
from ..data.trace import Trace
from ..errors import ConfigError, EnvironmentStateError
from .forecast_channel import ForecastChannel, ZeroForecast
from .topology import FatTreeTopology

logger = logging.getLogger(__name__)

STATE_COLUMNS = ("throughput", "latency", "packet_loss", "forecast")
FORECAST_COLUMN = STATE_COLUMNS.index("forecast")
LATENCY_REF_FACTOR = 100.0
MAX_UTILIZATION = 0.99


class RewardWeights(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(default=1.0, ge=0)
    beta: float = Field(default=1.0, ge=0)
    gamma: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _not_all_zero(self) -> "RewardWeights":
        if self.alpha == 0 and self.beta == 0 and self.gamma == 0:
            raise ConfigError("reward weights must not all be zero")
        return self


class EnvConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    demand_per_step: float = Field(default=1500.0, gt=0)
    dynamics: str = Field(default="synthetic", pattern="^(synthetic|trace)$")
    episode_length: int = Field(default=50, ge=1)
    reward: RewardWeights = Field(default_factory=RewardWeights)
    forecast_source: str = Field(default="model", pattern="^(model|oracle|zero)$")
    throughput_ref: Optional[float] = Field(default=None, gt=0)
    history: int = Field(default=24, ge=1)
    lookahead: int = Field(default=12, ge=1)
    max_offset: int = Field(default=144, ge=0)
    interval_sec: float = Field(default=10.0, gt=0)


def reward_of(row: Sequence[float], weights: RewardWeights) -> float:
    """alpha * throughput - beta * latency - gamma * packet_loss of the selected link"""
    return float(weights.alpha * row[0] - weights.beta * row[1] - weights.gamma * row[2])


@dataclass
class LinkMetrics:
    """Raw per-link metrics of one interval"""

    throughput: np.ndarray   # Kbps the demand can get (realized on the selected link)
    latency: np.ndarray      # ms
    packet_loss: np.ndarray  # loss ratio
    utilization: np.ndarray


def link_metrics(load: np.ndarray, background: np.ndarray, demand: float, capacity: np.ndarray, base_latency: np.ndarray) -> LinkMetrics:
    u = load / capacity
    latency = base_latency / (1.0 - np.minimum(u, MAX_UTILIZATION))
    with np.errstate(divide="ignore", invalid="ignore"):
        loss = np.where(u > 1.0, (u - 1.0) / u, 0.0)
    throughput = np.minimum(demand, np.maximum(0.0, capacity - background))
    return LinkMetrics(throughput, latency, loss, u)


# ---------------------------------------------------------------- background traffic

class BackgroundSource(ABC):
    """Per-episode background load per link"""

    @abstractmethod
    def episode(self, seed: int, n_steps: int) -> Tuple[np.ndarray, Optional[Trace], int]:
        """(background [n_steps x L] in Kbps, matching trace or None, first time index)"""
        pass


class SyntheticBackground(BackgroundSource):
    """Fresh synthetic trace per episode; the seed also picks a seasonal offset"""

    def __init__(self, topology: FatTreeTopology, profile: Optional[SynthProfile] = None, max_offset: int = 144):
        self.topology = topology
        self.profile = profile or SynthProfile()
        self.max_offset = max_offset

    def episode(self, seed, n_steps):
        offset = int(RngStream(seed).child("background", "offset").integers(0, self.max_offset + 1))
        trace = synth_trace(self.topology, n_steps + offset, self.profile, derive_seed(seed, "background"))
        trace = trace.with_frame(trace.frame[trace.frame["time_index"] >= offset].copy())
        background = trace.pivot("tx_bitrate", self.topology.link_names).to_numpy(dtype=np.float64)
        return background, trace, offset


class TraceBackground(BackgroundSource):
    """Replays slices of a recorded trace whose link ids are the topology's link names"""

    def __init__(self, topology: FatTreeTopology, trace: Trace):
        missing = sorted(set(topology.link_names) - set(trace.link_ids))
        if missing:
            raise ConfigError(f"trace has no records for links {missing[:5]}")
        self.topology = topology
        self.trace = trace
        self.table = trace.pivot("tx_bitrate", topology.link_names)

    def episode(self, seed, n_steps):
        available = len(self.table)
        if available < n_steps:
            raise ConfigError(f"trace has {available} steps, an episode needs {n_steps}")
        start = int(RngStream(seed).child("background", "offset").integers(0, available - n_steps + 1))
        times = self.table.index.to_numpy()[start:start + n_steps]
        frame = self.trace.frame[self.trace.frame["time_index"].isin(times)].copy()
        background = self.table.iloc[start:start + n_steps].to_numpy(dtype=np.float64)
        return background, self.trace.with_frame(frame), int(times[0])


class StaticBackground(BackgroundSource):
    """Fixed loads: a vector [L] held constant, or a full [T x L] schedule"""

    def __init__(self, loads):
        self.loads = np.asarray(loads, dtype=np.float64)

    def episode(self, seed, n_steps):
        if self.loads.ndim == 1:
            return np.tile(self.loads, (n_steps, 1)), None, 0
        if self.loads.shape[0] < n_steps:
            raise ConfigError(f"static schedule has {self.loads.shape[0]} steps, an episode needs {n_steps}")
        return self.loads[:n_steps].copy(), None, 0


# ---------------------------------------------------------------- environment

class LoadBalancingEnv:
    """
    State k shows the metrics of interval p_k and the forecast for p_k + 1;
    the action chosen on state k is realized in interval p_k + 1.
    """

    def __init__(
        self,
        topology: FatTreeTopology,
        config: EnvConfig,
        background: BackgroundSource,
        forecast_channel: Optional[ForecastChannel] = None,
    ):
        self.topology = topology
        self.config = config
        self.background_source = background
        self.forecast_channel = forecast_channel or ZeroForecast()
        self.capacity = topology.capacities
        self.base_latency = topology.base_latencies
        self.throughput_ref = float(config.throughput_ref or self.capacity.max())
        self.n_links = topology.n_links
        self.background: Optional[np.ndarray] = None
        self.step_count = 0
        self.done = True
        self._row = 0
        self._episode: Optional[Tuple[np.ndarray, Optional[Trace], List[str], int]] = None
        self.state: Optional[np.ndarray] = None

    @property
    def state_size(self) -> int:
        return self.n_links * len(STATE_COLUMNS)

    def inject_forecast(self, channel: ForecastChannel) -> None:
        """Swap the forecast source; the forecast column of the current state is refreshed"""
        self.forecast_channel = channel
        if self._episode is None or self.state is None:
            return
        channel.prepare(*self._episode)
        self.state[:, FORECAST_COLUMN] = self._forecast_column()

    def _forecast_column(self) -> np.ndarray:
        return np.clip(self.forecast_channel.forecast(self._row) / self.capacity, 0.0, 1.0)

    def _observe(self, metrics: LinkMetrics) -> np.ndarray:
        state = np.stack(
            [
                np.clip(metrics.throughput / self.throughput_ref, 0.0, 1.0),
                np.clip(metrics.latency / (LATENCY_REF_FACTOR * self.base_latency), 0.0, 1.0),
                np.clip(metrics.packet_loss, 0.0, 1.0),
                self._forecast_column(),
            ],
            axis=1,
        )
        return state

    def reset(self, seed: int) -> np.ndarray:
        cfg = self.config
        n_steps = cfg.history + cfg.episode_length + cfg.lookahead
        self.background, trace, first_time = self.background_source.episode(seed, n_steps)
        if self.background.shape != (n_steps, self.n_links):
            raise EnvironmentStateError(
                f"background has shape {self.background.shape}, expected {(n_steps, self.n_links)}"
            )
        self._episode = (self.background, trace, self.topology.link_names, first_time)
        self.forecast_channel.prepare(*self._episode)
        self.step_count = 0
        self.done = False
        self._row = cfg.history - 1
        bg = self.background[self._row]
        metrics = link_metrics(bg, bg, cfg.demand_per_step, self.capacity, self.base_latency)
        self.state = self._observe(metrics)
        return self.state.copy()

    def step(self, action: int) -> Tuple[np.ndarray, float, bool, Dict[str, Any]]:
        if self.done:
            raise EnvironmentStateError("step called on a finished episode; call reset first")
        if not isinstance(action, (int, np.integer)) or not 0 <= int(action) < self.n_links:
            raise EnvironmentStateError(f"action {action!r} outside [0, {self.n_links})")
        action = int(action)
        cfg = self.config
        self._row += 1
        bg = self.background[self._row]
        load = bg.copy()
        load[action] += cfg.demand_per_step
        metrics = link_metrics(load, bg, cfg.demand_per_step, self.capacity, self.base_latency)

        self.step_count += 1
        self.done = self.step_count >= cfg.episode_length
        self.state = self._observe(metrics)
        reward = reward_of(self.state[action], cfg.reward)
        info = {
            "action": action,
            "throughput": float(metrics.throughput[action]),
            "latency": float(metrics.latency[action]),
            "packet_loss": float(metrics.packet_loss[action]),
            "utilization": float(metrics.utilization[action]),
            "norm_throughput": float(self.state[action, 0]),
            "norm_latency": float(self.state[action, 1]),
            "norm_packet_loss": float(self.state[action, 2]),
        }
        return self.state.copy(), reward, self.done, info

    def next_background(self) -> np.ndarray:
        """Background of the interval the next action will be realized in"""
        return self.background[self._row + 1].copy()
