"""
Configuration models for ftbal experiments

One YAML file, one top-level mapping per section. Every key is optional;
unknown keys are rejected.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .agents.dqn import DqnConfig
from .data.synth import SynthProfile
from .errors import ConfigError
from .forecast.tft import TftConfig
from .network.env import EnvConfig
from .network.topology import DEFAULT_CAPACITY, DEFAULT_LATENCY

logger = logging.getLogger(__name__)

RATE_PROFILES = {"rate500": 1.0, "rate1000": 2.0}


class DatasetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trace: Optional[str] = None
    synth: SynthProfile = Field(default_factory=SynthProfile)
    n_steps: int = Field(default=1440, ge=1)
    cutoff_fraction: float = Field(default=0.8, gt=0, lt=1)
    scaling: str = Field(default="minmax", pattern="^(minmax|zscore)$")
    stride: int = Field(default=1, ge=1)
    extra_columns: List[str] = Field(default_factory=list)
    outlier_window: int = Field(default=9, ge=3)
    outlier_k: float = Field(default=5.0, gt=0)
    known_periods: List[int] = Field(default_factory=lambda: [24, 144])


class TopologyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_core: int = 2
    n_agg: int = 4
    n_edge: int = 8
    hosts_per_edge: int = 2
    capacity: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_CAPACITY))
    base_latency: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_LATENCY))


class ForecasterConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tft: TftConfig = Field(default_factory=TftConfig)
    lstm_hidden: int = Field(default=8, ge=1)
    clip_norm: float = Field(default=1.0, gt=0)
    train_baseline: bool = True
    use_lr_find: bool = False
    lr_find_steps: int = Field(default=100, ge=3)
    max_batches_per_epoch: Optional[int] = Field(default=None, ge=1)
    eval_stride: int = Field(default=1, ge=1)


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    episodes: int = Field(default=1, ge=1)
    n_seeds: int = Field(default=5, ge=1)
    policies: List[str] = Field(default_factory=lambda: ["dqn", "rr", "wrr"])
    parallel: bool = True


class ExperimentConfig(BaseModel):
    """Complete parameterization of one run"""

    model_config = ConfigDict(extra="forbid")

    name: str = "default"
    seed: int = 0
    rate_profile: str = Field(default="rate500", pattern="^(rate500|rate1000)$")
    rate_applied: bool = False
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    topology: TopologyConfig = Field(default_factory=TopologyConfig)
    env: EnvConfig = Field(default_factory=EnvConfig)
    forecaster: ForecasterConfig = Field(default_factory=ForecasterConfig)
    dqn: DqnConfig = Field(default_factory=DqnConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    def effective(self, seed: Optional[int] = None) -> "ExperimentConfig":
        """
        Apply the seed override and the data-rate profile (demand and burst
        amplitude multiplier). Applying twice is a no-op for the profile.
        """
        config = self.model_copy(deep=True)
        if seed is not None:
            config.seed = seed
        if not config.rate_applied:
            factor = RATE_PROFILES[config.rate_profile]
            config.env = config.env.model_copy(update={"demand_per_step": config.env.demand_per_step * factor})
            synth = config.dataset.synth
            config.dataset.synth = synth.model_copy(update={"burst_amp": synth.burst_amp * factor})
            config.rate_applied = True
        return config


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """
    Load an experiment config from YAML; no path gives the defaults

    Raises:
        ConfigError: unreadable YAML, unknown keys or invalid values
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e


def dump_config(config: ExperimentConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
    path.write_text(text, encoding="utf-8")
    return path
