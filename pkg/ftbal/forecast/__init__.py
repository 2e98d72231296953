"""
Temporal fusion forecaster, LSTM baseline, training and evaluation
"""

from .components import (
    attention,
    gate,
    gru_step,
    lstm_step,
    variable_select,
)
from .losses import mse_loss, quantile_loss, quantile_loss_batch
from .lstm import LstmForecaster
from .metrics import MetricReport, eval_metrics, horizon_metrics
from .tft import TemporalFusionTransformer, TftConfig
from .training import TrainingResult, lr_find, train_forecaster

__all__ = [
    "attention",
    "gate",
    "gru_step",
    "lstm_step",
    "variable_select",
    "mse_loss",
    "quantile_loss",
    "quantile_loss_batch",
    "LstmForecaster",
    "MetricReport",
    "eval_metrics",
    "horizon_metrics",
    "TemporalFusionTransformer",
    "TftConfig",
    "TrainingResult",
    "lr_find",
    "train_forecaster",
]
