"""
Pipeline commands

Each command reads the artifacts its predecessors left in the run
directory and writes its own. Missing inputs raise
MissingPrerequisiteError naming the command that produces them.
"""

import logging
from typing import Dict, Optional

import numpy as np
import pandas as pd

from ..agents.dqn import load_policy, save_policy, train_dqn
from ..agents.scheduling import create_scheduler
from ..common.rng import RngStream
from ..config import ExperimentConfig
from ..data import schema
from ..data.cleaning import clean
from ..data.correlation import correlation_matrix
from ..data.scaling import apply_scaler, fit_scaler
from ..data.synth import synth_trace
from ..data.trace import Trace, load_trace, save_trace
from ..data.windows import CategoryEncoder, WindowSet, make_windows, split_by_time
from ..errors import ConfigError, DataError, MissingPrerequisiteError
from ..forecast.bundle import ForecasterMeta, load_forecaster, save_forecaster
from ..forecast.interpret import export_importance, forecast_frame
from ..forecast.lstm import LstmForecaster
from ..forecast.metrics import horizon_metrics
from ..forecast.tft import TemporalFusionTransformer
from ..forecast.training import TrainingResult, lr_find, train_forecaster
from ..network.env import (
    BackgroundSource,
    EnvConfig,
    LoadBalancingEnv,
    SyntheticBackground,
    TraceBackground,
)
from ..network.forecast_channel import create_forecast_channel
from ..network.topology import FatTreeTopology, build_fat_tree, wrr_weights
from .evaluation import evaluation_seeds, isolated, ranking_table, run_episodes, run_report
from .run_directory import RunDirectory

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------- shared

def build_topology(config: ExperimentConfig) -> FatTreeTopology:
    t = config.topology
    return build_fat_tree(t.n_core, t.n_agg, t.n_edge, t.hosts_per_edge, t.capacity, t.base_latency)


def load_cleaned(config: ExperimentConfig, run: RunDirectory) -> Trace:
    path = run.require("data/trace.csv")
    return load_trace(path, config.dataset.extra_columns)


def env_config_for(config: ExperimentConfig) -> EnvConfig:
    """Model forecasts need a full encoder window behind and a horizon ahead"""
    env = config.env
    if env.forecast_source != "model":
        return env
    tft = config.forecaster.tft
    return env.model_copy(update={"history": max(env.history, tft.enc_len), "lookahead": max(env.lookahead, tft.pred_len)})


def build_background(config: ExperimentConfig, run: RunDirectory, topology: FatTreeTopology) -> BackgroundSource:
    if config.env.dynamics == "trace":
        return TraceBackground(topology, load_cleaned(config, run))
    return SyntheticBackground(topology, config.dataset.synth, config.env.max_offset)


def build_env(config: ExperimentConfig, run: RunDirectory, topology: Optional[FatTreeTopology] = None) -> LoadBalancingEnv:
    topology = topology or build_topology(config)
    env_config = env_config_for(config)
    try:
        channel = create_forecast_channel(env_config.forecast_source, run.checkpoints, env_config.interval_sec)
    except MissingPrerequisiteError as e:
        if env_config.forecast_source != "model":
            raise
        logger.warning("Env: %s; falling back to oracle forecasts", e)
        env_config = config.env.model_copy(update={"forecast_source": "oracle"})
        channel = create_forecast_channel("oracle")
    return LoadBalancingEnv(topology, env_config, build_background(config, run, topology), channel)


# ---------------------------------------------------------------- synth

def cmd_synth(config: ExperimentConfig, run: RunDirectory) -> Dict[str, object]:
    """Ingest or synthesize the trace, clean it and export the data products"""
    dataset = config.dataset
    topology = build_topology(config)
    if dataset.trace:
        raw = load_trace(dataset.trace, dataset.extra_columns)
        logger.info("Synth: loaded %d records from %s", len(raw), dataset.trace)
    else:
        raw = synth_trace(topology, dataset.n_steps, dataset.synth, config.seed)

    save_trace(raw, run.data / "raw_trace.csv")
    cleaned = clean(raw, dataset.outlier_window, dataset.outlier_k)
    save_trace(cleaned, run.data / "trace.csv")
    topology.export_csv(run.data / "topology.csv")
    correlation = correlation_matrix(cleaned)
    correlation.export_csv(run.data / "correlation.csv")
    if correlation.degenerate:
        logger.warning("Synth: constant columns in correlation matrix: %s", correlation.degenerate)
    logger.info("Synth: wrote %d records for %d links to %s", len(cleaned), len(cleaned.link_ids), run.data)
    return {"records": len(cleaned), "links": len(cleaned.link_ids)}


# ---------------------------------------------------------------- forecaster

def prepare_windows(config: ExperimentConfig, trace: Trace, scaler=None, encoder=None, eval_stride: bool = False):
    """
    Time split, scaler and dictionaries fit on the training side only.

    Returns (train windows, val windows, scaler, encoder)
    """
    dataset = config.dataset
    tft = config.forecaster.tft
    train_trace, val_trace = split_by_time(trace, dataset.cutoff_fraction)
    scaler = scaler or fit_scaler(train_trace, dataset.scaling)
    encoder = encoder or CategoryEncoder.fit(train_trace)
    val_stride = config.forecaster.eval_stride if eval_stride else dataset.stride

    def windows(part: Trace, stride: int) -> WindowSet:
        return make_windows(
            apply_scaler(part, scaler),
            enc_len=tft.enc_len,
            pred_len=tft.pred_len,
            stride=stride,
            encoder=encoder,
            known_periods=dataset.known_periods,
        )

    train = windows(train_trace, dataset.stride)
    val = windows(val_trace, val_stride)
    if len(train) == 0:
        raise DataError("no training windows; the training split is shorter than enc_len + pred_len")
    return train, val, scaler, encoder


def _history_frame(result: TrainingResult) -> pd.DataFrame:
    return pd.DataFrame(result.history, columns=["epoch", "train_loss", "val_loss", "lr"])


def cmd_train_forecaster(config: ExperimentConfig, run: RunDirectory) -> Dict[str, TrainingResult]:
    """Train the temporal fusion model and, optionally, the LSTM baseline"""
    trace = load_cleaned(config, run)
    train, val, scaler, encoder = prepare_windows(config, trace)
    fc = config.forecaster
    tft_config = fc.tft
    rng = RngStream(config.seed).child("forecaster")
    meta = ForecasterMeta(
        component="tft",
        encoder_features=list(train.encoder_features),
        known_features=list(train.known_features),
        static_features=list(train.static_features),
        known_periods=list(config.dataset.known_periods),
        category_encoder=encoder.to_dict(),
        scaler=scaler.to_dict(),
    )
    cardinalities = [encoder.cardinality(c) for c in train.static_features]
    model = TemporalFusionTransformer(
        tft_config, train.encoder.shape[2], train.decoder_known.shape[2], cardinalities, rng.child("tft")
    )

    learning_rate = tft_config.learning_rate
    if fc.use_lr_find:
        found = lr_find(model, train, steps=fc.lr_find_steps, batch_size=tft_config.batch_size, seed=config.seed)
        pd.DataFrame({"lr": found.lrs, "loss": found.losses, "smoothed": found.smoothed}).to_csv(
            run.logs / "lr_find.csv", index=False, float_format="%.17g"
        )
        learning_rate = found.suggestion

    results: Dict[str, TrainingResult] = {}
    result = train_forecaster(
        model, train, val, learning_rate, tft_config.max_epochs,
        batch_size=tft_config.batch_size, clip_norm=fc.clip_norm, seed=config.seed,
        log_interval=tft_config.log_interval, max_batches=fc.max_batches_per_epoch,
    )
    save_forecaster(model, run.checkpoints, meta.model_copy(update={"best_epoch": result.best_epoch, "best_val_loss": result.best_val_loss}))
    _history_frame(result).to_csv(run.logs / "history_tft.csv", index=False, float_format="%.17g")
    results["tft"] = result

    if fc.train_baseline:
        baseline = LstmForecaster(train.encoder.shape[2], fc.lstm_hidden, tft_config.pred_len, rng.child("lstm"))
        base_result = train_forecaster(
            baseline, train, val, learning_rate, tft_config.max_epochs,
            batch_size=tft_config.batch_size, clip_norm=fc.clip_norm, seed=config.seed,
            log_interval=tft_config.log_interval, max_batches=fc.max_batches_per_epoch,
        )
        save_forecaster(
            baseline, run.checkpoints,
            meta.model_copy(update={"component": "lstm", "best_epoch": base_result.best_epoch, "best_val_loss": base_result.best_val_loss}),
        )
        _history_frame(base_result).to_csv(run.logs / "history_lstm.csv", index=False, float_format="%.17g")
        results["lstm"] = base_result
    return results


def _predict(model, windows: WindowSet, batch_size: int):
    """(quantile forecasts [N x H x Q] or None, median [N x H])"""
    quantiles, medians = [], []
    for start in range(0, len(windows), batch_size):
        batch = windows.subset(np.arange(start, min(start + batch_size, len(windows))))
        if isinstance(model, TemporalFusionTransformer):
            q, _ = model.predict(batch)
            quantiles.append(q)
            medians.append(q[..., model.config.median_index])
        else:
            medians.append(model.point_forecast(batch))
    return (np.concatenate(quantiles) if quantiles else None), np.concatenate(medians)


def cmd_eval_forecaster(config: ExperimentConfig, run: RunDirectory) -> Dict[str, pd.DataFrame]:
    """Validation metrics per horizon, forecast table and interpretability exports"""
    run.require("checkpoints/tft.ckpt")
    model, meta = load_forecaster(run.checkpoints, "tft")
    trace = load_cleaned(config, run)
    scaler, encoder = meta.scaler_obj(), meta.encoder_obj()
    _, val, _, _ = prepare_windows(config, trace, scaler, encoder, eval_stride=True)
    if len(val) == 0:
        raise DataError("no validation windows; the validation split is shorter than enc_len + pred_len")

    out = run.reports / "forecaster"
    out.mkdir(parents=True, exist_ok=True)
    batch_size = config.forecaster.tft.batch_size
    actual_raw = scaler.inverse_array(val.target, schema.TARGET)

    components = {"tft": model}
    if run.has("checkpoints/lstm.ckpt"):
        components["lstm"], _ = load_forecaster(run.checkpoints, "lstm")

    reports: Dict[str, pd.DataFrame] = {}
    for name, m in components.items():
        quantiles, median = _predict(m, val, batch_size)
        report = pd.concat(
            [
                horizon_metrics(val.target, median, "scaled"),
                horizon_metrics(actual_raw, scaler.inverse_array(median, schema.TARGET), "raw"),
            ],
            ignore_index=True,
        )
        report.insert(0, "model", name)
        report.to_csv(out / f"metrics_{name}.csv", index=False, float_format="%.17g")
        reports[name] = report
        overall = report[(report["units"] == "raw") & (report["horizon"] == "all")].iloc[0]
        logger.info("ForecastEval: %s MAE=%.4f R2=%.4f (raw units)", name, overall["mae"], overall["r2"])
        if quantiles is not None:
            raw_q = scaler.inverse_array(quantiles, schema.TARGET)
            forecast_frame(val, raw_q, actual_raw, model.config.quantiles).to_csv(
                out / "forecast.csv", index=False, float_format="%.17g"
            )

    export_importance(model, val, batch_size).export(out)
    return reports


# ---------------------------------------------------------------- agent

def cmd_train_agent(config: ExperimentConfig, run: RunDirectory):
    env = build_env(config, run)
    net, result = train_dqn(env, config.dqn, config.seed)
    save_policy(net, run.checkpoints, config.dqn, result)
    result.curves.to_csv(run.logs / "curves.csv", index=False, float_format="%.17g")
    result.action_histogram().to_csv(run.logs / "action_histogram.csv", index=False)
    logger.info(
        "TrainAgent: %d episodes, %d gradient steps, %d target syncs", len(result.curves), result.train_steps, result.sync_count
    )
    return net, result


# ---------------------------------------------------------------- evaluation

def cmd_evaluate(config: ExperimentConfig, run: RunDirectory) -> pd.DataFrame:
    """Paired RR / WRR / DQN comparison on identical background realizations"""
    policies = list(config.eval.policies)
    unknown = sorted(set(policies) - {"dqn", "rr", "wrr"})
    if unknown:
        raise ConfigError(f"unknown evaluation policies {unknown}")
    topology = build_topology(config)
    net = None
    if "dqn" in policies:
        run.require("checkpoints/dqn.ckpt")
        net = load_policy(run.checkpoints)
    env = build_env(config, run, topology)
    if net is not None and net.state_size != env.state_size:
        raise ConfigError(f"policy expects state size {net.state_size}, environment has {env.state_size}")

    weights = wrr_weights(topology.capacities)
    schedulers = {
        policy: isolated(lambda policy=policy: create_scheduler(policy, topology.n_links, weights, net))
        for policy in policies
    }
    seeds = evaluation_seeds(config.seed, config.eval.n_seeds)
    logs = run_episodes(isolated(lambda: env), schedulers, seeds, config.eval.episodes, config.eval.parallel)

    episodes_dir = run.logs / "episodes"
    episodes_dir.mkdir(parents=True, exist_ok=True)
    for policy, log in logs.items():
        log.to_csv(episodes_dir / f"{policy}.csv", index=False, float_format="%.17g")

    report = run_report(logs)
    report.to_csv(run.reports / "run_report.csv", index=False, float_format="%.17g")
    ranking_table(report).to_csv(run.reports / "ranking.csv", index=False, float_format="%.17g")
    for _, row in report.iterrows():
        logger.info(
            "Evaluate: %s throughput=%.4f latency=%.4f packet_loss=%.4f",
            row["policy"], row["throughput_mean"], row["latency_mean"], row["packet_loss_mean"],
        )
    return report


COMMANDS = {
    "synth": cmd_synth,
    "train-forecaster": cmd_train_forecaster,
    "eval-forecaster": cmd_eval_forecaster,
    "train-agent": cmd_train_agent,
    "evaluate": cmd_evaluate,
}
