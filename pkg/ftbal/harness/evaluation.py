"""
Paired policy evaluation

Every policy is rolled out on the same (seed, episode) background
realizations. Rollouts run concurrently in worker threads; results are
aggregated in (policy, seed, episode) order.
"""

import asyncio
import copy
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..agents.scheduling import LinkScheduler
from ..common.rng import derive_seed
from ..network.env import LoadBalancingEnv

logger = logging.getLogger(__name__)

EPISODE_COLUMNS = [
    "seed",
    "episode",
    "step",
    "action",
    "reward",
    "throughput",
    "latency",
    "packet_loss",
    "forecast_source",
    "throughput_raw",
    "latency_raw",
    "packet_loss_raw",
]
METRICS = ("throughput", "latency", "packet_loss")
# metric -> True when larger is better
METRIC_DIRECTION = {"throughput": True, "latency": False, "packet_loss": False}

EnvFactory = Callable[[], LoadBalancingEnv]
SchedulerFactory = Callable[[], LinkScheduler]


def rollout(env: LoadBalancingEnv, scheduler: LinkScheduler, seed: int, episode: int) -> List[Dict[str, object]]:
    """One evaluation episode; one row per step"""
    state = env.reset(derive_seed(seed, "episode", episode))
    scheduler.reset()
    rows = []
    done = False
    step = 0
    while not done:
        action = scheduler.select_link(state)
        state, reward, done, info = env.step(action)
        rows.append(
            {
                "seed": seed,
                "episode": episode,
                "step": step,
                "action": action,
                "reward": reward,
                "throughput": info["norm_throughput"],
                "latency": info["norm_latency"],
                "packet_loss": info["norm_packet_loss"],
                "forecast_source": env.forecast_channel.name,
                "throughput_raw": info["throughput"],
                "latency_raw": info["latency"],
                "packet_loss_raw": info["packet_loss"],
            }
        )
        step += 1
    return rows


def _run_one(env_factory: EnvFactory, scheduler_factory: SchedulerFactory, seed: int, episode: int):
    return rollout(env_factory(), scheduler_factory(), seed, episode)


async def _run_all(jobs):
    return await asyncio.gather(*[asyncio.to_thread(_run_one, *job) for job in jobs])


def evaluation_seeds(root_seed: int, n_seeds: int) -> List[int]:
    return [derive_seed(root_seed, "eval", i) % (2**31) for i in range(n_seeds)]


def run_episodes(
    env_factory: EnvFactory,
    schedulers: Dict[str, SchedulerFactory],
    seeds: Sequence[int],
    episodes: int,
    parallel: bool = True,
) -> Dict[str, pd.DataFrame]:
    """
    Per-step logs for every policy

    Factories must return fresh, unshared objects; each rollout owns its
    env and scheduler.
    """
    jobs, keys = [], []
    for policy, scheduler_factory in schedulers.items():
        for seed in seeds:
            for episode in range(episodes):
                jobs.append((env_factory, scheduler_factory, seed, episode))
                keys.append(policy)

    if parallel:
        results = asyncio.run(_run_all(jobs))
    else:
        results = [_run_one(*job) for job in jobs]

    logs: Dict[str, List[Dict[str, object]]] = {policy: [] for policy in schedulers}
    for policy, rows in zip(keys, results):
        logs[policy].extend(rows)
    return {policy: pd.DataFrame(rows, columns=EPISODE_COLUMNS) for policy, rows in logs.items()}


def summarize_episodes(policy: str, log: pd.DataFrame) -> Dict[str, object]:
    """Mean and std over (seed, episode) of per-episode mean metrics"""
    per_episode = log.groupby(["seed", "episode"], sort=True)[
        list(METRICS) + [f"{m}_raw" for m in METRICS] + ["reward"]
    ].mean()
    row: Dict[str, object] = {"policy": policy, "episodes": int(len(per_episode))}
    for metric in METRICS:
        values = per_episode[metric].to_numpy(dtype=np.float64)
        row[f"{metric}_mean"] = float(values.mean())
        row[f"{metric}_std"] = float(values.std())
        row[f"{metric}_raw_mean"] = float(per_episode[f"{metric}_raw"].mean())
    row["reward_mean"] = float(per_episode["reward"].mean())
    return row


def run_report(logs: Dict[str, pd.DataFrame]) -> pd.DataFrame:
    return pd.DataFrame([summarize_episodes(policy, log) for policy, log in logs.items()])


def ranking_table(report: pd.DataFrame) -> pd.DataFrame:
    """Per metric, policies ordered best first"""
    rows = []
    for metric, higher_better in METRIC_DIRECTION.items():
        ordered = report.sort_values(f"{metric}_mean", ascending=not higher_better, kind="mergesort")
        for rank, (_, r) in enumerate(ordered.iterrows(), start=1):
            rows.append({"metric": metric, "rank": rank, "policy": r["policy"], "value": r[f"{metric}_mean"]})
    return pd.DataFrame(rows)


def isolated(factory: Callable[[], object]) -> Callable[[], object]:
    """Wrap a prototype so each call returns a deep copy"""
    prototype = factory()
    return lambda: copy.deepcopy(prototype)
