"""
Deep Q-learning for link selection: epsilon-greedy rollouts, experience
replay, a periodically synced target network and best-episode retention
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..common.checkpoint import load_into, write_checkpoint
from ..common.rng import RngStream, derive_seed
from ..errors import ConfigError, MissingPrerequisiteError, NumericError, TrainingDivergedError
from ..nn.optim import Adam
from ..nn.parameter import restore, snapshot
from .qnet import QNetwork
from .replay_buffer import ReplayBuffer, Transition, TransitionBatch

logger = logging.getLogger(__name__)


class DqnConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    episodes: int = Field(default=1000, ge=1)
    buffer_capacity: int = Field(default=10000, ge=1)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=0.003, gt=0)
    discount: float = Field(default=0.99)
    epsilon_start: float = Field(default=1.0, ge=0, le=1)
    epsilon_end: float = Field(default=0.01, ge=0, le=1)
    epsilon_decay: float = Field(default=0.995, gt=0, le=1)
    target_sync_every: int = Field(default=10, ge=1)
    hidden: List[int] = Field(default_factory=lambda: [128, 128])
    dropout_p: float = Field(default=0.1, ge=0)
    warmup_transitions: int = Field(default=1000, ge=0)
    log_interval: int = Field(default=50, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "DqnConfig":
        if not 0.0 < self.discount <= 1.0:
            raise ConfigError(f"discount must be in (0, 1], got {self.discount}")
        if self.epsilon_end > self.epsilon_start:
            raise ConfigError("epsilon_end must not exceed epsilon_start")
        if self.buffer_capacity < self.batch_size:
            raise ConfigError("buffer_capacity must be at least batch_size")
        if self.dropout_p >= 1.0:
            raise ConfigError(f"dropout_p must be < 1, got {self.dropout_p}")
        return self


def epsilon_at(episode: int, config: Optional[DqnConfig] = None) -> float:
    """max(epsilon_end, epsilon_start * epsilon_decay ** episode)"""
    cfg = config or DqnConfig()
    return max(cfg.epsilon_end, cfg.epsilon_start * cfg.epsilon_decay ** episode)


def select_action(q_values: np.ndarray, epsilon: float, rng: RngStream) -> int:
    """Uniform random action with probability epsilon, else argmax (lowest index on ties)"""
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(f"epsilon must be in [0, 1], got {epsilon}")
    q_values = np.asarray(q_values).reshape(-1)
    # the exploration draw is consumed on every call so the stream stays aligned
    explore = rng.random() < epsilon
    if explore:
        return int(rng.integers(0, q_values.size))
    return int(np.argmax(q_values))


def td_targets(batch: TransitionBatch, target_net: QNetwork, discount: float) -> np.ndarray:
    """r + discount * max_a' Q_target(s', a'), or r on terminal transitions"""
    next_q = target_net.forward(batch.next_states, training=False).max(axis=1)
    return batch.rewards + np.where(batch.dones, 0.0, discount * next_q)


def td_loss(
    batch: TransitionBatch,
    online: QNetwork,
    target_net: QNetwork,
    discount: float,
    training: bool = True,
    backward: bool = True,
) -> float:
    """Mean squared TD error; gradients reach the online network only"""
    targets = td_targets(batch, target_net, discount)
    q = online.forward(batch.states, training)
    rows = np.arange(len(batch))
    diff = q[rows, batch.actions] - targets
    loss = float(np.mean(diff * diff))
    if backward:
        dq = np.zeros_like(q)
        dq[rows, batch.actions] = 2.0 * diff / len(batch)
        online.backward(dq)
    return loss


def sync_target(online: QNetwork, target_net: QNetwork) -> None:
    """Hard copy of every online parameter into the target network"""
    target_net.copy_from(online)


@dataclass
class DqnTrainingResult:
    curves: pd.DataFrame
    action_counts: np.ndarray                 # [episodes x L]
    best_state: Dict[str, np.ndarray] = field(default_factory=dict)
    best_episode: int = 0
    best_reward: float = float("-inf")
    sync_count: int = 0
    train_steps: int = 0

    def action_histogram(self) -> pd.DataFrame:
        totals = self.action_counts.sum(axis=0)
        return pd.DataFrame({"action": np.arange(totals.size), "count": totals.astype(np.int64)})


def build_q_network(state_size: int, n_actions: int, config: DqnConfig, rng: RngStream) -> QNetwork:
    return QNetwork(state_size, n_actions, rng, config.hidden, config.dropout_p)


def train_dqn(env, config: DqnConfig, seed: int = 0) -> Tuple[QNetwork, DqnTrainingResult]:
    """
    Train a policy on env; returns the online network holding the
    best-episode parameters and the training curves

    Raises:
        TrainingDivergedError: non-finite TD loss or gradient
    """
    root = RngStream(seed).child("dqn")
    n_actions = env.n_links
    online = build_q_network(env.state_size, n_actions, config, root.child("online"))
    target_net = build_q_network(env.state_size, n_actions, config, root.child("target"))
    optimizer = Adam(online.parameters().values(), lr=config.learning_rate)
    buffer = ReplayBuffer(config.buffer_capacity)
    act_rng = root.child("act")
    sample_rng = root.child("replay")

    rows: List[Dict[str, float]] = []
    counts = np.zeros((config.episodes, n_actions), dtype=np.int64)
    result = DqnTrainingResult(curves=pd.DataFrame(), action_counts=counts, best_state=snapshot(online.parameters()))

    for episode in range(config.episodes):
        epsilon = epsilon_at(episode, config)
        state = env.reset(derive_seed(seed, "episode", episode)).reshape(-1)
        total_reward = 0.0
        sums = np.zeros(3)
        steps = 0
        done = False
        while not done:
            q = online.forward(state, training=False)[0]
            action = select_action(q, epsilon, act_rng)
            next_state, reward, done, info = env.step(action)
            next_state = next_state.reshape(-1)
            buffer.push(Transition(state, action, reward, next_state, done))
            counts[episode, action] += 1
            total_reward += reward
            sums += (info["norm_throughput"], info["norm_latency"], info["norm_packet_loss"])
            steps += 1
            state = next_state

            if len(buffer) > config.warmup_transitions and len(buffer) >= config.batch_size:
                batch = buffer.sample(config.batch_size, sample_rng)
                optimizer.zero_grad()
                loss = td_loss(batch, online, target_net, config.discount, training=True)
                try:
                    if not np.isfinite(loss):
                        raise NumericError(f"non-finite TD loss at episode {episode}")
                    optimizer.step()
                except NumericError as e:
                    restore(online.parameters(), result.best_state)
                    raise TrainingDivergedError(f"DqnTrainer: {e}", result.best_state, rows) from e
                result.train_steps += 1

        if (episode + 1) % config.target_sync_every == 0:
            sync_target(online, target_net)
            result.sync_count += 1

        means = sums / max(steps, 1)
        rows.append(
            {
                "episode": episode,
                "reward": total_reward,
                "throughput": means[0],
                "latency": means[1],
                "packet_loss": means[2],
                "epsilon": epsilon,
            }
        )
        if total_reward > result.best_reward:
            result.best_reward = total_reward
            result.best_episode = episode
            result.best_state = snapshot(online.parameters())
        if (episode + 1) % config.log_interval == 0:
            logger.info(
                "DqnTrainer: episode %d reward=%.4f epsilon=%.4f buffer=%d",
                episode + 1, total_reward, epsilon, len(buffer),
            )

    restore(online.parameters(), result.best_state)
    result.curves = pd.DataFrame(rows, columns=["episode", "reward", "throughput", "latency", "packet_loss", "epsilon"])
    logger.info("DqnTrainer: best episode %d reward=%.4f", result.best_episode, result.best_reward)
    return online, result


class PolicyMeta(BaseModel):
    model_config = ConfigDict(extra="forbid")

    state_size: int
    n_actions: int
    hidden: List[int]
    dropout_p: float
    best_episode: int = 0
    best_reward: float = 0.0


def save_policy(net: QNetwork, directory: Union[str, Path], config: DqnConfig, result: Optional[DqnTrainingResult] = None) -> Path:
    directory = Path(directory)
    ckpt = write_checkpoint(directory / "dqn.ckpt", "dqn", net.parameters())
    meta = PolicyMeta(
        state_size=net.state_size,
        n_actions=net.n_actions,
        hidden=list(config.hidden),
        dropout_p=config.dropout_p,
        best_episode=result.best_episode if result else 0,
        best_reward=float(result.best_reward) if result else 0.0,
    )
    (directory / "dqn.meta.json").write_text(meta.model_dump_json(indent=2), encoding="utf-8")
    return ckpt


def load_policy(directory: Union[str, Path]) -> QNetwork:
    directory = Path(directory)
    ckpt, meta_path = directory / "dqn.ckpt", directory / "dqn.meta.json"
    if not ckpt.exists() or not meta_path.exists():
        raise MissingPrerequisiteError(ckpt, "train-agent")
    meta = PolicyMeta.model_validate_json(meta_path.read_text(encoding="utf-8"))
    net = QNetwork(meta.state_size, meta.n_actions, RngStream(0), meta.hidden, meta.dropout_p)
    load_into(ckpt, "dqn", net.parameters())
    return net
