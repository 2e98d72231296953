"""
DQN agent and baseline schedulers
"""

from .dqn import (
    DqnConfig,
    DqnTrainingResult,
    epsilon_at,
    load_policy,
    save_policy,
    select_action,
    sync_target,
    td_loss,
    td_targets,
    train_dqn,
)
from .qnet import QNetwork, q_forward
from .replay_buffer import ReplayBuffer, Transition, TransitionBatch

__all__ = [
    "DqnConfig",
    "DqnTrainingResult",
    "load_policy",
    "save_policy",
    "epsilon_at",
    "select_action",
    "sync_target",
    "td_loss",
    "td_targets",
    "train_dqn",
    "QNetwork",
    "q_forward",
    "ReplayBuffer",
    "Transition",
    "TransitionBatch",
]
