"""
Bounded FIFO experience replay
"""

from collections import deque
from dataclasses import dataclass
from typing import Deque, List

import numpy as np

from ..common.rng import RngStream
from ..errors import ConfigError, DataError


@dataclass
class Transition:
    state: np.ndarray       # flattened [L * 4]
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    @classmethod
    def from_transitions(cls, transitions: List[Transition]) -> "TransitionBatch":
        return cls(
            states=np.stack([t.state for t in transitions]),
            actions=np.array([t.action for t in transitions], dtype=np.int64),
            rewards=np.array([t.reward for t in transitions], dtype=np.float64),
            next_states=np.stack([t.next_state for t in transitions]),
            dones=np.array([t.done for t in transitions], dtype=bool),
        )


class ReplayBuffer:
    """Oldest transitions are evicted first once capacity is reached"""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"replay capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._items: Deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def contents(self) -> List[Transition]:
        return list(self._items)

    def sample(self, batch_size: int, rng: RngStream) -> TransitionBatch:
        """Uniform sample without replacement"""
        if batch_size > len(self._items):
            raise DataError(f"cannot sample {batch_size} transitions from a buffer of {len(self._items)}")
        picks = rng.choice(len(self._items), size=batch_size, replace=False)
        return TransitionBatch.from_transitions([self._items[int(i)] for i in picks])
