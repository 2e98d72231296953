from dataclasses import dataclass
from typing import Sequence, Tuple

from ...errors import ConfigError
from .scheduler_interface import LinkScheduler


@dataclass(frozen=True)
class WeightedRoundRobinState:
    # starts before index 0; the first pick of a cycle is the first link holding the maximum weight
    index: int = -1
    current_weight: int = 0


def wrr_next(state: WeightedRoundRobinState, weights: Sequence[int]) -> Tuple[int, WeightedRoundRobinState]:
    """
    Advance the index; each wrap to 0 lowers the current weight by one and
    resets it to max(weights) once it reaches zero. The first link whose
    weight reaches the current weight is selected.
    """
    if not weights or max(weights) <= 0:
        raise ConfigError("weighted round robin needs at least one positive weight")
    n = len(weights)
    top = max(weights)
    index, current = state.index, state.current_weight
    while True:
        index = (index + 1) % n
        if index == 0:
            current -= 1
            if current <= 0:
                current = top
        if weights[index] >= current:
            return index, WeightedRoundRobinState(index, current)


class WeightedRoundRobinScheduler(LinkScheduler):
    """Weighted round-robin scheduler - link i gets weights[i] picks per cycle"""

    name = "wrr"

    def __init__(self, weights: Sequence[int]):
        if any(int(w) != w or w < 1 for w in weights):
            raise ConfigError(f"WRR weights must be integers >= 1, got {list(weights)}")
        self.weights = [int(w) for w in weights]
        self.state = WeightedRoundRobinState()

    def reset(self):
        self.state = WeightedRoundRobinState()

    def select_link(self, state=None) -> int:
        action, self.state = wrr_next(self.state, self.weights)
        return action
