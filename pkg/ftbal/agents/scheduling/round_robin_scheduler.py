from dataclasses import dataclass
from typing import Tuple

from ...errors import ConfigError
from .scheduler_interface import LinkScheduler


@dataclass(frozen=True)
class RoundRobinState:
    index: int = 0


def rr_next(state: RoundRobinState, n_links: int) -> Tuple[int, RoundRobinState]:
    """Return the current index, then advance it modulo n_links"""
    if n_links < 1:
        raise ConfigError("round robin needs at least one link")
    action = state.index % n_links
    return action, RoundRobinState((action + 1) % n_links)


class RoundRobinScheduler(LinkScheduler):
    """Round-robin scheduler - cycles through links in link order"""

    name = "rr"

    def __init__(self, n_links: int):
        self.n_links = n_links
        self.state = RoundRobinState()

    def reset(self):
        self.state = RoundRobinState()

    def select_link(self, state=None) -> int:
        action, self.state = rr_next(self.state, self.n_links)
        return action
