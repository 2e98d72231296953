from typing import Optional, Sequence

from ...errors import ConfigError
from ..qnet import QNetwork
from .dqn_scheduler import DqnScheduler
from .round_robin_scheduler import RoundRobinScheduler
from .scheduler_interface import LinkScheduler
from .weighted_round_robin_scheduler import WeightedRoundRobinScheduler


def create_scheduler(
    scheduler_type: str,
    n_links: int,
    weights: Optional[Sequence[int]] = None,
    net: Optional[QNetwork] = None,
) -> LinkScheduler:
    """
    Factory function to create scheduler instances

    Args:
        scheduler_type: "rr", "wrr" or "dqn"
        n_links: size of the action space
        weights: WRR weights, one per link
        net: trained Q-network for "dqn"

    Returns:
        LinkScheduler instance
    """
    kind = scheduler_type.lower()
    if kind == "rr":
        return RoundRobinScheduler(n_links)
    if kind == "wrr":
        if weights is None or len(weights) != n_links:
            raise ConfigError("wrr scheduler needs one weight per link")
        return WeightedRoundRobinScheduler(weights)
    if kind == "dqn":
        if net is None:
            raise ConfigError("dqn scheduler needs a trained Q-network")
        return DqnScheduler(net)
    raise ConfigError(f"Unknown scheduler type: {scheduler_type}")
