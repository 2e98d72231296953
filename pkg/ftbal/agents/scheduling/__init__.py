"""
Link scheduling policies: round robin, weighted round robin and the
greedy DQN policy, behind one interface
"""

from .dqn_scheduler import DqnScheduler
from .factory import create_scheduler
from .round_robin_scheduler import RoundRobinScheduler, RoundRobinState, rr_next
from .scheduler_interface import LinkScheduler
from .weighted_round_robin_scheduler import WeightedRoundRobinScheduler, WeightedRoundRobinState, wrr_next

__all__ = [
    # Base class
    "LinkScheduler",

    # Scheduler implementations
    "RoundRobinScheduler",
    "WeightedRoundRobinScheduler",
    "DqnScheduler",
    "RoundRobinState",
    "WeightedRoundRobinState",
    "rr_next",
    "wrr_next",

    # Factory
    "create_scheduler",
]
