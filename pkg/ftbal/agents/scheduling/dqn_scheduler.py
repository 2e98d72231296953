import numpy as np

from ..qnet import QNetwork
from .scheduler_interface import LinkScheduler


class DqnScheduler(LinkScheduler):
    """Greedy policy of a trained Q-network"""

    name = "dqn"

    def __init__(self, net: QNetwork):
        self.net = net

    def select_link(self, state: np.ndarray) -> int:
        q = self.net.forward(np.asarray(state).reshape(1, -1), training=False)[0]
        return int(np.argmax(q))
