"""
Link scheduling interface
"""

from abc import ABC, abstractmethod

import numpy as np


class LinkScheduler(ABC):
    """Abstract base class for link selection policies"""

    name: str = ""

    @abstractmethod
    def select_link(self, state: np.ndarray) -> int:
        """
        Select the link for the next demand

        Args:
            state: current [L x 4] normalized network state

        Returns:
            Link index in link order
        """
        pass

    def reset(self) -> None:
        """Called at the start of every episode"""
        pass
