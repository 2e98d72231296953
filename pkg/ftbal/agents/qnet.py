"""
Fully connected Q-network
"""

from typing import Dict, Sequence

import numpy as np

from ..common.rng import RngStream
from ..errors import DimensionError
from ..nn.layers import Activation, Dropout, Linear, Sequential
from ..nn.parameter import Parameter, restore, snapshot


class QNetwork:
    """
    dense(L*4 -> 128) + ReLU + dropout -> dense(128 -> 128) + ReLU + dropout
    -> dense(128 -> L); dropout only in training mode
    """

    component = "dqn"

    def __init__(
        self,
        state_size: int,
        n_actions: int,
        rng: RngStream,
        hidden: Sequence[int] = (128, 128),
        dropout_p: float = 0.1,
        init: str = "xavier_uniform",
    ):
        self.state_size = state_size
        self.n_actions = n_actions
        layers = []
        width = state_size
        for i, units in enumerate(hidden):
            layers += [
                Linear(width, units, rng.child("fc", i), name=f"fc{i}", init=init),
                Activation("relu"),
                Dropout(dropout_p, rng.child("dropout", i)),
            ]
            width = units
        layers.append(Linear(width, n_actions, rng.child("out"), name="out", init=init))
        self.net = Sequential(layers)

    def parameters(self) -> Dict[str, Parameter]:
        return self.net.parameters()

    def forward(self, states: np.ndarray, training: bool = False) -> np.ndarray:
        states = np.asarray(states, dtype=np.float64)
        if states.ndim == 1:
            states = states.reshape(1, -1)
        if states.shape[1] != self.state_size:
            raise DimensionError("q_forward", states.shape, (states.shape[0], self.state_size))
        return self.net.forward(states, training)

    def backward(self, dq: np.ndarray) -> None:
        self.net.backward(dq)

    def copy_from(self, other: "QNetwork") -> None:
        restore(self.parameters(), snapshot(other.parameters()))


def q_forward(state: np.ndarray, net: QNetwork, training: bool = False) -> np.ndarray:
    """Q-values [L] for one flattened state"""
    return net.forward(state, training)[0]
