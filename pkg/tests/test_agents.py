"""
Replay buffer, Q-network, TD loss, epsilon schedule and DQN training
"""

import numpy as np
import pytest

from ftbal.agents.dqn import (
    DqnConfig,
    epsilon_at,
    load_policy,
    save_policy,
    select_action,
    sync_target,
    td_loss,
    td_targets,
    train_dqn,
)
from ftbal.agents.qnet import QNetwork
from ftbal.agents.replay_buffer import ReplayBuffer, Transition
from ftbal.agents.scheduling import DqnScheduler
from ftbal.common.rng import RngStream
from ftbal.errors import ConfigError, DataError, DimensionError, MissingPrerequisiteError
from ftbal.network.env import EnvConfig, LoadBalancingEnv, StaticBackground
from ftbal.network.forecast_channel import OracleForecast
from ftbal.nn.gradcheck import finite_diff_check


def _transition(i, state_size=4):
    return Transition(np.full(state_size, float(i)), i % 2, float(i), np.full(state_size, i + 1.0), i % 3 == 0)


class TestReplayBuffer:
    def test_fifo_eviction(self):
        buffer = ReplayBuffer(3)
        for i in range(5):
            buffer.push(_transition(i))
        assert len(buffer) == 3
        assert [t.reward for t in buffer.contents()] == [2.0, 3.0, 4.0]

    def test_capacity_holds_under_interleaving(self, rng):
        buffer = ReplayBuffer(10)
        for i in range(100):
            buffer.push(_transition(i))
            if len(buffer) >= 4:
                buffer.sample(4, rng)
            assert len(buffer) <= 10
        assert [t.reward for t in buffer.contents()] == [float(i) for i in range(90, 100)]

    def test_sample_without_replacement(self, rng):
        buffer = ReplayBuffer(8)
        for i in range(8):
            buffer.push(_transition(i))
        batch = buffer.sample(8, rng)
        assert sorted(batch.rewards.tolist()) == [float(i) for i in range(8)]
        assert batch.states.shape == (8, 4)

    def test_undersized_sample(self, rng):
        buffer = ReplayBuffer(8)
        buffer.push(_transition(0))
        with pytest.raises(DataError):
            buffer.sample(2, rng)

    def test_sampling_is_uniform(self, rng):
        buffer = ReplayBuffer(10)
        for i in range(10):
            buffer.push(_transition(i))
        counts = np.zeros(10)
        for _ in range(10_000):
            counts[int(buffer.sample(1, rng).rewards[0])] += 1
        expected = 10_000 / 10
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        # 99.9th percentile of chi-square with 9 degrees of freedom
        assert chi2 < 27.88

    def test_zero_capacity(self):
        with pytest.raises(ConfigError):
            ReplayBuffer(0)


class TestEpsilon:
    def test_closed_form(self):
        assert epsilon_at(0) == 1.0
        assert epsilon_at(1) == pytest.approx(0.995)
        for e in (10, 100, 500):
            assert epsilon_at(e) == pytest.approx(max(0.01, 0.995 ** e))

    def test_floor_first_reached_at_919(self):
        assert epsilon_at(918) > 0.01
        assert epsilon_at(919) == 0.01

    def test_greedy_ties_break_low(self, rng):
        assert select_action(np.array([1.0, 3.0, 3.0]), 0.0, rng) == 1

    def test_full_exploration_covers_actions(self, rng):
        picks = {select_action(np.zeros(4), 1.0, rng) for _ in range(200)}
        assert picks == {0, 1, 2, 3}

    def test_full_exploration_is_uniform(self, rng):
        counts = np.bincount([select_action(np.zeros(4), 1.0, rng) for _ in range(100_000)], minlength=4)
        assert np.all(np.abs(counts / 100_000 - 0.25) <= 0.01)

    def test_epsilon_range(self, rng):
        with pytest.raises(ConfigError):
            select_action(np.zeros(2), 1.5, rng)


class TestQNetwork:
    def test_output_shape(self, rng):
        net = QNetwork(8, 3, rng, hidden=(16, 16))
        assert net.forward(np.zeros((5, 8))).shape == (5, 3)
        assert net.forward(np.zeros(8)).shape == (1, 3)

    def test_wrong_state_size(self, rng):
        with pytest.raises(DimensionError):
            QNetwork(8, 3, rng).forward(np.zeros((2, 7)))

    def test_eval_mode_is_deterministic(self, rng):
        net = QNetwork(6, 2, rng, hidden=(8,), dropout_p=0.5)
        x = rng.normal(size=(3, 6))
        assert np.array_equal(net.forward(x), net.forward(x))

    def test_sync_copies_every_parameter(self):
        online = QNetwork(4, 2, RngStream(1), hidden=(8,))
        target = QNetwork(4, 2, RngStream(2), hidden=(8,))
        sync_target(online, target)
        for name, p in online.parameters().items():
            assert np.array_equal(p.value, target.parameters()[name].value)


class TestTdLoss:
    def _batch(self, rng, n=6, state_size=4):
        buffer = ReplayBuffer(n)
        for i in range(n):
            buffer.push(
                Transition(rng.normal(size=state_size), int(rng.integers(0, 3)), float(rng.normal()),
                           rng.normal(size=state_size), bool(i % 3 == 0))
            )
        return buffer.sample(n, rng)

    @pytest.mark.parametrize("case", range(20))
    def test_online_gradient(self, case):
        rng = RngStream(300 + case)
        online = QNetwork(4, 3, rng.child("online"), hidden=(6, 5), dropout_p=0.1)
        target = QNetwork(4, 3, rng.child("target"), hidden=(6, 5), dropout_p=0.1)
        batch = self._batch(rng.child("batch"))

        def f(backward):
            return td_loss(batch, online, target, 0.9, training=False, backward=backward)

        assert finite_diff_check(f, online.parameters()) < 1e-4

    def test_target_receives_no_gradient(self):
        rng = RngStream(7)
        online = QNetwork(4, 3, rng.child("online"), hidden=(6,))
        target = QNetwork(4, 3, rng.child("target"), hidden=(6,))
        for p in target.parameters().values():
            p.zero_grad()
        td_loss(self._batch(rng.child("batch")), online, target, 0.9, training=False)
        assert all(np.all(p.grad == 0.0) for p in target.parameters().values())

    def test_terminal_targets_are_rewards(self):
        rng = RngStream(8)
        target = QNetwork(4, 3, rng, hidden=(6,))
        batch = self._batch(rng.child("batch"))
        y = td_targets(batch, target, 0.9)
        assert np.array_equal(y[batch.dones], batch.rewards[batch.dones])


class TestDqnConfig:
    def test_defaults(self):
        config = DqnConfig()
        assert (config.episodes, config.buffer_capacity, config.batch_size) == (1000, 10000, 64)
        assert config.learning_rate == 0.003
        assert config.target_sync_every == 10

    @pytest.mark.parametrize("kwargs", [{"discount": 0.0}, {"buffer_capacity": 8, "batch_size": 16}, {"dropout_p": 1.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            DqnConfig(**kwargs)


def dominant_link_env(four_links):
    """Link 2 is the only link with headroom"""
    config = EnvConfig(history=1, lookahead=1, episode_length=10)
    return LoadBalancingEnv(four_links, config, StaticBackground([9000.0, 9000.0, 1000.0, 9000.0]), OracleForecast())


def toy_config(episodes):
    return DqnConfig(
        episodes=episodes,
        buffer_capacity=2000,
        batch_size=32,
        discount=0.5,
        hidden=[32, 32],
        dropout_p=0.0,
        warmup_transitions=50,
        log_interval=50,
    )


class TestTrainDqn:
    def test_learns_dominant_link(self, four_links):
        env = dominant_link_env(four_links)
        net, result = train_dqn(env, toy_config(150), seed=0)
        scheduler = DqnScheduler(net)
        picks = []
        for episode in range(5):
            state = env.reset(1000 + episode)
            done = False
            while not done:
                action = scheduler.select_link(state)
                picks.append(action)
                state, _, done, _ = env.step(action)
        assert np.mean(np.array(picks) == 2) >= 0.95
        assert result.sync_count == 15
        assert result.train_steps > 0

    def test_curves_and_histogram(self, four_links):
        env = dominant_link_env(four_links)
        _, result = train_dqn(env, toy_config(6), seed=1)
        assert list(result.curves.columns) == ["episode", "reward", "throughput", "latency", "packet_loss", "epsilon"]
        assert len(result.curves) == 6
        histogram = result.action_histogram()
        assert histogram["count"].sum() == 60
        assert histogram["action"].tolist() == [0, 1, 2, 3]

    def test_fixed_seed_reproduces_curves(self, four_links):
        a = train_dqn(dominant_link_env(four_links), toy_config(8), seed=4)[1].curves
        b = train_dqn(dominant_link_env(four_links), toy_config(8), seed=4)[1].curves
        assert a.equals(b)

    def test_policy_checkpoint(self, tmp_path, four_links):
        env = dominant_link_env(four_links)
        config = toy_config(2)
        net, result = train_dqn(env, config, seed=2)
        save_policy(net, tmp_path, config, result)
        loaded = load_policy(tmp_path)
        state = env.reset(0).reshape(1, -1)
        assert np.array_equal(loaded.forward(state), net.forward(state))

    def test_missing_policy(self, tmp_path):
        with pytest.raises(MissingPrerequisiteError):
            load_policy(tmp_path)
