"""
Shared fixtures: small topologies, traces and window sets
"""

import numpy as np
import pytest

from ftbal.common.rng import RngStream
from ftbal.data.synth import SynthProfile, synth_trace
from ftbal.data.windows import make_windows
from ftbal.network.topology import FatTreeTopology, build_fat_tree


@pytest.fixture
def rng():
    return RngStream(1234)


@pytest.fixture
def small_topology():
    """One pod: 2 core-agg, 4 agg-edge and 2 edge-host links"""
    return build_fat_tree(n_core=1, n_agg=2, n_edge=2, hosts_per_edge=1)


@pytest.fixture
def four_links():
    return FatTreeTopology.from_links(
        [("core0", "agg0"), ("core0", "agg1"), ("core1", "agg0"), ("core1", "agg1")]
    )


@pytest.fixture
def small_trace(small_topology):
    return synth_trace(small_topology, 120, SynthProfile(), seed=7)


@pytest.fixture
def small_windows(small_trace):
    return make_windows(small_trace, enc_len=4, pred_len=2, stride=5, known_periods=(24,))


def random_matrix(rng, *shape, scale=1.0):
    return rng.normal(0.0, scale, shape)
