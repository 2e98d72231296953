"""
Fat-tree construction, link ordering and WRR weights
"""

import numpy as np
import pytest

from ftbal.errors import ConfigError
from ftbal.network.topology import FatTreeTopology, build_fat_tree, wrr_weights


class TestBuildFatTree:
    def test_default_has_forty_links(self):
        topology = build_fat_tree()
        assert topology.n_links == 40
        pairs = [link.tier_pair for link in topology.links]
        assert pairs.count("core-agg") == 8
        assert pairs.count("agg-edge") == 16
        assert pairs.count("edge-host") == 16

    def test_canonical_order(self):
        topology = build_fat_tree()
        assert topology.link_names[:3] == ["core0-agg0", "core0-agg1", "core0-agg2"]
        assert topology.link(8).name == "agg0-edge0"
        assert topology.link(39).name == "edge7-host15"
        assert [link.link_index for link in topology.links] == list(range(40))

    def test_order_ignores_insertion_order(self):
        links = [("agg1", "edge0"), ("core0", "agg1"), ("edge0", "host0"), ("agg0", "core0")]
        a = FatTreeTopology.from_links(links)
        b = FatTreeTopology.from_links(list(reversed(links)))
        assert a.link_names == b.link_names == ["core0-agg0", "core0-agg1", "agg1-edge0", "edge0-host0"]

    def test_pod_wiring(self):
        topology = build_fat_tree()
        edges_of_agg2 = sorted(n for n in topology.graph.neighbors("agg2") if n.startswith("edge"))
        assert edges_of_agg2 == ["edge4", "edge5", "edge6", "edge7"]

    def test_hosts_connected(self):
        assert build_fat_tree().hosts_connected()

    def test_capacities_follow_tiers(self):
        topology = build_fat_tree()
        assert topology.capacities[0] == 10000.0
        assert topology.capacities[-1] == 5000.0
        assert topology.base_latencies[0] == 2.0

    def test_capacity_override(self):
        topology = build_fat_tree(capacity={"edge-host": 2500.0})
        assert topology.capacities[-1] == 2500.0
        assert topology.capacities[0] == 10000.0

    @pytest.mark.parametrize("kwargs", [{"n_agg": 3}, {"n_edge": 5}, {"n_core": 0}])
    def test_invalid_shapes(self, kwargs):
        with pytest.raises(ConfigError):
            build_fat_tree(**kwargs)

    def test_rejects_tier_skipping_links(self):
        with pytest.raises(ConfigError, match="core0-edge0"):
            FatTreeTopology.from_links([("core0", "edge0")])

    def test_export(self, tmp_path):
        path = build_fat_tree().export_csv(tmp_path / "topology.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "link_index,src,dst,tier_pair,capacity,base_latency"
        assert len(lines) == 41


class TestWrrWeights:
    def test_divides_by_gcd(self):
        assert wrr_weights([10000.0, 10000.0, 5000.0]) == [2, 2, 1]

    def test_default_topology(self):
        weights = wrr_weights(build_fat_tree().capacities)
        assert set(weights) == {1, 2}
        assert weights.count(1) == 16

    def test_rejects_non_positive(self):
        with pytest.raises(ConfigError):
            wrr_weights([0.0, 1.0])
