"""
Fat-tree topology and the link ordering that defines the action space
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from ..errors import ConfigError

logger = logging.getLogger(__name__)

TIERS = ("core", "agg", "edge", "host")
TIER_PAIRS = ("core-agg", "agg-edge", "edge-host")

# capacity in Kbps, base latency in ms
DEFAULT_CAPACITY: Dict[str, float] = {"core-agg": 10000.0, "agg-edge": 10000.0, "edge-host": 5000.0}
DEFAULT_LATENCY: Dict[str, float] = {"core-agg": 2.0, "agg-edge": 1.0, "edge-host": 0.5}

_NODE_RE = re.compile(r"^(core|agg|edge|host)(\d+)$")


def node_tier(node: str) -> Tuple[str, int]:
    match = _NODE_RE.match(node)
    if match is None:
        raise ConfigError(f"node id '{node}' must look like core0, agg1, edge2 or host3")
    return match.group(1), int(match.group(2))


@dataclass(frozen=True)
class LinkDescriptor:
    link_index: int
    src: str
    dst: str
    tier_pair: str
    capacity: float
    base_latency: float

    @property
    def name(self) -> str:
        return f"{self.src}-{self.dst}"


def _canonical(src: str, dst: str) -> Tuple[str, str]:
    """Upper tier first"""
    (ts, _), (td, _) = node_tier(src), node_tier(dst)
    if TIERS.index(ts) > TIERS.index(td):
        return dst, src
    return src, dst


def _sort_key(edge: Tuple[str, str]) -> Tuple[int, int, int]:
    (ts, i), (td, j) = node_tier(edge[0]), node_tier(edge[1])
    pair = f"{ts}-{td}"
    if pair not in TIER_PAIRS:
        raise ConfigError(f"link {edge[0]}-{edge[1]} joins non-adjacent tiers")
    return TIER_PAIRS.index(pair), i, j


class FatTreeTopology:
    """
    Undirected switch/host graph plus its canonical link ordering

    Node attribute `tier` is one of core/agg/edge/host. Edge attributes hold
    capacity and base_latency. Immutable after construction.
    """

    def __init__(self, graph: nx.Graph):
        self.graph = graph
        self.links: List[LinkDescriptor] = link_order(self)

    @classmethod
    def from_links(
        cls,
        links: Iterable[Tuple[str, str]],
        capacity: Dict[str, float] = None,
        base_latency: Dict[str, float] = None,
    ) -> "FatTreeTopology":
        capacity = {**DEFAULT_CAPACITY, **(capacity or {})}
        base_latency = {**DEFAULT_LATENCY, **(base_latency or {})}
        graph = nx.Graph()
        for src, dst in links:
            src, dst = _canonical(src, dst)
            pair = f"{node_tier(src)[0]}-{node_tier(dst)[0]}"
            if pair not in TIER_PAIRS:
                raise ConfigError(f"link {src}-{dst} joins non-adjacent tiers ({pair})")
            for node in (src, dst):
                graph.add_node(node, tier=node_tier(node)[0])
            graph.add_edge(src, dst, capacity=float(capacity[pair]), base_latency=float(base_latency[pair]))
        return cls(graph)

    def __len__(self) -> int:
        return len(self.links)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def nodes_by_tier(self, tier: str) -> List[str]:
        nodes = [n for n, t in self.graph.nodes(data="tier") if t == tier]
        return sorted(nodes, key=lambda n: node_tier(n)[1])

    @property
    def link_names(self) -> List[str]:
        return [link.name for link in self.links]

    @property
    def capacities(self) -> np.ndarray:
        return np.array([link.capacity for link in self.links], dtype=np.float64)

    @property
    def base_latencies(self) -> np.ndarray:
        return np.array([link.base_latency for link in self.links], dtype=np.float64)

    def link(self, index: int) -> LinkDescriptor:
        return self.links[index]

    def hosts_connected(self) -> bool:
        """Every host reaches every other host"""
        hosts = self.nodes_by_tier("host")
        if not hosts:
            return nx.is_connected(self.graph) if self.graph.number_of_nodes() else True
        reachable = nx.node_connected_component(self.graph, hosts[0])
        return all(h in reachable for h in hosts)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "link_index": link.link_index,
                    "src": link.src,
                    "dst": link.dst,
                    "tier_pair": link.tier_pair,
                    "capacity": link.capacity,
                    "base_latency": link.base_latency,
                }
                for link in self.links
            ]
        )

    def export_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path


def link_order(topology: FatTreeTopology) -> List[LinkDescriptor]:
    """
    Canonical link order: core-agg, then agg-edge, then edge-host, each
    sorted by the numeric ids of its endpoints. Independent of insertion order.
    """
    edges = sorted((_canonical(u, v) for u, v in topology.graph.edges()), key=_sort_key)
    links = []
    for index, (src, dst) in enumerate(edges):
        data = topology.graph.edges[src, dst]
        links.append(
            LinkDescriptor(
                link_index=index,
                src=src,
                dst=dst,
                tier_pair=TIER_PAIRS[_sort_key((src, dst))[0]],
                capacity=float(data["capacity"]),
                base_latency=float(data["base_latency"]),
            )
        )
    return links


def build_fat_tree(
    n_core: int = 2,
    n_agg: int = 4,
    n_edge: int = 8,
    hosts_per_edge: int = 2,
    capacity: Dict[str, float] = None,
    base_latency: Dict[str, float] = None,
) -> FatTreeTopology:
    """
    Two-switch-per-pod fat tree

    Pod p holds aggregation switches 2p and 2p+1 and n_edge / (n_agg/2)
    edge switches, wired full bipartite inside the pod. Every core switch
    connects to every aggregation switch.
    """
    if n_core < 1 or n_agg < 2 or n_edge < 1 or hosts_per_edge < 1:
        raise ConfigError("fat tree needs at least one core, two aggregation, one edge switch and one host per edge")
    if n_agg % 2 != 0:
        raise ConfigError(f"n_agg must be even, got {n_agg}")
    n_pods = n_agg // 2
    if n_edge % n_pods != 0:
        raise ConfigError(f"n_edge ({n_edge}) must be divisible by the pod count ({n_pods})")
    edges_per_pod = n_edge // n_pods

    links: List[Tuple[str, str]] = []
    for c in range(n_core):
        for a in range(n_agg):
            links.append((f"core{c}", f"agg{a}"))
    for pod in range(n_pods):
        for a in (2 * pod, 2 * pod + 1):
            for e in range(pod * edges_per_pod, (pod + 1) * edges_per_pod):
                links.append((f"agg{a}", f"edge{e}"))
    for e in range(n_edge):
        for h in range(hosts_per_edge):
            links.append((f"edge{e}", f"host{e * hosts_per_edge + h}"))

    topology = FatTreeTopology.from_links(links, capacity, base_latency)
    logger.info(
        "Topology: built fat tree with %d nodes and %d links",
        topology.graph.number_of_nodes(),
        topology.n_links,
    )
    return topology


def wrr_weights(capacities: Sequence[float]) -> List[int]:
    """Capacity-proportional small integers: capacities divided by their GCD"""
    ints = np.rint(np.asarray(capacities, dtype=np.float64)).astype(np.int64)
    if ints.size == 0 or np.any(ints <= 0):
        raise ConfigError("WRR weights need positive capacities")
    g = int(np.gcd.reduce(ints))
    return [int(v // g) for v in ints]
