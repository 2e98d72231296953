"""
Synthetic per-link traffic traces

Stands in for switch statistics polled from a live fat-tree: a seasonal
packet-count process per link with every other schema column derived
from it consistently.
"""

import logging
from typing import Dict, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..common.rng import RngStream
from ..errors import ConfigError
from ..network.topology import FatTreeTopology
from . import schema
from .trace import Trace

logger = logging.getLogger(__name__)


class SynthProfile(BaseModel):
    """Shape of the synthetic packet-count process (packets per interval)"""

    model_config = ConfigDict(extra="forbid")

    base: float = Field(default=4000.0, ge=0)
    season_amp1: float = Field(default=1500.0, ge=0)
    season_amp2: float = Field(default=800.0, ge=0)
    season_period1: float = Field(default=24.0, gt=0)
    season_period2: float = Field(default=144.0, gt=0)
    ar_phi: float = Field(default=0.8, gt=-1, lt=1)
    noise_std: float = Field(default=250.0, ge=0)
    burst_rate: float = Field(default=0.03, ge=0)
    burst_amp: float = Field(default=3000.0, ge=0)
    capacity_kbps: Optional[float] = Field(default=None, gt=0)
    avg_packet_size: float = Field(default=800.0, gt=0)
    interval_sec: float = Field(default=10.0, gt=0)


def mac_of(node: str) -> str:
    """Stable MAC-like identifier of a topology node"""
    tier_code = {"core": 1, "agg": 2, "edge": 3, "host": 4}
    tier = node.rstrip("0123456789")
    index = int(node[len(tier):])
    return f"00:00:00:{tier_code[tier]:02x}:{index // 256:02x}:{index % 256:02x}"


def _port_numbers(topology: FatTreeTopology) -> Dict[str, Dict[str, int]]:
    """Port of each neighbour on a node: 1-based position in canonical neighbour order"""
    ports: Dict[str, Dict[str, int]] = {}
    for node in topology.graph.nodes():
        neighbours = sorted(topology.graph.neighbors(node))
        ports[node] = {n: i + 1 for i, n in enumerate(neighbours)}
    return ports


def packet_process(profile: SynthProfile, n_steps: int, scale: float, rng: RngStream) -> np.ndarray:
    """Base + two seasonal terms + AR(1) noise + Poisson bursts, clipped at zero"""
    t = np.arange(n_steps, dtype=np.float64)
    seasonal = profile.season_amp1 * np.sin(2.0 * np.pi * t / profile.season_period1)
    seasonal += profile.season_amp2 * np.sin(2.0 * np.pi * t / profile.season_period2)

    shocks = rng.normal(0.0, 1.0, n_steps) * profile.noise_std
    noise = np.zeros(n_steps)
    for i in range(n_steps):
        noise[i] = (profile.ar_phi * noise[i - 1] if i else 0.0) + shocks[i]

    arrivals = rng.poisson(profile.burst_rate, n_steps) if profile.burst_rate > 0 else np.zeros(n_steps)
    bursts = profile.burst_amp * arrivals

    packets = scale * (profile.base + seasonal) + noise + bursts
    return np.rint(np.maximum(packets, 0.0))


def synth_trace(
    topology: FatTreeTopology,
    n_steps: int,
    profile: Optional[SynthProfile] = None,
    seed: int = 0,
) -> Trace:
    """
    Generate a trace for every link of the topology

    Args:
        topology: links to generate traffic for
        n_steps: collection intervals per link
        profile: process shape; defaults to SynthProfile()
        seed: root seed; each link draws from its own child stream

    Returns:
        Trace with every schema column populated
    """
    if n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
    profile = profile or SynthProfile()
    rng = RngStream(seed).child("synth")
    ports = _port_numbers(topology)
    t = np.arange(n_steps, dtype=np.int64)

    frames = []
    for link in topology.links:
        link_rng = rng.child(link.name)
        scale = float(link_rng.uniform(0.3, 1.3))
        size = profile.avg_packet_size * float(link_rng.uniform(0.9, 1.1))
        capacity = float(profile.capacity_kbps or link.capacity)

        packets = packet_process(profile, n_steps, scale, link_rng)
        tx_bytes = packets * size
        tx_bitrate = tx_bytes * 8.0 / 1000.0 / profile.interval_sec
        utilization = np.clip(tx_bitrate / capacity, 0.0, 1.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            loss_ratio = np.where(utilization > 1.0, (utilization - 1.0) / utilization, 0.0)
        packet_loss = np.rint(packets * loss_ratio)
        rx_packets = packets - packet_loss
        rx_bytes = rx_packets * size
        rx_bitrate = rx_bytes * 8.0 / 1000.0 / profile.interval_sec
        flow_speed = rx_bitrate
        efficiency = flow_speed / capacity

        frames.append(
            pd.DataFrame(
                {
                    schema.TIME_INDEX: t,
                    "link_id": link.name,
                    "eth_dst": mac_of(link.dst),
                    "switch_id": link.src,
                    "in_port": str(ports[link.dst][link.src]),
                    "out_port": str(ports[link.src][link.dst]),
                    "packet_count": packets,
                    "byte_count": tx_bytes,
                    "tx_packets": packets,
                    "rx_packets": rx_packets,
                    "tx_bytes": tx_bytes,
                    "rx_bytes": rx_bytes,
                    "tx_bitrate": tx_bitrate,
                    "rx_bitrate": rx_bitrate,
                    "bandwidth": np.full(n_steps, capacity),
                    "packet_loss": packet_loss,
                    "rx_bandwidth_utilization": np.clip(rx_bitrate / capacity, 0.0, 1.5),
                    "tx_bandwidth_utilization": utilization,
                    "tx_avg_packet_size": np.full(n_steps, size),
                    "rx_avg_packet_size": np.full(n_steps, size),
                    "flow_speed": flow_speed,
                    "bandwidth_efficiency": efficiency,
                    "flow_speed_log": np.log1p(flow_speed),
                    "bandwidth_efficiency_log": np.log1p(efficiency),
                    "duration_sec": profile.interval_sec * (t + 1).astype(np.float64),
                }
            )
        )

    trace = Trace(pd.concat(frames, ignore_index=True))
    logger.info("Synth: generated %d steps for %d links (seed %d)", n_steps, topology.n_links, seed)
    return trace
