"""
Trace schema: CSV headers and their internal column names

The target is the packet count. Twenty-three features accompany it: five
categorical identifiers and eighteen engineered numeric columns.
"""

from typing import Dict, List

TIME_INDEX = "time_index"
LINK_ID = "link_id"
TARGET = "packet_count"

# internal name -> CSV header
HEADERS: Dict[str, str] = {
    "time_index": "Time_index",
    "link_id": "Link_id",
    "eth_dst": "Eth_dst",
    "switch_id": "Switch_id",
    "in_port": "In_port",
    "out_port": "Out_port",
    "packet_count": "Packet_count",
    "byte_count": "Byte_count",
    "tx_packets": "Tx_packets",
    "rx_packets": "Rx_packets",
    "tx_bytes": "Tx_bytes",
    "rx_bytes": "Rx_bytes",
    "tx_bitrate": "Tx_bitrate(Kbps)",
    "rx_bitrate": "Rx_bitrate(Kbps)",
    "bandwidth": "Bandwidth(Kbps)",
    "packet_loss": "Packet_loss",
    "rx_bandwidth_utilization": "Rx_Bandwidth_Utilization",
    "tx_bandwidth_utilization": "Tx_Bandwidth_Utilization",
    "tx_avg_packet_size": "Tx_avg_packet_size",
    "rx_avg_packet_size": "Rx_avg_packet_size",
    "flow_speed": "Flow_speed(Kbps)",
    "bandwidth_efficiency": "Bandwidth_efficiency",
    "flow_speed_log": "Flow_speed(Kbps)_log",
    "bandwidth_efficiency_log": "Bandwidth_efficiency_log",
    "duration_sec": "Duration_sec",
}
COLUMNS_BY_HEADER: Dict[str, str] = {v: k for k, v in HEADERS.items()}

CATEGORICAL: List[str] = ["link_id", "eth_dst", "switch_id", "in_port", "out_port"]
STATIC: List[str] = ["link_id", "eth_dst", "in_port", "out_port"]

NUMERIC_FEATURES: List[str] = [
    "byte_count",
    "tx_packets",
    "rx_packets",
    "tx_bytes",
    "rx_bytes",
    "tx_bitrate",
    "rx_bitrate",
    "bandwidth",
    "packet_loss",
    "rx_bandwidth_utilization",
    "tx_bandwidth_utilization",
    "tx_avg_packet_size",
    "rx_avg_packet_size",
    "flow_speed",
    "bandwidth_efficiency",
    "flow_speed_log",
    "bandwidth_efficiency_log",
    "duration_sec",
]

FEATURES: List[str] = CATEGORICAL + NUMERIC_FEATURES
REQUIRED: List[str] = [TIME_INDEX] + CATEGORICAL + [TARGET] + NUMERIC_FEATURES

# never flagged as outliers: sparse by construction
OUTLIER_EXEMPT: List[str] = ["packet_loss", "bandwidth", "duration_sec"]

# non-negative count / byte columns
COUNT_COLUMNS: List[str] = [
    "packet_count",
    "byte_count",
    "tx_packets",
    "rx_packets",
    "tx_bytes",
    "rx_bytes",
    "packet_loss",
]


def header_for(column: str) -> str:
    return HEADERS.get(column, column)


def column_for(header: str) -> str:
    return COLUMNS_BY_HEADER.get(header, header)
