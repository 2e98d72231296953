"""
Fat-tree topology and the load-balancing environment

The environment lives in ftbal.network.env and is imported from there.
"""

from .topology import FatTreeTopology, LinkDescriptor, build_fat_tree, link_order

__all__ = ["FatTreeTopology", "LinkDescriptor", "build_fat_tree", "link_order"]
