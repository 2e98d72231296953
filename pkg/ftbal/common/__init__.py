"""
Shared plumbing: seeded random streams and the checkpoint codec
"""

from .rng import RngStream
from .checkpoint import read_checkpoint, write_checkpoint

__all__ = ["RngStream", "read_checkpoint", "write_checkpoint"]
