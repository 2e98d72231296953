"""
ftbal - forecast-driven load balancing for fat-tree software-defined networks
"""

__version__ = "1.0.0"
