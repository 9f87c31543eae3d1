"""Multi-connectivity network-coded video streaming simulator."""

__version__ = "0.1.0"
