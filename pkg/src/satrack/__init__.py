"""Decentralized multi-agent search-and-track simulation."""

__version__ = "0.1.0"
