"""Two-stage multi-radio multi-channel MAC for wireless mesh networks: library and simulator."""

__version__ = "0.1.0"
