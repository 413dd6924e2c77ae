"""Inter-flow service-degradation detection for hardware-offloaded traffic."""

__version__ = "0.1.0"
