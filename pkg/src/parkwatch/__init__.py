"""Camera-based parking occupancy: marking, detection, simulation, service."""

__version__ = "0.1.0"
