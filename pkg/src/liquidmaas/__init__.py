"""Uplink CoMP helper-cell allocation under aperture and backhaul limits."""

__version__ = "0.1.0"
