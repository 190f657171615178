"""Simulation and stability certificates for fractional higher-order BAM networks."""

from __future__ import annotations

__version__ = "0.1.0"
