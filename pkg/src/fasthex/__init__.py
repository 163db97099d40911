"""Simulation and control of a synchronized-tilt hexarotor."""

__version__ = "0.1.0"
