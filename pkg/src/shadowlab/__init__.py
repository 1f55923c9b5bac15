"""Simulation and verification lab for the directional slope field of
stationary planar Gaussian fields."""

__version__ = "0.1.0"
