"""Simulation and tuning toolkit for pulsed series-resonant clock trees."""

__version__ = "0.1.0"
