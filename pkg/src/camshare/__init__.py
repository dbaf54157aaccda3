"""Shared camera-control engine for a simulated arm-mounted camera."""

__version__ = "0.1.0"
