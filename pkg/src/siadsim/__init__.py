"""Packet-level dumbbell simulator and congestion-control library (SIAD plus loss-based baselines)."""

__version__ = "0.1.0"
