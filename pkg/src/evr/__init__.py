"""Simulator for a deposit-backed randomness escrow and its incentive analysis."""

__version__ = "0.1.0"
