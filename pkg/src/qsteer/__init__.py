"""Quantum steering toolkit."""
