"""Controllability-aware skill discovery on small deterministic environments."""

__version__ = "0.1.0"
