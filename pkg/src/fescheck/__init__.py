"""Explicit-state checking of fair event systems with access-control policies."""

__version__ = "0.1.0"
