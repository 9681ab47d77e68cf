"""Attacker domain-of-control extraction and control scoring."""

__version__ = "0.1.0"
